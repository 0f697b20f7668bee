#include <iostream>
#include <set>
#include <string>

#include "zkline/acceptance.hpp"

// Usage: acceptance [criterion ids...]
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  const auto results = zkline::run_acceptance(std::cout, only);
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
