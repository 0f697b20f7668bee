#include "cli.hpp"

int main(int argc, char** argv) { return zkline::cli::run(argc, argv); }
