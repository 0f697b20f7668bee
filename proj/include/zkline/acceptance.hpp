#pragma once

// End-to-end checks with fixed tolerances, one result per criterion.

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "zkline/reduction.hpp"
#include "zkline/zk_sim.hpp"

namespace zkline {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Simulation of u_{c0} + 2 eps cos(y) psi* tracked snapshot by snapshot.
struct TrackedRun {
  ModulationTrack track;
  std::vector<double> momenta;
  CompareReport report;
};

// cfg.frame_velocity, sponge and stride are used as given.
TrackedRun simulate_tracked(double c0, double eps, const SimConfig& cfg, const NormalFormCoeffs& k);

// Settings shared by the dynamics criteria: default grid, dt = 0.02,
// co-moving frame 4 c0, sponge 30 / 0.5, about 400 snapshots.
SimConfig dynamics_config(double c0, double t_end);

// Runs the selected criteria (all when empty), printing one line per
// criterion to `out` as it finishes.
std::vector<CriterionResult> run_acceptance(std::ostream& out, const std::set<int>& only = {});

std::string format_result(const CriterionResult& r);

}  // namespace zkline
