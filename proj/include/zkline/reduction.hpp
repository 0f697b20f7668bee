#pragma once

// Modulation parameters (a, c, b)(t) of simulated fields and the amplitude
// equation b' = lambda'(c*)(c+ - c*) b + gamma |b|^2 b.

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include <json.hpp>

#include "zkline/coeffs.hpp"
#include "zkline/grid2d.hpp"
#include "zkline/waves2d.hpp"
#include "zkline/zk_sim.hpp"

namespace zkline {

struct DecomposeOptions {
  double half_width = 50.0;     // inner-product window |x - X| <= half_width
  double tolerance = 1e-12;     // Newton stop on the constraint norm
  int max_iterations = 50;
  double max_relative_remainder = 0.5;  // v_norm / L2 norm of u_c on the window
};

struct ModulationFrame {
  double t = 0.0;
  double a = 0.0;             // X = 4a in the lab frame
  double c = 0.0;
  std::complex<double> b{};
  double v_norm = 0.0;        // L2 norm of u - u_c - (b e^{iy} + cc) psi* on the window
  std::array<double, 4> constraint_residuals{};
  double frame_position = 0.0;  // soliton centre in simulation coordinates
  int newton_iters = 0;

  double delta() const;
};

// Solves <u_c, u~> = <antiderivative of d_c u_c, u~> = 0 for (X, c) on the
// y-mean by damped Newton, then b from the eta*-projection of the y-mode 1.
// prev (warm start) may be empty; the seed is then cross-correlation for X
// and momentum matching for c.  frame_velocity maps simulation coordinates
// to the lab frame, X_lab = X_frame + V t.  Throws ConvergenceError on Newton
// failure or when the remainder leaves the soliton neighbourhood.
ModulationFrame decompose_frame(const Field2D& u, double t, double frame_velocity,
                                const std::optional<ModulationFrame>& prev,
                                const DecomposeOptions& opts = {});

struct ModulationTrack {
  std::vector<ModulationFrame> frames;
  std::vector<double> a_dot;      // centred differences, one-sided at the ends
  std::vector<double> h;          // a(t) - int_{t0}^t c
  std::vector<double> delta_closure;  // delta + (16/3)|b|^2
  double delta0 = 0.0;            // mean of delta_closure over the first quarter
  bool truncated = false;         // decomposition failed before the last snapshot
  std::string failure;

  std::size_t size() const { return frames.size(); }
  nlohmann::json summary() const;
};

// Derived series from decomposed frames (times strictly increasing, at least
// 10 frames; ConfigError otherwise).
ModulationTrack make_track(std::vector<ModulationFrame> frames);

// Incremental tracker; frames are decomposed with warm starts as they arrive.
class Tracker {
 public:
  explicit Tracker(double frame_velocity, DecomposeOptions opts = {});
  // Returns false (and marks the track truncated) on decomposition failure;
  // later calls are ignored.
  bool add(double t, const Field2D& u);
  // Derived series; needs at least 10 frames (ConfigError).
  ModulationTrack finish() const;
  std::size_t size() const { return frames_.size(); }

 private:
  double frame_velocity_;
  DecomposeOptions opts_;
  std::vector<ModulationFrame> frames_;
  bool truncated_ = false;
  std::string failure_;
};

ModulationTrack track(const std::vector<SimState>& snapshots, double frame_velocity,
                      const DecomposeOptions& opts = {});

struct NFParams {
  double c_star = 0.2;
  double lambda_prime = 0.0;
  double gamma = 0.0;
  double c_plus = 0.2;

  double lambda0() const { return lambda_prime * (c_plus - c_star); }
  // sqrt(lambda0 / |gamma|) when lambda0 > 0 and gamma < 0, else 0.
  double fixed_point() const;
  static NFParams from(const NormalFormCoeffs& k, double c_plus);
  nlohmann::json to_json() const;
};

std::complex<double> nf_rhs(std::complex<double> b, const NFParams& p);

struct NFTrajectory {
  std::vector<double> times;
  std::vector<std::complex<double>> b;
  NFParams params;
};

// Closed form through z = 1/|b|^2:  z' = -2 lambda0 z - 2 gamma.  times are
// measured from the moment b = b0.  Throws ConfigError for b0 = 0 and
// ConvergenceError if |b| blows up inside the interval.
NFTrajectory nf_solve(std::complex<double> b0, const NFParams& p, const std::vector<double>& times);

struct CompareOptions {
  double epsilon = 0.0;          // normalisation; 0 takes |b| of the first frame
  double tail_fraction = 0.1;    // saturation proxy: mean |b| over the last part
  double fit_fraction = 0.25;    // growth-rate fit window: first part of the track
  double saturation_margin = 0.05;  // NF must be this close to |b*| at the end
  double transient = 10.0;       // closure spread ignores frames with t - t0 below this
};

struct CompareReport {
  NFParams params;
  double epsilon = 0.0;
  double max_normalized_deviation = 0.0;  // max ||b_PDE| - |b_NF|| / eps^2
  double saturation_ratio = 0.0;          // tail mean |b_PDE| / |b*|
  bool saturated = true;                  // false: window too short, ratio unreliable
  double pde_rate = 0.0;                  // fitted d log|b| / dt
  double nf_rate = 0.0;
  double rate_relative_error = 0.0;
  bool monotone_growth = false;
  bool monotone_decay = false;
  double max_phase = 0.0;                 // max |arg b(t) - arg b(t0)|
  double h_dot_ratio = 0.0;               // regression slope of h on int |b|^2
  double closure_spread = 0.0;            // max |delta_closure - mean| after the transient
  double closure_spread_full = 0.0;       // same over the whole track
  double drift_ratio = 0.0;               // tail (a_dot - c*) / (-(beta/alpha)|b|^2)
  double momentum_closure = 0.0;          // max relative error of the momentum expansion
  NFTrajectory nf;

  nlohmann::json to_json() const;
};

// momenta: conserved Q of each frame (same length as the track) or empty.
CompareReport compare(const ModulationTrack& track, const NormalFormCoeffs& k,
                      const std::vector<double>& momenta = {}, const CompareOptions& opts = {});

// Normal-form saturation |b*|(c+) against the modulated wave whose speed is
// the saturated drift c* + delta0 + (20/3)|b*|^2.
struct WaveConsistency {
  double c_plus = 0.0;
  double nf_amplitude = 0.0;
  double wave_speed = 0.0;
  double wave_amplitude = 0.0;
  double relative_difference = 0.0;
};

WaveConsistency wave_consistency(double c_plus, const NormalFormCoeffs& k, const Grid2D& grid = Grid2D(),
                                 const WaveSolverOptions& opts = {});

}  // namespace zkline
