#include "zkline/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>

#include "zkline/coeffs.hpp"
#include "zkline/error.hpp"
#include "zkline/kdv_core.hpp"
#include "zkline/spectral.hpp"
#include "zkline/waves2d.hpp"

namespace zkline {

namespace {

// Tolerances.
constexpr double kW0Target = -1.5238;
constexpr double kW0Tol = 1e-3;
constexpr double kW0Limit = -32.0 / 21.0;
constexpr double kW0LimitTol = 1e-5;
constexpr std::size_t kFineNodes = 16001;
constexpr double kW2tTarget = 1.2359;
constexpr double kW2tTol = 1e-3;
constexpr double kGammaTarget = -13.99;
constexpr double kGammaTol = 0.05;
constexpr double kSlopeTol = 0.03;
constexpr double kThresholdTol = 1e-3;
constexpr double kOrderTarget = 2.0;
constexpr double kOrderTol = 0.1;
constexpr double kCoercivityTol = 1e-3;
constexpr double kBranchSlopeTol = 0.10;
constexpr double kRemainderSpread = 1.25;  // max / min of ||remainder|| / b^2
constexpr double kQDrift = 1e-9;
constexpr double kEDrift = 1e-7;
constexpr double kPropagation = 1e-6;
constexpr double kSaturationLo = 0.8;
constexpr double kSaturationHi = 1.2;
constexpr double kDecayRateTol = 0.15;
constexpr double kHalvingLo = 1.5;
constexpr double kHalvingHi = 3.0;
constexpr double kHDot = 12.0;
constexpr double kHDotTol = 0.15;
constexpr double kClosureTol = 5e-4;
constexpr double kDriftTol = 0.20;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const NormalFormCoeffs& default_coeffs() {
  static const NormalFormCoeffs k = compute_coefficients();
  return k;
}

CriterionResult coefficient_reproduction() {
  CriterionResult r{1, "coefficient reproduction", false, "", 0.0};
  const NormalFormCoeffs& k = default_coeffs();
  const Grid1D fine(50.0, kFineNodes);
  const Field1D psi = psi_star(fine);
  const double w0_fine = 0.2 * std::sqrt(kCriticalSpeed) * inner(hadamard(psi, psi), solve_w0(fine));
  const double w0 = k.scaled_w0();
  const double w2t = k.scaled_w2t();
  r.pass = std::abs(w0 - kW0Target) <= kW0Tol && std::abs(w0_fine - kW0Limit) <= kW0LimitTol &&
           std::abs(w2t - kW2tTarget) <= kW2tTol;
  r.detail = fmt("w0 %.6f (n=4001), %.8f (n=%zu) vs -32/21 = %.8f; w2~ %.6f", w0, w0_fine, kFineNodes, kW0Limit, w2t);
  return r;
}

CriterionResult sign_certificates() {
  CriterionResult r{2, "sign certificates", false, "", 0.0};
  const NormalFormCoeffs& k = default_coeffs();
  const NormalFormCoeffs conv = compute_coefficients(Grid1D(), SolveAccuracy::richardson);
  const double g = gamma_from_inner(conv.i_w2t);
  r.pass = k.alpha > 0.0 && k.beta < 0.0 && k.gamma < 0.0 && std::abs(g - kGammaTarget) <= kGammaTol;
  r.detail = fmt("alpha %.6g, beta %.6g, gamma %.6g; gamma from converged inner product %.6f", k.alpha, k.beta,
                 k.gamma, g);
  return r;
}

CriterionResult spectral_slope() {
  CriterionResult r{3, "spectral slope", false, "", 0.0};
  const SlopeFit fit = eigenvalue_slope({0.005, 0.01, 0.02, 0.04}, SpectralConfig{});
  const double target = lambda_prime_exact();
  const double err = std::abs(fit.slope / target - 1.0);
  r.pass = err <= kSlopeTol;
  r.detail = fmt("slope %.6f vs %.6f (rel. err %.3g)", fit.slope, target, err);
  return r;
}

CriterionResult thresholds() {
  CriterionResult r{4, "instability thresholds", true, "", 0.0};
  for (int k : {1, 2}) {
    const double ck = threshold_speed(k);
    SpectralConfig cfg;
    cfg.k = k;
    cfg.c = ck;
    const ThresholdBracket br = threshold_bisection(cfg, ck - 0.01, ck + 0.01, 1e-4);
    const double err = std::abs(br.estimate() - ck);
    r.pass = r.pass && err <= kThresholdTol;
    r.detail += fmt("%sk=%d onset %.6f vs %.6f", k == 1 ? "" : "; ", k, br.estimate(), ck);
  }
  return r;
}

CriterionResult jordan_coercivity() {
  CriterionResult r{5, "Jordan and coercivity certificates", true, "", 0.0};
  const Grid1D coarse(50.0, 2001);
  const JordanResiduals a = jordan_residuals(kCriticalSpeed, coarse);
  const JordanResiduals b = jordan_residuals(kCriticalSpeed, coarse.refined());
  const double p1 = std::log2(a.kernel / b.kernel);
  const double p2 = std::log2(a.generalized / b.generalized);
  r.pass = std::abs(p1 - kOrderTarget) <= kOrderTol && std::abs(p2 - kOrderTarget) <= kOrderTol;
  double worst = 0.0;
  for (int k = 0; k <= 4; ++k) worst = std::max(worst, std::abs(coercivity_spectrum(k) - (k * k - 1.0)));
  r.pass = r.pass && worst <= kCoercivityTol;
  r.detail = fmt("residual orders %.4f, %.4f; max |min eig - (k^2-1)| %.3g for k<=4", p1, p2, worst);
  return r;
}

CriterionResult bifurcation_branch() {
  CriterionResult r{6, "bifurcation branch", false, "", 0.0};
  const NormalFormCoeffs& k = default_coeffs();
  const auto branch = compute_branch({0.202, 0.205, 0.21, 0.215, 0.22}, Grid2D(), k);
  const BifurcationFit fit = bifurcation_fit(branch, k);
  const auto [lo, hi] = std::minmax_element(fit.remainder_constants.begin(), fit.remainder_constants.end());
  r.pass = fit.relative_error <= kBranchSlopeTol && fit.monotone && *hi / *lo <= kRemainderSpread;
  r.detail = fmt("b^2 slope %.6f vs alpha/|beta| %.6f (rel. err %.3g); A in [%.4g, %.4g]", fit.slope, fit.target,
                 fit.relative_error, *lo, *hi);
  return r;
}

CriterionResult conservation() {
  CriterionResult r{7, "conservation", false, "", 0.0};
  SimConfig cfg;
  cfg.t_end = 5000 * cfg.dt;
  cfg.snapshot_stride = 500;
  Simulator sim(cfg);
  sim.reset(init_perturbed_soliton(kCriticalSpeed, 0.05, cfg.grid).u);
  const SimState s0 = sim.state();
  double dq = 0.0, de = 0.0;
  sim.run([&](const SimState& s) {
    dq = std::max(dq, std::abs(s.momentum / s0.momentum - 1.0));
    de = std::max(de, std::abs(s.energy / s0.energy - 1.0));
  });
  const long steps = sim.step_count();

  SimConfig prop;
  prop.t_end = 10.0;
  Simulator ps(prop);
  ps.reset(init_perturbed_soliton(kCriticalSpeed, 0.0, prop.grid).u);
  ps.run(nullptr);
  const Field2D exact =
      Field2D::sample(prop.grid, [](double x, double) { return line_soliton(kCriticalSpeed, x - 0.8 * 10.0); });
  const double err = (ps.field() - exact).max_abs();
  r.pass = dq <= kQDrift && de <= kEDrift && err <= kPropagation;
  r.detail = fmt("%ld steps: Q drift %.3g, E drift %.3g; soliton sup error at t=10 %.3g", steps, dq, de, err);
  return r;
}

CriterionResult dynamics_vs_normal_form(std::ostream& out) {
  CriterionResult r{8, "dynamics vs normal form", false, "", 0.0};
  const NormalFormCoeffs& k = default_coeffs();

  const TrackedRun up = simulate_tracked(0.21, 0.03, dynamics_config(0.21, 400.0), k);
  out << "    c0=0.21 eps=0.03 T=400: " << up.report.to_json().dump() << '\n';
  const TrackedRun down = simulate_tracked(0.18, 0.03, dynamics_config(0.18, 200.0), k);
  out << "    c0=0.18 eps=0.03 T=200: " << down.report.to_json().dump() << '\n';
  // eps/2 at the same rescaled distance from threshold and rescaled time
  const TrackedRun half = simulate_tracked(0.2025, 0.015, dynamics_config(0.2025, 1600.0), k);
  out << "    c0=0.2025 eps=0.015 T=1600: " << half.report.to_json().dump() << '\n';

  const CompareReport& u = up.report;
  const CompareReport& d = down.report;
  const double halving = u.max_normalized_deviation / half.report.max_normalized_deviation;
  const bool grow = !up.track.truncated && u.monotone_growth && u.saturated && u.saturation_ratio >= kSaturationLo &&
                    u.saturation_ratio <= kSaturationHi;
  const bool decay = !down.track.truncated && d.monotone_decay && d.rate_relative_error <= kDecayRateTol;
  const bool scaling = !half.track.truncated && halving >= kHalvingLo && halving <= kHalvingHi;
  r.pass = grow && decay && scaling;
  r.detail = fmt(
      "saturation ratio %.4f (monotone %d); decay rates PDE %.5f NF %.5f (rel. err %.3g); deviation %.4f -> %.4f "
      "(factor %.3f)",
      u.saturation_ratio, u.monotone_growth ? 1 : 0, d.pde_rate, d.nf_rate, d.rate_relative_error,
      u.max_normalized_deviation, half.report.max_normalized_deviation, halving);
  return r;
}

CriterionResult internal_consistency(std::ostream& out) {
  CriterionResult r{9, "internal consistency", false, "", 0.0};
  const TrackedRun run = simulate_tracked(kCriticalSpeed, 0.05, dynamics_config(kCriticalSpeed, 400.0), default_coeffs());
  out << "    c0=0.2 eps=0.05 T=400: " << run.report.to_json().dump() << '\n';
  const CompareReport& c = run.report;
  const bool h_ok = std::abs(c.h_dot_ratio / kHDot - 1.0) <= kHDotTol;
  const bool closure_ok = c.closure_spread <= kClosureTol;
  const bool drift_ok = std::abs(c.drift_ratio - 1.0) <= kDriftTol;
  r.pass = !run.track.truncated && h_ok && closure_ok && drift_ok;
  r.detail = fmt("h-dot/|b|^2 %.4f; closure spread %.3g for t >= %.0f (%.3g incl. transient); drift ratio %.4f",
                 c.h_dot_ratio, c.closure_spread, CompareOptions{}.transient, c.closure_spread_full, c.drift_ratio);
  return r;
}

}  // namespace

TrackedRun simulate_tracked(double c0, double eps, const SimConfig& cfg, const NormalFormCoeffs& k) {
  Simulator sim(cfg);
  sim.reset(init_perturbed_soliton(c0, eps, cfg.grid).u);
  Tracker tracker(cfg.frame_velocity);
  TrackedRun run;
  sim.run([&](const SimState& s) {
    if (tracker.add(s.t, s.u)) run.momenta.push_back(s.momentum);
  });
  run.track = tracker.finish();
  CompareOptions opts;
  opts.epsilon = eps;
  run.report = compare(run.track, k, run.momenta, opts);
  return run;
}

SimConfig dynamics_config(double c0, double t_end) {
  SimConfig cfg;
  cfg.dt = 0.02;
  cfg.t_end = t_end;
  cfg.frame_velocity = 4.0 * c0;
  cfg.sponge_width = 30.0;
  cfg.sponge_rate = 0.5;
  cfg.snapshot_stride = std::max<std::size_t>(1, cfg.steps() / 400);
  return cfg;
}

std::string format_result(const CriterionResult& r) {
  return fmt("[%s] %d %s (%.1f s): %s", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds, r.detail.c_str());
}

std::vector<CriterionResult> run_acceptance(std::ostream& out, const std::set<int>& only) {
  struct Entry {
    int id;
    const char* name;
    std::function<CriterionResult()> fn;
  };
  const std::vector<Entry> all = {
      {1, "coefficient reproduction", coefficient_reproduction},
      {2, "sign certificates", sign_certificates},
      {3, "spectral slope", spectral_slope},
      {4, "instability thresholds", thresholds},
      {5, "Jordan and coercivity certificates", jordan_coercivity},
      {6, "bifurcation branch", bifurcation_branch},
      {7, "conservation", conservation},
      {8, "dynamics vs normal form", [&] { return dynamics_vs_normal_form(out); }},
      {9, "internal consistency", [&] { return internal_consistency(out); }},
  };
  std::vector<CriterionResult> results;
  for (const auto& [id, name, fn] : all) {
    if (!only.empty() && !only.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.id = id;
      r.name = name;
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << format_result(r) << std::endl;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace zkline
