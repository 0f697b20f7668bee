#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "zkline/coeffs.hpp"
#include "zkline/error.hpp"
#include "zkline/kdv_core.hpp"
#include "zkline/reduction.hpp"
#include "zkline/zk_sim.hpp"

using namespace zkline;
using cplx = std::complex<double>;

namespace {

constexpr double kCs = 0.2;

const NormalFormCoeffs& coeffs() {
  static const NormalFormCoeffs k = compute_coefficients();
  return k;
}

NFParams params(double c_plus) {
  NFParams p;
  p.c_star = kCs;
  p.lambda_prime = lambda_prime_exact();
  p.gamma = -13.99228;
  p.c_plus = c_plus;
  return p;
}

cplx rk4_oracle(cplx b, const NFParams& p, double t_end, int steps) {
  const double h = t_end / steps;
  auto f = [&](cplx z) { return p.lambda0() * z + p.gamma * std::norm(z) * z; };
  for (int i = 0; i < steps; ++i) {
    const cplx k1 = f(b);
    const cplx k2 = f(b + 0.5 * h * k1);
    const cplx k3 = f(b + 0.5 * h * k2);
    const cplx k4 = f(b + h * k3);
    b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return b;
}

struct Run {
  ModulationTrack track;
  std::vector<double> momenta;
};

Run simulate_and_track(double c0, double eps, double t_end, double dt, std::size_t stride) {
  SimConfig cfg;
  cfg.grid = Grid2D(200.0, 1024, 8);
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.snapshot_stride = stride;
  cfg.frame_velocity = 4.0 * c0;
  cfg.sponge_width = 30.0;
  cfg.sponge_rate = 0.5;
  Simulator sim(cfg);
  sim.reset(init_perturbed_soliton(c0, eps, cfg.grid).u);
  Tracker tracker(cfg.frame_velocity);
  Run run;
  sim.run([&](const SimState& s) {
    if (tracker.add(s.t, s.u)) run.momenta.push_back(s.momentum);
  });
  run.track = tracker.finish();
  return run;
}

}  // namespace

TEST_CASE("decomposition of a pure line soliton") {
  const Grid2D g;
  const Field2D u = Field2D::sample(g, [](double x, double) { return line_soliton(0.21, x - 1.2); });
  const ModulationFrame f = decompose_frame(u, 0.0, 0.0, std::nullopt);
  CHECK(std::abs(f.a - 0.3) <= 1e-10);
  CHECK(std::abs(f.c - 0.21) <= 1e-10);
  CHECK(std::abs(f.b) <= 1e-14);
  CHECK(f.v_norm <= 1e-8);
  for (double r : f.constraint_residuals) CHECK(std::abs(r) <= 1e-8);

  // lab position X + V t
  const ModulationFrame moving = decompose_frame(u, 10.0, 0.8, std::nullopt);
  CHECK(std::abs(moving.a - (1.2 + 8.0) / 4.0) <= 1e-10);
  CHECK(std::abs(moving.frame_position - 1.2) <= 1e-10);
}

TEST_CASE("decomposition of perturbed initial data") {
  const Grid2D g;
  for (double eps : {0.01, 0.05}) {
    const SimState s = init_perturbed_soliton(kCs, eps, g);
    const ModulationFrame f = decompose_frame(s.u, 0.0, 0.0, std::nullopt);
    CHECK(std::abs(f.c - kCs) <= 1e-10);
    CHECK(std::abs(f.b - cplx(eps, 0.0)) <= 1e-8);
    CHECK(std::abs(f.a) <= 1e-10);
    CHECK(f.v_norm <= 1e-8);
  }
}

TEST_CASE("translation shifts a by a quarter of the shift") {
  const Grid2D g;
  const double s = 7.3;
  const ModulationFrame f0 = decompose_frame(init_perturbed_soliton(0.205, 0.02, g).u, 0.0, 0.0, std::nullopt);
  const ModulationFrame f1 = decompose_frame(init_perturbed_soliton(0.205, 0.02, g, s).u, 0.0, 0.0, std::nullopt);
  CHECK(std::abs(f1.a - f0.a - s / 4.0) <= 1e-10);
  CHECK(std::abs(f1.c - f0.c) <= 1e-10);
  CHECK(std::abs(f1.b - f0.b) <= 1e-10);
}

TEST_CASE("constraints hold on a generic nearby field") {
  const Grid2D g;
  const Field2D u = Field2D::sample(g, [](double x, double y) {
    const double bump = 0.01 * std::exp(-(x - 3.0) * (x - 3.0));
    return line_soliton(0.19, x + 2.0) + 0.02 * std::sin(y + 0.4) * psi_star(std::sqrt(kCs / 0.19) * (x + 2.0)) +
           bump * (1.0 + std::cos(2.0 * y));
  });
  const ModulationFrame f = decompose_frame(u, 0.0, 0.0, std::nullopt);
  for (double r : f.constraint_residuals) CHECK(std::abs(r) <= 1e-8);
  CHECK(std::abs(f.b) > 0.0);
  CHECK(f.v_norm > 0.0);

  // warm start reaches the same frame
  ModulationFrame seed = f;
  seed.a += 0.05;
  seed.c -= 0.002;
  const ModulationFrame g2 = decompose_frame(u, 0.0, 0.0, seed);
  CHECK(std::abs(g2.a - f.a) <= 1e-10);
  CHECK(std::abs(g2.c - f.c) <= 1e-10);
}

TEST_CASE("decomposition failures") {
  const Grid2D g;
  CHECK_THROWS_AS(decompose_frame(Field2D(g), 0.0, 0.0, std::nullopt), ConvergenceError);
  const Field2D far = Field2D::sample(g, [](double x, double y) {
    return line_soliton(0.2, x) + 0.4 * std::cos(2.0 * y) * std::exp(-x * x / 4.0);
  });
  CHECK_THROWS_AS(decompose_frame(far, 0.0, 0.0, std::nullopt), ConvergenceError);
  DecomposeOptions bad;
  bad.half_width = 0.0;
  CHECK_THROWS_AS(decompose_frame(init_perturbed_soliton(kCs, 0.0, g).u, 0.0, 0.0, std::nullopt, bad), ConfigError);
}

TEST_CASE("track construction") {
  std::vector<ModulationFrame> frames(5);
  CHECK_THROWS_AS(make_track(frames), ConfigError);
  frames.resize(12);
  for (std::size_t j = 0; j < frames.size(); ++j) frames[j].t = static_cast<double>(j);
  frames[6].t = 5.0;
  CHECK_THROWS_AS(make_track(frames), ConfigError);
  Tracker tracker(0.0);
  CHECK_THROWS_AS(tracker.finish(), ConfigError);
}

TEST_CASE("amplitude equation right-hand side") {
  const NFParams p = params(0.21);
  CHECK(nf_rhs(cplx(0.0, 0.0), p) == cplx(0.0, 0.0));
  const cplx b(0.01, -0.02);
  const cplx expected = p.lambda_prime * 0.01 * b + p.gamma * std::norm(b) * b;
  CHECK(std::abs(nf_rhs(b, p) - expected) <= 1e-18);
  const double bs = p.fixed_point();
  CHECK(std::abs(nf_rhs(cplx(0.0, bs), p)) <= 1e-16);
  CHECK(params(0.19).fixed_point() == 0.0);
  CHECK(bs == doctest::Approx(0.037172).epsilon(1e-4));
}

TEST_CASE("closed-form amplitude against RK4") {
  for (double cp : {0.21, 0.19, 0.2}) {
    const NFParams p = params(cp);
    const double l0 = std::abs(p.lambda0()) > 0.0 ? std::abs(p.lambda0()) : 0.02;
    const double t_end = 10.0 / l0;
    const cplx b0 = std::polar(0.01, 0.7);
    const NFTrajectory tr = nf_solve(b0, p, {0.0, 0.5 * t_end, t_end});
    CHECK(tr.b.front() == b0);
    CHECK(std::abs(tr.b.back() - rk4_oracle(b0, p, t_end, 20000)) <= 1e-12);
    for (const cplx& b : tr.b) CHECK(std::abs(std::arg(b) - 0.7) <= 1e-12);
  }
  // growth saturates at b*, decay below threshold
  const NFParams up = params(0.21);
  const NFTrajectory sat = nf_solve(cplx(1e-3, 0.0), up, {0.0, 2000.0});
  CHECK(std::abs(std::abs(sat.b.back()) - up.fixed_point()) <= 1e-10);
  const NFParams down = params(0.19);
  const NFTrajectory dec = nf_solve(cplx(0.03, 0.0), down, {0.0, 50.0, 100.0});
  CHECK(std::abs(dec.b[1]) <= 0.03 * std::exp(down.lambda0() * 50.0));
  CHECK(std::abs(dec.b[2]) < std::abs(dec.b[1]));

  CHECK_THROWS_AS(nf_solve(cplx(0.0, 0.0), up, {0.0, 1.0}), ConfigError);
  NFParams blow = up;
  blow.gamma = 13.99228;
  CHECK_THROWS_AS(nf_solve(cplx(0.1, 0.0), blow, {0.0, 1000.0}), ConvergenceError);
}

TEST_CASE("comparison on a track generated by the amplitude equation") {
  const NormalFormCoeffs& k = coeffs();
  const double delta0 = 0.01;
  const NFParams p = NFParams::from(k, k.c_star + delta0);
  std::vector<double> times;
  for (int j = 0; j <= 4000; ++j) times.push_back(0.25 * j);
  const NFTrajectory nf = nf_solve(cplx(0.01, 0.0), p, times);

  std::vector<ModulationFrame> frames(times.size());
  double a = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double b2 = std::norm(nf.b[j]);
    frames[j].t = times[j];
    frames[j].b = nf.b[j];
    frames[j].c = k.c_star + delta0 - 16.0 / 3.0 * b2;
    if (j > 0) {
      const double prev = frames[j - 1].c + 12.0 * std::norm(nf.b[j - 1]);
      a += 0.5 * (prev + frames[j].c + 12.0 * b2) * (times[j] - times[j - 1]);
    }
    frames[j].a = a;
  }
  const CompareReport r = compare(make_track(frames), k);
  CHECK(r.params.c_plus == doctest::Approx(k.c_star + delta0).epsilon(1e-12));
  CHECK(r.max_normalized_deviation <= 1e-9);
  CHECK(r.saturation_ratio == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.saturated);
  CHECK(r.rate_relative_error <= 1e-12);
  CHECK(r.monotone_growth);
  CHECK_FALSE(r.monotone_decay);
  CHECK(r.max_phase == 0.0);
  CHECK(r.h_dot_ratio == doctest::Approx(12.0).epsilon(1e-9));
  CHECK(r.closure_spread <= 1e-15);
  // saturated drift from (lambda', gamma) against -(beta/alpha)
  CHECK(r.drift_ratio == doctest::Approx(1.0).epsilon(5e-3));
  CHECK(r.to_json().contains("closure_spread_full"));
}

TEST_CASE("pure line soliton track") {
  const Run run = simulate_and_track(0.2, 0.0, 20.0, 0.02, 50);
  const ModulationTrack& tr = run.track;
  REQUIRE(tr.size() == 21);
  CHECK_FALSE(tr.truncated);
  for (std::size_t j = 0; j < tr.size(); ++j) {
    CHECK(std::abs(tr.h[j] - tr.h[0]) <= 1e-6);
    CHECK(std::abs(tr.frames[j].b) <= 1e-12);
    CHECK(std::abs(tr.a_dot[j] - 0.2) <= 1e-6);
  }
}

TEST_CASE("short unstable run follows the amplitude equation") {
  const Run run = simulate_and_track(0.21, 0.03, 100.0, 0.02, 50);
  const ModulationTrack& tr = run.track;
  REQUIRE_FALSE(tr.truncated);
  for (const auto& f : tr.frames) {
    for (double r : f.constraint_residuals) CHECK(std::abs(r) <= 1e-8);
  }
  CompareOptions opts;
  opts.epsilon = 0.03;
  const CompareReport r = compare(tr, coeffs(), run.momenta, opts);
  CHECK(r.monotone_growth);
  CHECK(r.max_phase <= 1e-6);
  CHECK(r.rate_relative_error <= 0.1);
  CHECK(r.h_dot_ratio == doctest::Approx(12.0).epsilon(0.15));
  CHECK(r.closure_spread <= 5e-4);
  CHECK(r.momentum_closure <= 1e-2);
}

TEST_CASE("closure offset shrinks like eps^4") {
  auto offset = [](double eps) {
    const Run run = simulate_and_track(kCs, eps, 20.0, 0.02, 25);
    const ModulationTrack& tr = run.track;
    double mean = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < tr.size(); ++j) {
      if (tr.frames[j].t < 10.0) continue;
      mean += tr.delta_closure[j];
      ++count;
    }
    return std::abs(mean / count - tr.delta_closure.front());
  };
  const double d1 = offset(0.025);
  const double d2 = offset(0.0125);
  CHECK(d1 <= 5e-4);
  CHECK(d1 / d2 >= 8.0);
}

TEST_CASE("saturated amplitude against modulated waves") {
  for (double dc : {0.005, 0.01, 0.02}) {
    const WaveConsistency w = wave_consistency(kCs + dc, coeffs());
    CHECK(w.relative_difference <= 0.25);
    CHECK(w.wave_speed > kCs + dc);
  }
  CHECK_THROWS_AS(wave_consistency(0.19, coeffs()), ConfigError);
}
