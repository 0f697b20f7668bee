#include <doctest.h>

#include <cmath>
#include <numbers>

#include "zkline/error.hpp"
#include "zkline/kdv_core.hpp"
#include "zkline/spectral.hpp"
#include "zkline/zk_sim.hpp"

using namespace zkline;

namespace {

constexpr double kPi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double propagation_error(double dt, double t_end, Integrator integ) {
  SimConfig cfg;
  cfg.grid = Grid2D(200.0, 1024, 4);
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.integrator = integ;
  Simulator sim(cfg);
  sim.reset(init_perturbed_soliton(0.2, 0.0, cfg.grid).u);
  sim.run(nullptr);
  const Field2D exact = Field2D::sample(cfg.grid, [=](double x, double) { return line_soliton(0.2, x - 0.8 * t_end); });
  return (sim.field() - exact).max_abs();
}

}  // namespace

TEST_CASE("linear symbol") {
  const Grid2D g(200.0, 64, 8);
  const auto l = rhs_linear_symbol(g);
  const std::size_t nyh = g.spectral_ny();
  for (std::size_t iy = 0; iy < nyh; ++iy) CHECK(std::abs(l[iy]) == 0.0);
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    const double kx = g.kx(ix);
    CHECK(l[ix * nyh].real() == 0.0);
    CHECK(l[ix * nyh].imag() == doctest::Approx(kx * kx * kx));
    const std::size_t jx = (g.nx() - ix) % g.nx();
    if (ix == g.nx() / 2) continue;
    for (std::size_t iy = 0; iy < nyh; ++iy) CHECK(std::abs(l[jx * nyh + iy] + l[ix * nyh + iy]) <= 1e-9);
  }
  const auto moving = rhs_linear_symbol(g, 0.8);
  CHECK(moving[nyh].imag() - l[nyh].imag() == doctest::Approx(0.8 * g.kx(1)));
}

TEST_CASE("functionals") {
  const Grid2D g;
  const double c = 0.2;
  const Field2D u = Field2D::sample(g, [c](double x, double) { return line_soliton(c, x); });
  CHECK(std::abs(momentum(u) - 2 * kPi * (2.0 / 3.0) * std::pow(c, 1.5)) <= 1e-8);
  // int u_x^2 = int u^3 = 16/15 c^{5/2}
  CHECK(std::abs(energy(u) + 2 * kPi * 1.6 * std::pow(c, 2.5)) <= 1e-8);
  CHECK(momentum(Field2D(g)) == 0.0);
  CHECK(energy(Field2D(g)) == 0.0);
}

TEST_CASE("perturbed initial data") {
  const Grid2D g;
  const SimState pure = init_perturbed_soliton(0.21, 0.0, g, 1.5);
  const Field2D sol = Field2D::sample(g, [](double x, double) { return line_soliton(0.21, x - 1.5); });
  CHECK((pure.u - sol).max_abs() <= 1e-15);

  const double eps = 0.03;
  const SimState s = init_perturbed_soliton(0.21, eps, g, 1.5);
  CHECK(transverse_mode_norm(s.u, 1) > 0.0);
  for (std::size_t k = 2; k <= g.ny() / 2; ++k) CHECK(transverse_mode_norm(s.u, k) <= 1e-14);
  // Q gains 1/2 * 4 eps^2 * pi * ||psi*||^2
  const double dq = 2.0 * kPi * eps * eps * psi_norm2_exact();
  CHECK(rel(s.momentum - pure.momentum, dq) <= 1e-10);
  CHECK(rel(transverse_mode_norm(s.u, 1), 2.0 * eps * std::sqrt(kPi * psi_norm2_exact())) <= 1e-10);

  CHECK_THROWS_AS(init_perturbed_soliton(0.2, 0.3, g), ConfigError);
  CHECK_THROWS_AS(init_perturbed_soliton(0.0, 0.01, g), ConfigError);
}

TEST_CASE("config validation and serialization") {
  SimConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.dt = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SimConfig{};
  cfg.frame_velocity = 0.8;
  cfg.integrator = Integrator::if_rk4;
  cfg.sponge_width = 20.0;
  cfg.sponge_rate = 0.5;
  const SimConfig back = SimConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  auto j = cfg.to_json();
  j["dtt"] = 0.1;
  CHECK_THROWS_AS(SimConfig::from_json(j), ConfigError);
  CHECK_THROWS_AS(parse_integrator("rk45"), ConfigError);
  CHECK(max_stable_dt(Grid2D(), true) > 0.04);
}

TEST_CASE("zero field stays zero") {
  SimConfig cfg;
  cfg.grid = Grid2D(200.0, 256, 8);
  cfg.t_end = 0.05;
  Simulator sim(cfg);
  sim.reset(Field2D(cfg.grid));
  sim.run(nullptr);
  CHECK(sim.field().max_abs() == 0.0);
}

TEST_CASE("small Fourier mode rotates with the linear symbol") {
  SimConfig cfg;
  cfg.grid = Grid2D(200.0, 256, 8);
  cfg.dt = 0.01;
  cfg.frame_velocity = 0.3;
  const double amp = 1e-8;
  const double kx = 2 * kPi / 200.0 * 5;
  const Field2D u0 = Field2D::sample(cfg.grid, [=](double x, double y) { return amp * std::cos(kx * x + y); });
  for (Integrator integ : {Integrator::etd_rk4, Integrator::if_rk4}) {
    cfg.integrator = integ;
    Simulator sim(cfg);
    sim.reset(u0);
    sim.step();
    // cos(kx x + y) carries frequency kx^3 + kx + V kx
    const double omega = kx * kx * kx + kx + cfg.frame_velocity * kx;
    const Field2D exact = Field2D::sample(
        cfg.grid, [=](double x, double y) { return amp * std::cos(kx * x + y + omega * cfg.dt); });
    CHECK((sim.field() - exact).max_abs() <= 1e-10 * amp);
  }
}

TEST_CASE("free step matches the simulator") {
  SimConfig cfg;
  cfg.grid = Grid2D(200.0, 256, 8);
  cfg.dt = 0.01;
  const SimState s0 = init_perturbed_soliton(0.2, 0.05, cfg.grid);
  Simulator sim(cfg);
  sim.reset(s0.u);
  sim.step();
  const SimState s1 = step(s0, cfg);
  CHECK((s1.u - sim.field()).max_abs() == 0.0);
  CHECK(s1.step == 1);
  CHECK(s1.t == doctest::Approx(0.01));
}

TEST_CASE("conservation and reality over 5000 default steps") {
  SimConfig cfg;
  cfg.t_end = 5000 * cfg.dt;
  cfg.snapshot_stride = 1000;
  REQUIRE(cfg.steps() == 5000);
  Simulator sim(cfg);
  const SimState s0 = init_perturbed_soliton(0.2, 0.05, cfg.grid);
  sim.reset(s0.u);
  const SimState first = sim.state();
  double q_drift = 0.0, e_drift = 0.0, defect = 0.0;
  int snaps = 0;
  sim.run([&](const SimState& s) {
    ++snaps;
    q_drift = std::max(q_drift, rel(s.momentum, first.momentum));
    e_drift = std::max(e_drift, rel(s.energy, first.energy));
    defect = std::max(defect, reality_defect(cfg.grid, sim.spectrum()));
  });
  CHECK(snaps == 6);
  CHECK(q_drift <= 1e-9);
  CHECK(e_drift <= 1e-7);
  CHECK(defect <= 1e-12);
  CHECK(sim.step_count() == 5000);
}

TEST_CASE("line soliton travels at 4c") {
  CHECK(propagation_error(5e-4, 10.0, Integrator::etd_rk4) <= 1e-6);

  SimConfig cfg;
  cfg.grid = Grid2D(200.0, 1024, 4);
  cfg.dt = 0.01;
  cfg.t_end = 10.0;
  Simulator sim(cfg);
  sim.reset(init_perturbed_soliton(0.2, 0.0, cfg.grid).u);
  sim.run(nullptr);
  CHECK(std::abs(soliton_position(sim.field(), 0.2) - 8.0) <= 1e-8);
}

TEST_CASE("fourth-order convergence under dt halving") {
  for (Integrator integ : {Integrator::etd_rk4, Integrator::if_rk4}) {
    const double e1 = propagation_error(0.02, 4.0, integ);
    const double e2 = propagation_error(0.01, 4.0, integ);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.15));
  }
}

TEST_CASE("soliton position by cross-correlation") {
  const Grid2D g;
  const Field2D u = Field2D::sample(g, [](double x, double y) { return line_soliton(0.23, x - 3.7) + 1e-3 * std::cos(y); });
  CHECK(std::abs(soliton_position(u, 0.23) - 3.7) <= 1e-10);
  const Field2D wrapped = Field2D::sample(g, [](double x, double) { return line_soliton(0.2, x + 99.0) + line_soliton(0.2, x - 101.0); });
  CHECK(std::abs(soliton_position(wrapped, 0.2) + 99.0) <= 1e-10);
}

TEST_CASE("non-finite state aborts and keeps the last good state") {
  SimConfig cfg;
  cfg.grid = Grid2D(200.0, 256, 8);
  cfg.dt = 0.02;
  cfg.dealias = false;
  Simulator sim(cfg);
  sim.reset(Field2D::sample(cfg.grid, [](double x, double) { return 50.0 * std::exp(-x * x); }));
  long good = 0;
  Field2D last;
  try {
    for (int i = 0; i < 10000; ++i) {
      last = sim.field();
      good = sim.step_count();
      sim.step();
    }
    FAIL("expected blow-up");
  } catch (const Error&) {
    CHECK(sim.step_count() == good);
    CHECK(sim.field().all_finite());
    CHECK((sim.field() - last).max_abs() == 0.0);
  }
  Field2D bad(cfg.grid);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(sim.reset(bad), ConfigError);
}

TEST_CASE("transverse instability onset") {
  SimConfig cfg;
  cfg.grid = Grid2D(200.0, 1024, 8);
  cfg.dt = 0.01;
  cfg.t_end = 100.0;
  cfg.snapshot_stride = 5000;

  auto windowed_mode1 = [&](double c0) {
    cfg.frame_velocity = 4.0 * c0;
    Simulator sim(cfg);
    sim.reset(init_perturbed_soliton(c0, 1e-4, cfg.grid).u);
    std::vector<double> amps;
    sim.run([&](const SimState& s) { amps.push_back(transverse_mode_norm(s.u, 1, 0.0, 20.0)); });
    return amps;
  };

  SpectralConfig sc;
  sc.c = 0.22;
  const SpectralResult r = unstable_eigenvalue(sc);
  REQUIRE(r.unstable.has_value());
  // mode-1 energy ~ amplitude^2 grows at 2 lambda; fit on t in [50, 100]
  const auto up = windowed_mode1(0.22);
  REQUIRE(up.size() == 3);
  const double energy_rate = 2.0 * std::log(up[2] / up[1]) / 50.0;
  CHECK(rel(energy_rate, 2.0 * r.unstable->lambda) <= 0.10);

  const auto down = windowed_mode1(0.18);
  CHECK(down[2] < down[0]);
  CHECK(down[1] < down[0]);
}
