#include "zkline/zk_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "zkline/error.hpp"
#include "zkline/kdv_core.hpp"

namespace zkline {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};
constexpr int kContourPoints = 32;

double largest_retained_kx(const Grid2D& g, bool dealias) {
  double k = 0.0;
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    if (ix == g.nx() / 2) continue;
    if (dealias && !dealias_keep(g, ix, 0)) continue;
    k = std::max(k, std::abs(g.kx(ix)));
  }
  return k;
}

bool is_nyquist(const Grid2D& g, std::size_t ix, std::size_t iy) {
  return ix == g.nx() / 2 || iy == g.ny() / 2;
}

double periodic_offset(double x, double center, double period) {
  double d = std::fmod(x - center, period);
  if (d < -0.5 * period) d += period;
  if (d >= 0.5 * period) d -= period;
  return d;
}

double soliton_d2(double c, double xi) {
  const double k = std::sqrt(c);
  const double s = sech(k * xi);
  const double t = std::tanh(k * xi);
  return -2.0 * c * k * k * s * s * (s * s - 2.0 * t * t);
}

}  // namespace

Integrator parse_integrator(const std::string& name) {
  if (name == "etd_rk4") return Integrator::etd_rk4;
  if (name == "if_rk4") return Integrator::if_rk4;
  throw ConfigError("unknown integrator '" + name + "' (expected etd_rk4 or if_rk4)");
}

std::string to_string(Integrator i) { return i == Integrator::etd_rk4 ? "etd_rk4" : "if_rk4"; }

double max_stable_dt(const Grid2D& grid, bool dealias, double amplitude) {
  return 2.8 / (12.0 * amplitude * largest_retained_kx(grid, dealias));
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be non-negative");
  if (dt > max_stable_dt(grid, dealias)) throw ConfigError("dt exceeds the advective stability bound");
  if (!std::isfinite(frame_velocity)) throw ConfigError("frame velocity must be finite");
  if (sponge_width < 0.0 || sponge_rate < 0.0) throw ConfigError("sponge parameters must be non-negative");
  if (sponge_width >= 0.25 * grid.lx()) throw ConfigError("sponge layer wider than a quarter of the box");
}

std::size_t SimConfig::steps() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }

nlohmann::json SimConfig::to_json() const {
  return {{"grid", grid.to_json()},
          {"dt", dt},
          {"t_end", t_end},
          {"dealias", dealias},
          {"snapshot_stride", snapshot_stride},
          {"integrator", to_string(integrator)},
          {"frame_velocity", frame_velocity},
          {"filter", filter},
          {"sponge_width", sponge_width},
          {"sponge_rate", sponge_rate}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> keys{"grid", "dt", "t_end", "dealias", "snapshot_stride", "integrator",
                                          "frame_velocity", "filter", "sponge_width", "sponge_rate"};
  if (!j.is_object()) throw ConfigError("simulation config must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw ConfigError("unknown simulation config key '" + k + "'");
  }
  SimConfig c;
  try {
    if (j.contains("grid")) c.grid = Grid2D::from_json(j["grid"]);
    c.dt = j.value("dt", c.dt);
    c.t_end = j.value("t_end", c.t_end);
    c.dealias = j.value("dealias", c.dealias);
    c.snapshot_stride = j.value("snapshot_stride", c.snapshot_stride);
    if (j.contains("integrator")) c.integrator = parse_integrator(j["integrator"].get<std::string>());
    c.frame_velocity = j.value("frame_velocity", c.frame_velocity);
    c.filter = j.value("filter", c.filter);
    c.sponge_width = j.value("sponge_width", c.sponge_width);
    c.sponge_rate = j.value("sponge_rate", c.sponge_rate);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<cplx> rhs_linear_symbol(const Grid2D& grid, double frame_velocity) {
  std::vector<cplx> l(grid.spectral_size());
  const std::size_t nyh = grid.spectral_ny();
  for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
    const double kx = grid.kx(ix);
    for (std::size_t iy = 0; iy < nyh; ++iy) {
      const double ky = grid.ky(iy);
      l[ix * nyh + iy] = kI * (kx * kx * kx + kx * ky * ky + frame_velocity * kx);
    }
  }
  return l;
}

double energy(const Field2D& u) {
  const Grid2D& g = u.grid();
  Fft2D fft(g);
  const Field2D ux = apply_symbol(fft, u, [](double kx, double) { return cplx(0.0, kx); }, true);
  const Field2D uy = apply_symbol(fft, u, [](double, double ky) { return cplx(0.0, ky); }, true);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += ux[i] * ux[i] + uy[i] * uy[i] - 4.0 * u[i] * u[i] * u[i];
  return 0.5 * s * g.cell_area();
}

double momentum(const Field2D& u) { return 0.5 * inner(u, u); }

namespace {

// y-Fourier coefficient of mode k at every x.
std::vector<cplx> y_mode(const Field2D& u, std::size_t k) {
  const Grid2D& g = u.grid();
  if (k > g.ny() / 2) throw ConfigError("transverse mode beyond the y-Nyquist index");
  std::vector<cplx> w(g.ny());
  for (std::size_t iy = 0; iy < g.ny(); ++iy) w[iy] = std::polar(1.0, -static_cast<double>(k) * g.y(iy));
  std::vector<cplx> m(g.nx());
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    cplx s = 0.0;
    for (std::size_t iy = 0; iy < g.ny(); ++iy) s += u.at(ix, iy) * w[iy];
    m[ix] = s / static_cast<double>(g.ny());
  }
  return m;
}

double mode_norm(const Field2D& u, std::size_t k, const std::function<bool(double)>& keep) {
  const Grid2D& g = u.grid();
  const auto m = y_mode(u, k);
  const double factor = (k == 0 || k == g.ny() / 2) ? 1.0 : 2.0;
  double s = 0.0;
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    if (keep(g.x(ix))) s += std::norm(m[ix]);
  }
  return std::sqrt(factor * 2.0 * kPi * g.dx() * s);
}

}  // namespace

double transverse_mode_norm(const Field2D& u, std::size_t k) {
  return mode_norm(u, k, [](double) { return true; });
}

double transverse_mode_norm(const Field2D& u, std::size_t k, double center, double half_width) {
  const double lx = u.grid().lx();
  return mode_norm(u, k, [=](double x) { return std::abs(periodic_offset(x, center, lx)) <= half_width; });
}

SimState init_perturbed_soliton(double c0, double eps, const Grid2D& grid, double x_center) {
  SolitonParams{c0, x_center}.validate();
  if (!(eps >= 0.0 && eps <= 0.2)) throw ConfigError("perturbation amplitude must lie in [0, 0.2]");
  const double lx = grid.lx();
  SimState s;
  s.u = Field2D::sample(grid, [=](double x, double y) {
    const double xi = periodic_offset(x, x_center, lx);
    return line_soliton(c0, xi) + 2.0 * eps * std::cos(y) * psi_star(xi);
  });
  s.energy = energy(s.u);
  s.momentum = momentum(s.u);
  return s;
}

double soliton_position(const Field2D& u, double c) {
  if (!(c > 0.0)) throw ConfigError("soliton speed must be positive");
  const Grid2D& g = u.grid();
  const std::vector<double> m = u.y_mean();
  const double lx = g.lx();
  auto corr = [&](double s, auto&& profile) {
    double acc = 0.0;
    for (std::size_t ix = 0; ix < g.nx(); ++ix) acc += m[ix] * profile(c, periodic_offset(g.x(ix), s, lx));
    return acc;
  };
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < g.nx(); ++j) {
    const double v = corr(g.x(j), [](double cc, double xi) { return line_soliton(cc, xi); });
    if (v > best_val) {
      best_val = v;
      best = j;
    }
  }
  double s = g.x(best);
  for (int it = 0; it < 50; ++it) {
    // C'(s) = -sum m u_c'(x - s), C''(s) = sum m u_c''(x - s)
    const double d1 = -corr(s, [](double cc, double xi) { return line_soliton_dxi(cc, xi); });
    const double d2 = corr(s, soliton_d2);
    if (!(d2 < 0.0)) throw ConvergenceError("soliton correlation is not concave at the peak");
    const double step = -d1 / d2;
    s += step;
    if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(s))) break;
  }
  return periodic_offset(s, 0.0, lx);
}

double reality_defect(const Grid2D& grid, std::span<const cplx> spec) {
  if (spec.size() != grid.spectral_size()) throw GridMismatch("spectrum size does not match grid");
  const std::size_t nyh = grid.spectral_ny();
  double scale = 0.0;
  for (const cplx& v : spec) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t iy : {std::size_t{0}, grid.ny() / 2}) {
    for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
      const std::size_t jx = (grid.nx() - ix) % grid.nx();
      worst = std::max(worst, std::abs(spec[ix * nyh + iy] - std::conj(spec[jx * nyh + iy])));
    }
  }
  return worst / scale;
}

// ---- Simulator ------------------------------------------------------------

struct Simulator::Work {
  explicit Work(const Grid2D& g) : fft(g) {}
  Fft2D fft;
  std::vector<cplx> e, e2, q, f1, f2, f3;
  std::vector<cplx> nl_mult;
  std::vector<double> mask;
  std::vector<double> filter;
  std::vector<double> sponge;
  std::vector<double> real, real2;
  std::vector<cplx> tmp, nu, a, na, b, nb, cc, nc, next;
};

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const Grid2D& g = cfg_.grid;
  work_ = std::make_unique<Work>(g);
  Work& w = *work_;
  const std::size_t ns = g.spectral_size(), nyh = g.spectral_ny();
  const double dt = cfg_.dt;
  const auto lin = rhs_linear_symbol(g, cfg_.frame_velocity);

  for (auto* v : {&w.e, &w.e2, &w.q, &w.f1, &w.f2, &w.f3, &w.nl_mult, &w.tmp, &w.nu, &w.a, &w.na, &w.b, &w.nb,
                  &w.cc, &w.nc, &w.next}) {
    v->assign(ns, 0.0);
  }
  w.mask.assign(ns, 1.0);
  w.filter.assign(ns, 1.0);
  w.real.assign(g.size(), 0.0);
  w.real2.assign(g.size(), 0.0);

  long mx_cut = 0, my_cut = 0;
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    if (ix == g.nx() / 2 || (cfg_.dealias && !dealias_keep(g, ix, 0))) continue;
    mx_cut = std::max(mx_cut, std::labs(g.mode_x(ix)));
  }
  for (std::size_t iy = 0; iy < nyh; ++iy) {
    if (iy == g.ny() / 2 || (cfg_.dealias && !dealias_keep(g, 0, iy))) continue;
    my_cut = std::max(my_cut, static_cast<long>(iy));
  }

  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    for (std::size_t iy = 0; iy < nyh; ++iy) {
      const std::size_t i = ix * nyh + iy;
      const bool keep = !is_nyquist(g, ix, iy) && (!cfg_.dealias || dealias_keep(g, ix, iy));
      w.mask[i] = keep ? 1.0 : 0.0;
      w.nl_mult[i] = keep ? -6.0 * kI * g.kx(ix) : 0.0;
      if (cfg_.filter && keep) {
        const double r = std::max(mx_cut ? std::labs(g.mode_x(ix)) / static_cast<double>(mx_cut) : 0.0,
                                  my_cut ? static_cast<double>(iy) / static_cast<double>(my_cut) : 0.0);
        if (r > 0.95) w.filter[i] = std::exp(-36.0 * std::pow((r - 0.95) / 0.05, 4));
      }

      const cplx z = lin[i] * dt;
      w.e[i] = std::exp(z);
      w.e2[i] = std::exp(0.5 * z);
      if (cfg_.integrator == Integrator::etd_rk4) {
        cplx sq = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        for (int p = 0; p < kContourPoints; ++p) {
          const cplx r = z + std::polar(1.0, kPi * (p + 0.5) / kContourPoints * 2.0);
          const cplx er = std::exp(r);
          const cplx r3 = r * r * r;
          sq += (std::exp(0.5 * r) - 1.0) / r;
          s1 += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
          s2 += (2.0 + r + er * (r - 2.0)) / r3;
          s3 += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
        }
        const double inv = dt / kContourPoints;
        w.q[i] = sq * inv;
        w.f1[i] = s1 * inv;
        w.f2[i] = s2 * inv;
        w.f3[i] = s3 * inv;
      }
    }
  }

  if (cfg_.sponge_width > 0.0 && cfg_.sponge_rate > 0.0) {
    w.sponge.assign(g.size(), 0.0);
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      const double d = 0.5 * g.lx() - std::abs(g.x(ix));
      if (d >= cfg_.sponge_width) continue;
      const double s = std::cos(0.5 * kPi * d / cfg_.sponge_width);
      for (std::size_t iy = 0; iy < g.ny(); ++iy) w.sponge[g.index(ix, iy)] = cfg_.sponge_rate * s * s;
    }
  }
  spec_.assign(ns, 0.0);
}

Simulator::~Simulator() = default;

void Simulator::reset(const Field2D& u0, double t0) {
  if (!(u0.grid() == cfg_.grid)) throw GridMismatch("initial field grid differs from simulation grid");
  if (!u0.all_finite()) throw ConfigError("initial field is not finite");
  work_->fft.forward(u0.values(), spec_);
  for (std::size_t i = 0; i < spec_.size(); ++i) spec_[i] *= work_->mask[i];
  t_ = t0;
  steps_ = 0;
}

void Simulator::nonlinear(std::span<const cplx> in, std::span<cplx> out) {
  Work& w = *work_;
  std::copy(in.begin(), in.end(), w.tmp.begin());
  w.fft.inverse(w.tmp, w.real);
  for (std::size_t i = 0; i < w.real.size(); ++i) w.real2[i] = w.real[i] * w.real[i];
  w.fft.forward(w.real2, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= w.nl_mult[i];
  if (!w.sponge.empty()) {
    for (std::size_t i = 0; i < w.real.size(); ++i) w.real2[i] = w.sponge[i] * w.real[i];
    w.fft.forward(w.real2, w.tmp);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= w.mask[i] * w.tmp[i];
  }
}

void Simulator::step() {
  Work& w = *work_;
  const std::size_t n = spec_.size();
  const std::vector<cplx>& u = spec_;
  nonlinear(u, w.nu);
  if (cfg_.integrator == Integrator::etd_rk4) {
    for (std::size_t i = 0; i < n; ++i) w.a[i] = w.e2[i] * u[i] + w.q[i] * w.nu[i];
    nonlinear(w.a, w.na);
    for (std::size_t i = 0; i < n; ++i) w.b[i] = w.e2[i] * u[i] + w.q[i] * w.na[i];
    nonlinear(w.b, w.nb);
    for (std::size_t i = 0; i < n; ++i) w.cc[i] = w.e2[i] * w.a[i] + w.q[i] * (2.0 * w.nb[i] - w.nu[i]);
    nonlinear(w.cc, w.nc);
    for (std::size_t i = 0; i < n; ++i) {
      w.next[i] = w.e[i] * u[i] + w.f1[i] * w.nu[i] + 2.0 * w.f2[i] * (w.na[i] + w.nb[i]) + w.f3[i] * w.nc[i];
    }
  } else {
    const double dt = cfg_.dt;
    for (std::size_t i = 0; i < n; ++i) w.a[i] = w.e2[i] * (u[i] + 0.5 * dt * w.nu[i]);
    nonlinear(w.a, w.na);
    for (std::size_t i = 0; i < n; ++i) w.b[i] = w.e2[i] * u[i] + 0.5 * dt * w.na[i];
    nonlinear(w.b, w.nb);
    for (std::size_t i = 0; i < n; ++i) w.cc[i] = w.e[i] * u[i] + w.e2[i] * dt * w.nb[i];
    nonlinear(w.cc, w.nc);
    for (std::size_t i = 0; i < n; ++i) {
      w.next[i] = w.e[i] * u[i] +
                  dt / 6.0 * (w.e[i] * w.nu[i] + 2.0 * w.e2[i] * (w.na[i] + w.nb[i]) + w.nc[i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    w.next[i] *= w.filter[i] * w.mask[i];
    if (!std::isfinite(w.next[i].real()) || !std::isfinite(w.next[i].imag())) {
      throw Error("non-finite state after step " + std::to_string(steps_ + 1) + " at t = " +
                  std::to_string(t_ + cfg_.dt) + "; last good state kept");
    }
  }
  spec_.swap(w.next);
  ++steps_;
  t_ += cfg_.dt;
}

void Simulator::run(const std::function<void(const SimState&)>& on_snapshot) {
  const std::size_t total = cfg_.steps();
  const double t0 = t_;
  if (on_snapshot) on_snapshot(state());
  for (std::size_t k = 1; k <= total; ++k) {
    step();
    t_ = t0 + static_cast<double>(k) * cfg_.dt;
    const bool snap = k == total || (cfg_.snapshot_stride > 0 && k % cfg_.snapshot_stride == 0);
    if (snap && on_snapshot) on_snapshot(state());
  }
}

Field2D Simulator::field() const {
  Field2D out(cfg_.grid);
  std::vector<cplx> copy = spec_;
  work_->fft.inverse(copy, out.values());
  return out;
}

SimState Simulator::state() const {
  SimState s;
  s.t = t_;
  s.u = field();
  s.energy = energy(s.u);
  s.momentum = momentum(s.u);
  s.step = steps_;
  return s;
}

SimState step(const SimState& state, const SimConfig& cfg) {
  Simulator sim(cfg);
  sim.reset(state.u, state.t);
  sim.step();
  SimState out = sim.state();
  out.step = state.step + 1;
  return out;
}

}  // namespace zkline
