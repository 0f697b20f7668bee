#include "zkline/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "zkline/error.hpp"
#include "zkline/kdv_core.hpp"

namespace zkline {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

double wrap(double d, double period) {
  d = std::fmod(d, period);
  if (d < -0.5 * period) d += period;
  if (d >= 0.5 * period) d -= period;
  return d;
}

// y-mean and y-mode-1 coefficient of u at every x.
struct Profiles {
  std::vector<double> mean;
  std::vector<cplx> mode1;
};

Profiles profiles(const Field2D& u) {
  const Grid2D& g = u.grid();
  Profiles p{u.y_mean(), std::vector<cplx>(g.nx())};
  std::vector<cplx> w(g.ny());
  for (std::size_t iy = 0; iy < g.ny(); ++iy) w[iy] = std::polar(1.0, -g.y(iy));
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    cplx s = 0.0;
    for (std::size_t iy = 0; iy < g.ny(); ++iy) s += u.at(ix, iy) * w[iy];
    p.mode1[ix] = s / static_cast<double>(g.ny());
  }
  return p;
}

// Window of nodes within half_width of a centre, with unwrapped coordinates.
struct Window {
  std::vector<std::size_t> index;
  std::vector<double> x;  // centre + periodic offset
};

Window make_window(const Grid2D& g, double center, double half_width) {
  Window w;
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    const double d = wrap(g.x(ix) - center, g.lx());
    if (std::abs(d) <= half_width) {
      w.index.push_back(ix);
      w.x.push_back(center + d);
    }
  }
  return w;
}

struct Constraints {
  double g1 = 0.0, g2 = 0.0;
  double norm() const { return std::hypot(g1, g2); }
};

Constraints constraints(const Window& w, const std::vector<double>& mean, double dx, double x0, double c) {
  Constraints r;
  for (std::size_t j = 0; j < w.index.size(); ++j) {
    const double xi = w.x[j] - x0;
    const double uc = line_soliton(c, xi);
    const double rem = mean[w.index[j]] - uc;
    r.g1 += uc * rem;
    r.g2 += line_soliton_dc_antiderivative(c, xi) * rem;
  }
  r.g1 *= 2.0 * kPi * dx;
  r.g2 *= 2.0 * kPi * dx;
  return r;
}

void check_speed(double c) {
  if (!(c > 0.05 && c < 1.0)) throw ConvergenceError("extracted speed left (0.05, 1)");
}

// Damped Newton in (X, c) with a central-difference Jacobian.
int solve_xc(const Window& w, const std::vector<double>& mean, double dx, double& x0, double& c,
             const DecomposeOptions& opts) {
  Constraints g = constraints(w, mean, dx, x0, c);
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (g.norm() <= opts.tolerance) return it;
    const double hx = 1e-6, hc = 1e-7;
    const Constraints xp = constraints(w, mean, dx, x0 + hx, c), xm = constraints(w, mean, dx, x0 - hx, c);
    const Constraints cp = constraints(w, mean, dx, x0, c + hc), cm = constraints(w, mean, dx, x0, c - hc);
    const double j11 = (xp.g1 - xm.g1) / (2 * hx), j12 = (cp.g1 - cm.g1) / (2 * hc);
    const double j21 = (xp.g2 - xm.g2) / (2 * hx), j22 = (cp.g2 - cm.g2) / (2 * hc);
    const double det = j11 * j22 - j12 * j21;
    if (!std::isfinite(det) || det == 0.0) throw ConvergenceError("singular modulation Jacobian");
    double sx = -(j22 * g.g1 - j12 * g.g2) / det;
    double sc = -(-j21 * g.g1 + j11 * g.g2) / det;
    double scale = 1.0;
    Constraints trial;
    int halvings = 0;
    for (;;) {
      const double ct = c + scale * sc;
      if (ct > 0.05 && ct < 1.0) {
        trial = constraints(w, mean, dx, x0 + scale * sx, ct);
        if (trial.norm() < g.norm()) break;
      }
      if (++halvings > 30) {
        // no decrease: accept only a converged floor
        if (g.norm() <= 1e3 * opts.tolerance) return it;
        throw ConvergenceError("modulation Newton stalled at constraint norm " + std::to_string(g.norm()));
      }
      scale *= 0.5;
    }
    x0 += scale * sx;
    c += scale * sc;
    g = trial;
  }
  if (g.norm() <= opts.tolerance) return opts.max_iterations;
  throw ConvergenceError("modulation Newton did not converge, constraint norm " + std::to_string(g.norm()));
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

double ModulationFrame::delta() const { return c - kCriticalSpeed; }

ModulationFrame decompose_frame(const Field2D& u, double t, double frame_velocity,
                                const std::optional<ModulationFrame>& prev, const DecomposeOptions& opts) {
  if (!(opts.half_width > 0.0) || opts.half_width > 0.5 * u.grid().lx()) {
    throw ConfigError("decomposition window must lie inside the box");
  }
  if (!u.all_finite()) throw ConvergenceError("field is not finite");
  const Grid2D& g = u.grid();
  const double dx = g.dx();
  const Profiles p = profiles(u);

  double c = 0.0, x0 = 0.0;
  if (prev) {
    c = prev->c;
    x0 = prev->frame_position + (4.0 * prev->c - frame_velocity) * (t - prev->t);
  } else {
    double q = 0.0;
    for (double v : p.mean) q += v * v;
    q *= 0.5 * dx;  // line momentum (2/3) c^{3/2}
    c = std::pow(1.5 * q, 2.0 / 3.0);
    check_speed(c);
    x0 = soliton_position(u, c);
  }

  int iters = 0;
  for (int pass = 0; pass < 2; ++pass) {
    const Window w = make_window(g, x0, opts.half_width);
    iters += solve_xc(w, p.mean, dx, x0, c, opts);
  }
  check_speed(c);
  if (prev) {
    x0 = prev->frame_position + wrap(x0 - prev->frame_position, g.lx());
  } else {
    x0 = wrap(x0, g.lx());
  }

  const Window w = make_window(g, x0, opts.half_width);
  cplx num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < w.index.size(); ++j) {
    const double xi = w.x[j] - x0;
    const double eta = eta_star(xi);
    num += eta * p.mode1[w.index[j]];
    den += eta * psi_star(xi);
  }
  const cplx b = num / den;

  ModulationFrame f;
  f.t = t;
  f.c = c;
  f.b = b;
  f.frame_position = x0;
  f.a = 0.25 * (x0 + frame_velocity * t);
  f.newton_iters = iters;

  double v2 = 0.0, uc2 = 0.0;
  cplx proj = 0.0;
  for (std::size_t j = 0; j < w.index.size(); ++j) {
    const double xi = w.x[j] - x0;
    const double uc = line_soliton(c, xi);
    const double psi = psi_star(xi);
    const std::size_t ix = w.index[j];
    for (std::size_t iy = 0; iy < g.ny(); ++iy) {
      const double y = g.y(iy);
      const double v = u.at(ix, iy) - uc - 2.0 * (b.real() * std::cos(y) - b.imag() * std::sin(y)) * psi;
      v2 += v * v;
    }
    uc2 += uc * uc;
    proj += eta_star(xi) * (p.mode1[ix] - b * psi);
  }
  f.v_norm = std::sqrt(v2 * g.cell_area());
  const double uc_norm = std::sqrt(uc2 * dx * 2.0 * kPi);
  const Constraints gc = constraints(w, p.mean, dx, x0, c);
  proj *= 2.0 * kPi * dx;
  f.constraint_residuals = {gc.g1, gc.g2, proj.real(), proj.imag()};
  if (!(f.v_norm < opts.max_relative_remainder * uc_norm)) {
    throw ConvergenceError("remainder norm " + std::to_string(f.v_norm) + " left the soliton neighbourhood");
  }
  return f;
}

// ---- track ----------------------------------------------------------------

nlohmann::json ModulationTrack::summary() const {
  return {{"frames", frames.size()},
          {"delta0", delta0},
          {"truncated", truncated},
          {"failure", failure},
          {"t_first", frames.empty() ? 0.0 : frames.front().t},
          {"t_last", frames.empty() ? 0.0 : frames.back().t}};
}

Tracker::Tracker(double frame_velocity, DecomposeOptions opts)
    : frame_velocity_(frame_velocity), opts_(opts) {}

bool Tracker::add(double t, const Field2D& u) {
  if (truncated_) return false;
  if (!frames_.empty() && !(t > frames_.back().t)) throw ConfigError("snapshot times must increase strictly");
  try {
    std::optional<ModulationFrame> prev;
    if (!frames_.empty()) prev = frames_.back();
    frames_.push_back(decompose_frame(u, t, frame_velocity_, prev, opts_));
    return true;
  } catch (const ConvergenceError& e) {
    truncated_ = true;
    failure_ = "t = " + std::to_string(t) + ": " + e.what();
    return false;
  }
}

ModulationTrack make_track(std::vector<ModulationFrame> frames) {
  if (frames.size() < 10) throw ConfigError("a modulation track needs at least 10 frames");
  for (std::size_t j = 1; j < frames.size(); ++j) {
    if (!(frames[j].t > frames[j - 1].t)) throw ConfigError("frame times must increase strictly");
  }
  ModulationTrack tr;
  tr.frames = std::move(frames);
  const auto& fr = tr.frames;
  const std::size_t n = fr.size();
  tr.a_dot.resize(n);
  tr.h.resize(n);
  tr.delta_closure.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t lo = j == 0 ? 0 : j - 1;
    const std::size_t hi = j + 1 == n ? j : j + 1;
    tr.a_dot[j] = (fr[hi].a - fr[lo].a) / (fr[hi].t - fr[lo].t);
  }
  double integral = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j > 0) integral += 0.5 * (fr[j].c + fr[j - 1].c) * (fr[j].t - fr[j - 1].t);
    tr.h[j] = fr[j].a - integral;
    tr.delta_closure[j] = fr[j].delta() + 16.0 / 3.0 * std::norm(fr[j].b);
  }
  const std::size_t quarter = std::max<std::size_t>(1, n / 4);
  double s = 0.0;
  for (std::size_t j = 0; j < quarter; ++j) s += tr.delta_closure[j];
  tr.delta0 = s / static_cast<double>(quarter);
  return tr;
}

ModulationTrack Tracker::finish() const {
  ModulationTrack tr = make_track(frames_);
  tr.truncated = truncated_;
  tr.failure = failure_;
  return tr;
}

ModulationTrack track(const std::vector<SimState>& snapshots, double frame_velocity, const DecomposeOptions& opts) {
  Tracker t(frame_velocity, opts);
  for (const SimState& s : snapshots) {
    if (!t.add(s.t, s.u)) break;
  }
  return t.finish();
}

// ---- normal form ----------------------------------------------------------

double NFParams::fixed_point() const {
  const double l0 = lambda0();
  if (l0 > 0.0 && gamma < 0.0) return std::sqrt(l0 / -gamma);
  return 0.0;
}

NFParams NFParams::from(const NormalFormCoeffs& k, double c_plus) {
  return NFParams{k.c_star, k.lambda_prime, k.gamma, c_plus};
}

nlohmann::json NFParams::to_json() const {
  return {{"c_star", c_star},
          {"lambda_prime", lambda_prime},
          {"gamma", gamma},
          {"c_plus", c_plus},
          {"lambda0", lambda0()},
          {"fixed_point", fixed_point()}};
}

cplx nf_rhs(cplx b, const NFParams& p) { return p.lambda0() * b + p.gamma * std::norm(b) * b; }

NFTrajectory nf_solve(cplx b0, const NFParams& p, const std::vector<double>& times) {
  if (b0 == cplx(0.0)) throw ConfigError("normal-form initial amplitude must be non-zero");
  NFTrajectory tr{times, {}, p};
  const double l0 = p.lambda0();
  const double z0 = 1.0 / std::norm(b0);
  const cplx phase = b0 / std::abs(b0);
  tr.b.reserve(times.size());
  for (double t : times) {
    const double x = -2.0 * l0 * t;
    // expm1(x) / l0 with the l0 -> 0 limit -2t
    const double g = x == 0.0 ? -2.0 * t : std::expm1(x) / x * (-2.0 * t);
    const double z = z0 * std::exp(x) + p.gamma * g;
    if (!(z > 0.0)) throw ConvergenceError("normal-form amplitude blows up at t = " + std::to_string(t));
    tr.b.push_back(phase / std::sqrt(z));
  }
  return tr;
}

// ---- comparison -----------------------------------------------------------

nlohmann::json CompareReport::to_json() const {
  return {{"params", params.to_json()},
          {"epsilon", epsilon},
          {"max_normalized_deviation", max_normalized_deviation},
          {"saturation_ratio", saturation_ratio},
          {"saturated", saturated},
          {"pde_rate", pde_rate},
          {"nf_rate", nf_rate},
          {"rate_relative_error", rate_relative_error},
          {"monotone_growth", monotone_growth},
          {"monotone_decay", monotone_decay},
          {"max_phase", max_phase},
          {"h_dot_ratio", h_dot_ratio},
          {"closure_spread", closure_spread},
          {"closure_spread_full", closure_spread_full},
          {"drift_ratio", drift_ratio},
          {"momentum_closure", momentum_closure}};
}

CompareReport compare(const ModulationTrack& track, const NormalFormCoeffs& k, const std::vector<double>& momenta,
                      const CompareOptions& opts) {
  const auto& fr = track.frames;
  const std::size_t n = fr.size();
  if (n < 10) throw ConfigError("comparison needs at least 10 frames");
  if (!momenta.empty() && momenta.size() != n) throw ConfigError("momentum series length differs from the track");

  CompareReport r;
  r.params = NFParams::from(k, k.c_star + track.delta0);
  r.epsilon = opts.epsilon > 0.0 ? opts.epsilon : std::abs(fr.front().b);
  if (!(r.epsilon > 0.0)) throw ConfigError("comparison needs a non-zero initial amplitude");

  std::vector<double> times(n), amp(n);
  for (std::size_t j = 0; j < n; ++j) {
    times[j] = fr[j].t - fr.front().t;
    amp[j] = std::abs(fr[j].b);
  }
  r.nf = nf_solve(fr.front().b, r.params, times);

  const double eps2 = r.epsilon * r.epsilon;
  for (std::size_t j = 0; j < n; ++j) {
    r.max_normalized_deviation = std::max(r.max_normalized_deviation, std::abs(amp[j] - std::abs(r.nf.b[j])) / eps2);
    r.max_phase = std::max(r.max_phase, std::abs(std::arg(fr[j].b / fr.front().b)));
  }

  const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(opts.tail_fraction * n));
  double tail_amp = 0.0, tail_amp2 = 0.0, tail_drift = 0.0;
  for (std::size_t j = n - tail; j < n; ++j) {
    tail_amp += amp[j];
    tail_amp2 += amp[j] * amp[j];
    tail_drift += track.a_dot[j] - k.c_star;
  }
  tail_amp /= static_cast<double>(tail);
  tail_amp2 /= static_cast<double>(tail);
  tail_drift /= static_cast<double>(tail);
  const double bstar = r.params.fixed_point();
  if (bstar > 0.0) {
    r.saturation_ratio = tail_amp / bstar;
    r.saturated = std::abs(std::abs(r.nf.b.back()) - bstar) <= opts.saturation_margin * bstar;
  } else {
    r.saturated = false;
  }
  r.drift_ratio = tail_drift / (-(k.beta / k.alpha) * tail_amp2);

  const std::size_t nfit = std::max<std::size_t>(3, static_cast<std::size_t>(opts.fit_fraction * n));
  std::vector<double> tf(times.begin(), times.begin() + nfit), lp(nfit), ln(nfit);
  for (std::size_t j = 0; j < nfit; ++j) {
    lp[j] = std::log(amp[j]);
    ln[j] = std::log(std::abs(r.nf.b[j]));
  }
  r.pde_rate = fit_slope(tf, lp);
  r.nf_rate = fit_slope(tf, ln);
  r.rate_relative_error = std::abs(r.pde_rate - r.nf_rate) / std::abs(r.nf_rate);

  // monotone up to a noise floor of 1% of eps
  const double noise = 0.01 * r.epsilon;
  r.monotone_growth = true;
  r.monotone_decay = true;
  double run_max = amp[0], run_min = amp[0];
  for (std::size_t j = 1; j < n; ++j) {
    if (amp[j] < run_max - noise) r.monotone_growth = false;
    if (amp[j] > run_min + noise) r.monotone_decay = false;
    run_max = std::max(run_max, amp[j]);
    run_min = std::min(run_min, amp[j]);
  }
  r.monotone_growth = r.monotone_growth && amp.back() > amp.front();
  r.monotone_decay = r.monotone_decay && amp.back() < amp.front();

  // h(t) - h(t0) against int |b|^2 dt, regression through the origin
  double integral = 0.0, sxy = 0.0, sxx = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    integral += 0.5 * (amp[j] * amp[j] + amp[j - 1] * amp[j - 1]) * (times[j] - times[j - 1]);
    const double dh = track.h[j] - track.h[0];
    sxy += dh * integral;
    sxx += integral * integral;
  }
  r.h_dot_ratio = sxy / sxx;

  auto spread = [&](double t_min) {
    double mean = 0.0, worst = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (times[j] < t_min) continue;
      mean += track.delta_closure[j];
      ++count;
    }
    if (count == 0) return 0.0;
    mean /= static_cast<double>(count);
    for (std::size_t j = 0; j < n; ++j) {
      if (times[j] >= t_min) worst = std::max(worst, std::abs(track.delta_closure[j] - mean));
    }
    return worst;
  };
  r.closure_spread = spread(opts.transient);
  r.closure_spread_full = spread(0.0);

  if (!momenta.empty()) {
    const double sc = std::sqrt(k.c_star);
    const double p_star = 2.0 / 3.0 * std::pow(k.c_star, 1.5);
    for (std::size_t j = 0; j < n; ++j) {
      const double q = 2.0 * kPi * (p_star + sc * fr[j].delta() + 16.0 / (15.0 * sc) * amp[j] * amp[j]);
      r.momentum_closure = std::max(r.momentum_closure, std::abs(q - momenta[j]) / std::abs(momenta[j]));
    }
  }
  return r;
}

WaveConsistency wave_consistency(double c_plus, const NormalFormCoeffs& k, const Grid2D& grid,
                                 const WaveSolverOptions& opts) {
  WaveConsistency w;
  w.c_plus = c_plus;
  const NFParams p = NFParams::from(k, c_plus);
  w.nf_amplitude = p.fixed_point();
  if (!(w.nf_amplitude > 0.0)) throw ConfigError("wave consistency needs c+ above the critical speed");
  w.wave_speed = k.c_star + (c_plus - k.c_star) + 20.0 / 3.0 * w.nf_amplitude * w.nf_amplitude;
  const ModulatedWave wave =
      solve_modulated_wave(w.wave_speed, wave_guess(grid, predicted_amplitude(w.wave_speed, k)), opts);
  w.wave_amplitude = std::abs(wave.b_extracted);
  w.relative_difference = std::abs(w.wave_amplitude - w.nf_amplitude) / w.nf_amplitude;
  return w;
}

}  // namespace zkline
