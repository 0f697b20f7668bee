#include "zkline/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "zkline/coeffs.hpp"
#include "zkline/error.hpp"

namespace zkline {

namespace {

using cplx = std::complex<double>;

struct Tridiag {
  std::vector<double> lower, diag, upper;  // row r: (r, r-1), (r, r), (r, r+1)
};

Tridiag shifted_operator(const SpectralConfig& cfg) {
  const Grid1D& g = cfg.grid;
  const std::size_t m = g.size() - 2;
  const double h = g.spacing();
  const double ih2 = 1.0 / (h * h);
  const double k2 = static_cast<double>(cfg.k) * cfg.k;
  const double rc = std::sqrt(cfg.c);
  Tridiag t{std::vector<double>(m), std::vector<double>(m), std::vector<double>(m)};
  for (std::size_t r = 0; r < m; ++r) {
    const double s = sech(rc * g.node(r + 1));
    const double v = 4.0 * cfg.c - 12.0 * cfg.c * s * s;
    t.lower[r] = -ih2 - cfg.mu / h;
    t.diag[r] = 2.0 * ih2 + v - cfg.mu * cfg.mu + k2;
    t.upper[r] = -ih2 + cfg.mu / h;
  }
  return t;
}

// Calls put(r, j, value) for every structural entry of (D - mu) A.
template <class Put>
void for_each_entry(const SpectralConfig& cfg, Put&& put) {
  const Tridiag a = shifted_operator(cfg);
  const std::size_t m = a.diag.size();
  const double ih = 1.0 / (2.0 * cfg.grid.spacing());
  auto a_at = [&](std::size_t q, std::size_t j) {
    if (j + 1 == q) return a.lower[q];
    if (j == q) return a.diag[q];
    return a.upper[q];
  };
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t q0 = r > 0 ? r - 1 : 0;
    const std::size_t q1 = std::min(m - 1, r + 1);
    for (std::size_t q = q0; q <= q1; ++q) {
      const double d = q == r ? -cfg.mu : (q > r ? ih : -ih);
      if (d == 0.0) continue;
      const std::size_t j0 = q > 0 ? q - 1 : 0;
      const std::size_t j1 = std::min(m - 1, q + 1);
      for (std::size_t j = j0; j <= j1; ++j) put(r, j, d * a_at(q, j));
    }
  }
}

double outer_mass_fraction(const Grid1D& g, std::span<const double> u) {
  double total = 0.0, outer = 0.0;
  const double edge = 0.9 * g.half_width();
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double w = u[j] * u[j];
    total += w;
    if (std::abs(g.node(j)) > edge) outer += w;
  }
  return total > 0.0 ? outer / total : 1.0;
}

struct RitzPair {
  cplx lambda;
  Eigen::VectorXcd vec;  // interior values
  double residual;       // relative
};

Eigen::VectorXd start_vector(const SpectralConfig& cfg) {
  const std::size_t m = cfg.grid.size() - 2;
  const double rc = std::sqrt(cfg.c);
  Eigen::VectorXd v(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double z = rc * cfg.grid.node(r + 1);
    v(r) = sech(0.5 * z) * (1.0 + std::tanh(z)) + 0.1 * sech(0.05 * z);
  }
  return v / v.norm();
}

Eigen::VectorXd apply_real(const BandedMatrix& a, const Eigen::VectorXd& x) {
  const auto y = a.apply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  return Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
}

double relative_residual(const BandedMatrix& a, const Eigen::VectorXcd& y, cplx lambda) {
  const Eigen::VectorXd re = y.real(), im = y.imag();
  const Eigen::VectorXcd my = apply_real(a, re).cast<cplx>() + cplx(0, 1) * apply_real(a, im).cast<cplx>();
  return (my - lambda * y).norm() / y.norm();
}

// Ritz pairs of (A - sigma)^{-1} mapped back to A, nearest to sigma first.
std::vector<RitzPair> shift_invert_arnoldi(const BandedMatrix& a, double sigma,
                                           const Eigen::VectorXd& start, int steps, int wanted) {
  BandedMatrix shifted = a;
  shifted.shift_diagonal(-sigma);
  const BandedLU lu(shifted, 1e-300);
  const Eigen::Index n = start.size();
  const int m = static_cast<int>(std::min<Eigen::Index>(steps, n));
  Eigen::MatrixXd v(n, m + 1);
  Eigen::MatrixXd hm = Eigen::MatrixXd::Zero(m + 1, m);
  v.col(0) = start / start.norm();
  int used = m;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd w = v.col(j);
    lu.solve_in_place(std::span<double>(w.data(), static_cast<std::size_t>(n)));
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        const double hij = v.col(i).dot(w);
        hm(i, j) += hij;
        w -= hij * v.col(i);
      }
    }
    const double beta = w.norm();
    hm(j + 1, j) = beta;
    if (beta < 1e-14 * hm.col(j).norm()) {
      used = j + 1;
      break;
    }
    v.col(j + 1) = w / beta;
  }
  const Eigen::MatrixXd hsq = hm.topLeftCorner(used, used);
  Eigen::EigenSolver<Eigen::MatrixXd> es(hsq);
  if (es.info() != Eigen::Success) throw ConvergenceError("Hessenberg eigenproblem did not converge");
  const Eigen::VectorXcd theta = es.eigenvalues();
  std::vector<int> order(used);
  for (int i = 0; i < used; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return std::abs(theta(x)) > std::abs(theta(y)); });
  std::vector<RitzPair> out;
  const Eigen::MatrixXcd vc = v.leftCols(used).cast<cplx>();
  for (int i = 0; i < std::min(wanted, used); ++i) {
    const cplx th = theta(order[i]);
    if (std::abs(th) == 0.0) continue;
    const cplx lambda = sigma + 1.0 / th;
    Eigen::VectorXcd y = vc * es.eigenvectors().col(order[i]);
    y /= y.norm();
    out.push_back({lambda, y, relative_residual(a, y, lambda)});
  }
  return out;
}

// Real inverse iteration started from a Ritz pair; returns the refined pair
// with the Rayleigh quotient as eigenvalue.
RitzPair refine_real(const BandedMatrix& a, const RitzPair& p) {
  Eigen::VectorXd x = p.vec.real();
  if (x.norm() < 1e-3) x = p.vec.imag();
  x /= x.norm();
  double lambda = p.lambda.real();
  try {
    BandedMatrix shifted = a;
    shifted.shift_diagonal(-lambda * (1.0 + 1e-9));
    const BandedLU lu(shifted, 1e-300);
    for (int it = 0; it < 3; ++it) {
      lu.solve_in_place(std::span<double>(x.data(), static_cast<std::size_t>(x.size())));
      x /= x.norm();
    }
  } catch (const SingularMatrix&) {
  }
  const Eigen::VectorXd ax = apply_real(a, x);
  lambda = x.dot(ax);
  return {cplx(lambda, 0.0), x.cast<cplx>(), (ax - lambda * x).norm()};
}

Field1D expand_interior(const Grid1D& g, const Eigen::VectorXd& x) {
  Field1D f(g);
  for (Eigen::Index r = 0; r < x.size(); ++r) f[static_cast<std::size_t>(r) + 1] = x(r);
  return f;
}

}  // namespace

Grid1D default_spectral_grid() { return Grid1D(1600.0, 32001); }

double threshold_speed(int k) { return static_cast<double>(k) * k / 5.0; }

void SpectralConfig::validate() const {
  SolitonParams{c, 0.0}.validate();
  if (k < 0) throw ConfigError("transverse wave number must be >= 0");
  if (!(mu >= 0.0 && mu < 2.0 * std::sqrt(c))) throw ConfigError("weight mu must lie in [0, 2 sqrt(c))");
  if (!(tolerance > 0.0 && tolerance <= 1e-6)) throw ConfigError("tolerance must lie in (0, 1e-6]");
}

BandedMatrix assemble_linearized(const SpectralConfig& cfg) {
  cfg.validate();
  BandedMatrix m(cfg.grid.size() - 2, 2, 2);
  for_each_entry(cfg, [&](std::size_t r, std::size_t j, double v) { m.at(r, j) += v; });
  return m;
}

Eigen::MatrixXd assemble_linearized_dense(const SpectralConfig& cfg) {
  cfg.validate();
  if (cfg.grid.size() > 2001) throw ConfigError("dense assembly limited to n <= 2001");
  const auto m = static_cast<Eigen::Index>(cfg.grid.size() - 2);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  for_each_entry(cfg, [&](std::size_t r, std::size_t j, double v) {
    d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) += v;
  });
  return d;
}

Field1D apply_linearized(const SpectralConfig& cfg, const Field1D& f) {
  if (!(f.grid() == cfg.grid)) throw GridMismatch("field and spectral grids differ");
  const BandedMatrix m = assemble_linearized(cfg);
  const auto inner_vals = f.values().subspan(1, f.size() - 2);
  const auto y = m.apply(inner_vals);
  Field1D out(cfg.grid);
  for (std::size_t r = 0; r < y.size(); ++r) out[r + 1] = y[r];
  return out;
}

std::vector<cplx> eigenvalues_near(const SpectralConfig& cfg, double shift, int count) {
  const BandedMatrix m = assemble_linearized(cfg);
  std::vector<cplx> out;
  for (const auto& p : shift_invert_arnoldi(m, shift, start_vector(cfg), 60, count)) {
    if (p.residual <= cfg.tolerance) out.push_back(p.lambda);
  }
  return out;
}

SpectralResult unstable_eigenvalue(const SpectralConfig& cfg) {
  cfg.validate();
  SpectralResult res;
  res.config = cfg;
  const double ck = threshold_speed(cfg.k);
  res.threshold_flag = cfg.c > ck;

  const BandedMatrix m = assemble_linearized(cfg);
  const Eigen::VectorXd start = start_vector(cfg);
  const double g = std::max(2e-3, 2.0 * (cfg.c - ck));
  for (double sigma : {g, 0.25 * g, 4.0 * g, 16.0 * g}) {
    const auto ritz = shift_invert_arnoldi(m, sigma, start, 40, 12);
    if (res.eigenvalues.empty()) {
      for (const auto& p : ritz) {
        if (p.residual <= cfg.tolerance) res.eigenvalues.push_back(p.lambda);
      }
    }
    std::optional<UnstableMode> best;
    for (const auto& p : ritz) {
      if (p.lambda.real() <= 10.0 * cfg.tolerance) continue;
      if (std::abs(p.lambda.imag()) > 1e-3 * std::abs(p.lambda)) continue;
      const RitzPair r = refine_real(m, p);
      if (r.lambda.real() <= 10.0 * cfg.tolerance || r.residual > cfg.tolerance) continue;
      const Eigen::VectorXd x = r.vec.real();
      Field1D u = expand_interior(cfg.grid, x);
      if (outer_mass_fraction(cfg.grid, u.values()) > 0.1) continue;
      const double nrm = l2_norm(u);
      u = (1.0 / nrm) * u;
      if (!best || r.lambda.real() > best->lambda) best = UnstableMode{r.lambda.real(), std::move(u), r.residual};
    }
    if (best) {
      res.unstable = std::move(best);
      break;
    }
  }
  return res;
}

std::vector<cplx> dense_spectrum(const SpectralConfig& cfg) {
  const Eigen::MatrixXd d = assemble_linearized_dense(cfg);
  Eigen::EigenSolver<Eigen::MatrixXd> es(d, false);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver did not converge");
  const Eigen::VectorXcd ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

SlopeFit eigenvalue_slope(const std::vector<double>& offsets, const SpectralConfig& base) {
  if (offsets.size() < 4) throw ConfigError("slope fit needs at least 4 speeds");
  SlopeFit fit;
  const double ck = threshold_speed(base.k);
  for (double d : offsets) {
    if (!(d > 0.0 && d <= 0.05)) throw ConfigError("slope offsets must lie in (0, 0.05]");
    SpectralConfig cfg = base;
    cfg.c = ck + d;
    const auto r = unstable_eigenvalue(cfg);
    if (!r.unstable) {
      throw ConvergenceError("no unstable eigenvalue at c - c_k = " + std::to_string(d));
    }
    fit.offsets.push_back(d);
    fit.lambdas.push_back(r.unstable->lambda);
  }
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < fit.offsets.size(); ++i) {
    const double d = fit.offsets[i], l = fit.lambdas[i];
    s11 += d * d;
    s12 += d * d * d;
    s22 += d * d * d * d;
    b1 += d * l;
    b2 += d * d * l;
  }
  const double det = s11 * s22 - s12 * s12;
  fit.slope = (b1 * s22 - b2 * s12) / det;
  fit.quadratic = (s11 * b2 - s12 * b1) / det;
  fit.slope_linear = b1 / s11;
  return fit;
}

double coercivity_spectrum(int k, const Grid1D& grid) {
  const double k2 = static_cast<double>(k) * k;
  return discretize(kCriticalSpeed, k2, grid, BoundaryCondition::dirichlet).smallest_eigenvalue();
}

ThresholdBracket threshold_bisection(const SpectralConfig& base, double lo, double hi, double width) {
  if (!(lo < hi)) throw ConfigError("bisection needs lo < hi");
  ThresholdBracket br{lo, hi, 0};
  auto unstable_at = [&](double c) {
    SpectralConfig cfg = base;
    cfg.c = c;
    ++br.evaluations;
    return unstable_eigenvalue(cfg).unstable.has_value();
  };
  if (unstable_at(lo)) throw ConfigError("bisection lower end is already unstable");
  if (!unstable_at(hi)) throw ConfigError("bisection upper end is not unstable");
  while (br.unstable - br.stable > width) {
    const double mid = br.estimate();
    (unstable_at(mid) ? br.unstable : br.stable) = mid;
  }
  return br;
}

JordanResiduals jordan_residuals(double c, const Grid1D& grid) {
  SpectralConfig cfg;
  cfg.grid = grid;
  cfg.k = 0;
  cfg.c = c;
  const Field1D ux = Field1D::sample(grid, [c](double x) { return line_soliton_dxi(c, x); });
  const Field1D uc = Field1D::sample(grid, [c](double x) { return line_soliton_dc(c, x); });
  Field1D r1 = apply_linearized(cfg, ux);
  Field1D r2 = apply_linearized(cfg, uc) + 4.0 * ux;
  // the two end rows of the pentadiagonal stencil see clamped values
  for (std::size_t j : {std::size_t{0}, std::size_t{1}, grid.size() - 2, grid.size() - 1}) {
    r1[j] = 0.0;
    r2[j] = 0.0;
  }
  return {l2_norm(r1), l2_norm(r2)};
}

}  // namespace zkline
