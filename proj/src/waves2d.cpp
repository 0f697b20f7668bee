#include "zkline/waves2d.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "zkline/error.hpp"

namespace zkline {

namespace {

constexpr double kPi = std::numbers::pi;
using Vec = Eigen::VectorXd;
using LinearMap = std::function<Vec(const Vec&)>;

double sup_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// REDFT00 as a dense matrix: Y = C X, and C C = 2 (m - 1) I.
Eigen::MatrixXd dct1_matrix(std::size_t m) {
  Eigen::MatrixXd c(m, m);
  const double n1 = static_cast<double>(m - 1);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t p = 0; p < m; ++p) {
      const double w = (p == 0 || p + 1 == m) ? 1.0 : 2.0;
      c(r, p) = w * std::cos(kPi * static_cast<double>(r * p) / n1);
    }
  }
  return c;
}

struct GmresResult {
  Vec x;
  int iterations = 0;
  double relres = 0.0;
};

// Right-preconditioned restarted GMRES (the preconditioned directions are
// stored, so m_inv is applied once per inner step).
GmresResult gmres(const LinearMap& a, const LinearMap& m_inv, const Vec& b, int restart,
                  int max_iterations, double tol) {
  const Eigen::Index n = b.size();
  GmresResult res;
  res.x = Vec::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return res;
  Vec r = b;
  while (res.iterations < max_iterations) {
    const double beta = r.norm();
    res.relres = beta / bnorm;
    if (res.relres <= tol) break;
    Eigen::MatrixXd v(n, restart + 1), z(n, restart);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(restart + 1, restart);
    Vec cs = Vec::Zero(restart), sn = Vec::Zero(restart), g = Vec::Zero(restart + 1);
    v.col(0) = r / beta;
    g(0) = beta;
    int j = 0;
    for (; j < restart && res.iterations < max_iterations; ++j) {
      ++res.iterations;
      z.col(j) = m_inv(v.col(j));
      Vec w = a(z.col(j));
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const double hij = v.col(i).dot(w);
          h(i, j) += hij;
          w -= hij * v.col(i);
        }
      }
      h(j + 1, j) = w.norm();
      if (h(j + 1, j) > 0.0) v.col(j + 1) = w / h(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * h(i, j) + sn(i) * h(i + 1, j);
        h(i + 1, j) = -sn(i) * h(i, j) + cs(i) * h(i + 1, j);
        h(i, j) = t;
      }
      const double d = std::hypot(h(j, j), h(j + 1, j));
      cs(j) = h(j, j) / d;
      sn(j) = h(j + 1, j) / d;
      h(j, j) = d;
      h(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      if (std::abs(g(j + 1)) / bnorm <= tol || h(j, j) == 0.0) {
        ++j;
        break;
      }
    }
    const Vec y = h.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    res.x += z.leftCols(j) * y;
    r = b - a(res.x);
  }
  res.relres = r.norm() / bnorm;
  return res;
}

// Even-even quarter of the periodic grid: x_p = p dx, p = 0..nx/2, and
// y_q = q dy, q = 0..ny/2, stored row-major (p * my + q).
class EvenSector {
 public:
  explicit EvenSector(const Grid2D& g)
      : g_(g), mx_(g.nx() / 2 + 1), my_(g.ny() / 2 + 1), dct_(mx_, my_), symbol_(mx_ * my_) {
    scale_ = 1.0 / (4.0 * static_cast<double>((mx_ - 1) * (my_ - 1)));
    for (std::size_t p = 0; p < mx_; ++p) {
      const double kx = 2.0 * kPi / g.lx() * static_cast<double>(p);
      for (std::size_t q = 0; q < my_; ++q) symbol_[p * my_ + q] = kx * kx + static_cast<double>(q * q);
    }
  }

  std::size_t mx() const { return mx_; }
  std::size_t my() const { return my_; }
  std::size_t size() const { return mx_ * my_; }

  std::size_t full_ix(std::size_t p, bool negative) const {
    const std::size_t nx = g_.nx(), h = nx / 2;
    return negative ? (h + nx - p) % nx : (h + p) % nx;
  }

  Vec restrict(const Field2D& u) const {
    Vec r(size());
    const std::size_t ny = g_.ny();
    for (std::size_t p = 0; p < mx_; ++p) {
      for (std::size_t q = 0; q < my_; ++q) {
        const std::size_t qm = (ny - q) % ny;
        r(p * my_ + q) = 0.25 * (u.at(full_ix(p, false), q) + u.at(full_ix(p, true), q) +
                                 u.at(full_ix(p, false), qm) + u.at(full_ix(p, true), qm));
      }
    }
    return r;
  }

  Field2D embed(const Vec& r) const {
    Field2D u(g_);
    const std::size_t nx = g_.nx(), ny = g_.ny();
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const std::size_t p = ix >= nx / 2 ? ix - nx / 2 : nx / 2 - ix;
      for (std::size_t iy = 0; iy < ny; ++iy) {
        const std::size_t q = iy <= ny / 2 ? iy : ny - iy;
        u.at(ix, iy) = r(p * my_ + q);
      }
    }
    return u;
  }

  Vec neg_laplacian(const Vec& u) {
    Vec t(size()), out(size());
    dct_.apply({u.data(), size()}, {t.data(), size()});
    for (std::size_t i = 0; i < size(); ++i) t(i) *= symbol_[i] * scale_;
    dct_.apply({t.data(), size()}, {out.data(), size()});
    return out;
  }

  // y-average with trapezoid weights on [0, pi].
  Vec y_mean(const Vec& u) const {
    Vec m(mx_);
    for (std::size_t p = 0; p < mx_; ++p) {
      double s = 0.0;
      for (std::size_t q = 0; q < my_; ++q) {
        const double w = (q == 0 || q + 1 == my_) ? 0.5 : 1.0;
        s += w * u(p * my_ + q);
      }
      m(p) = s / static_cast<double>(my_ - 1);
    }
    return m;
  }

  const Grid2D& grid() const { return g_; }

 private:
  Grid2D g_;
  std::size_t mx_, my_;
  Dct2D dct_;
  std::vector<double> symbol_;
  double scale_;
};

// Exact inverse of the y-mode-diagonal part of the Jacobian.
class BlockPreconditioner {
 public:
  BlockPreconditioner(const EvenSector& s, const Eigen::MatrixXd& kxx, const Eigen::MatrixXd& cy,
                      const Vec& ubar, double c)
      : mx_(s.mx()), my_(s.my()), cy_(cy) {
    blocks_.reserve(my_);
    for (std::size_t q = 0; q < my_; ++q) {
      Eigen::MatrixXd a = kxx;
      for (std::size_t p = 0; p < mx_; ++p) {
        a(p, p) += static_cast<double>(q * q) + 4.0 * c - 12.0 * ubar(p);
      }
      blocks_.emplace_back(a);
    }
  }

  Vec apply(const Vec& r) const {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> rm(
        r.data(), mx_, my_);
    Eigen::MatrixXd modes = rm * cy_.transpose();  // mx x my
    for (std::size_t q = 0; q < my_; ++q) modes.col(q) = blocks_[q].solve(modes.col(q));
    const Eigen::MatrixXd back = modes * cy_.transpose() / (2.0 * static_cast<double>(my_ - 1));
    Vec out(mx_ * my_);
    for (std::size_t p = 0; p < mx_; ++p) {
      for (std::size_t q = 0; q < my_; ++q) out(p * my_ + q) = back(p, q);
    }
    return out;
  }

 private:
  std::size_t mx_, my_;
  Eigen::MatrixXd cy_;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> blocks_;
};

std::string history_text(const std::vector<double>& hist) {
  std::ostringstream os;
  os.precision(3);
  for (std::size_t i = 0; i < hist.size(); ++i) os << (i ? ", " : "") << hist[i];
  return os.str();
}

}  // namespace

Field2D elliptic_residual(const Field2D& u, double c) {
  Fft2D fft(u.grid());
  const Field2D neg_lap = apply_symbol(fft, u, [](double kx, double ky) {
    return std::complex<double>(kx * kx + ky * ky, 0.0);
  });
  Field2D out(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = neg_lap[i] + 4.0 * c * u[i] - 6.0 * u[i] * u[i];
  return out;
}

Field2D line_soliton_2d(const Grid2D& grid, double c) {
  return Field2D::sample(grid, [c](double x, double) { return line_soliton(c, x); });
}

Field2D neutral_mode_2d(const Grid2D& grid) {
  return Field2D::sample(grid, [](double x, double y) { return std::cos(y) * psi_star(x); });
}

Field2D wave_guess(const Grid2D& grid, double b0) {
  return Field2D::sample(grid, [b0](double x, double y) {
    return line_soliton(kCriticalSpeed, x) + 2.0 * b0 * std::cos(y) * psi_star(x);
  });
}

double extract_b(const Field2D& u) {
  const Field2D v1 = neutral_mode_2d(u.grid());
  return inner(v1, u - line_soliton_2d(u.grid(), kCriticalSpeed)) / (2.0 * inner(v1, v1));
}

double predicted_amplitude(double c, const NormalFormCoeffs& k) {
  const double d = c - k.c_star;
  return d > 0.0 ? std::sqrt(k.alpha * d / std::abs(k.beta)) : 0.0;
}

ModulatedWave solve_modulated_wave(double c, const Field2D& guess, const WaveSolverOptions& opts) {
  SolitonParams{c, 0.0}.validate();
  const Grid2D& g = guess.grid();
  EvenSector sector(g);
  const std::size_t mx = sector.mx();

  const Eigen::MatrixXd cx = dct1_matrix(mx);
  Eigen::VectorXd k2(mx);
  for (std::size_t p = 0; p < mx; ++p) {
    const double kx = 2.0 * kPi / g.lx() * static_cast<double>(p);
    k2(p) = kx * kx;
  }
  const Eigen::MatrixXd kxx = cx * k2.asDiagonal() * cx / (2.0 * static_cast<double>(mx - 1));
  const Eigen::MatrixXd cy = dct1_matrix(sector.my());

  auto residual = [&](const Vec& u) -> Vec {
    Vec f = sector.neg_laplacian(u);
    f += (4.0 * c) * u - 6.0 * u.cwiseProduct(u);
    return f;
  };

  Vec u = sector.restrict(guess);
  Vec f = residual(u);
  ModulatedWave wave;
  wave.c = c;
  wave.residual_history.push_back(sup_norm(f));
  const double start_norm = f.norm();

  while (sup_norm(f) > opts.tolerance) {
    if (wave.newton_iters >= opts.max_newton) {
      throw ConvergenceError("Newton did not converge; residual history: " +
                             history_text(wave.residual_history));
    }
    ++wave.newton_iters;
    const BlockPreconditioner pre(sector, kxx, cy, sector.y_mean(u), c);
    const LinearMap jac = [&](const Vec& v) -> Vec {
      Vec out = sector.neg_laplacian(v);
      out += (4.0 * c) * v - 12.0 * u.cwiseProduct(v);
      return out;
    };
    const LinearMap minv = [&](const Vec& r) { return pre.apply(r); };
    const GmresResult lin = gmres(jac, minv, -f, opts.gmres_restart, opts.gmres_max_iterations,
                                  opts.gmres_tolerance);

    const double fn = f.norm();
    double step = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 12; ++halvings, step *= 0.5) {
      const Vec trial = u + step * lin.x;
      const Vec ft = residual(trial);
      if (ft.norm() < (1.0 - 1e-4 * step) * fn || sup_norm(ft) <= opts.tolerance) {
        u = trial;
        f = ft;
        accepted = true;
        break;
      }
    }
    wave.residual_history.push_back(sup_norm(f));
    if (!accepted || !std::isfinite(f.norm()) || f.norm() > 1e6 * std::max(start_norm, 1e-300)) {
      throw ConvergenceError("Newton diverged; residual history: " + history_text(wave.residual_history));
    }
  }

  wave.field = sector.embed(u);
  wave.residual_norm = elliptic_residual(wave.field, c).max_abs();
  wave.b_extracted = extract_b(wave.field);
  wave.branch_lost = c > kCriticalSpeed && std::abs(wave.b_extracted) < opts.branch_loss_threshold;
  return wave;
}

std::vector<ModulatedWave> compute_branch(const std::vector<double>& speeds, const Grid2D& grid,
                                          const NormalFormCoeffs& k, const WaveSolverOptions& opts) {
  std::vector<double> sorted = speeds;
  std::sort(sorted.begin(), sorted.end());
  std::vector<ModulatedWave> out;
  for (double c : sorted) {
    Field2D guess = wave_guess(grid, predicted_amplitude(c, k));
    if (!out.empty() && !out.back().branch_lost) {
      // rescale the previous modulation to the predicted amplitude
      const ModulatedWave& prev = out.back();
      const double s = predicted_amplitude(c, k) / prev.b_extracted;
      const Field2D base = line_soliton_2d(grid, kCriticalSpeed);
      guess = base + s * (prev.field - base);
    }
    out.push_back(solve_modulated_wave(c, guess, opts));
  }
  return out;
}

BifurcationFit bifurcation_fit(const std::vector<ModulatedWave>& branch, const NormalFormCoeffs& k) {
  std::vector<const ModulatedWave*> pts;
  for (const auto& w : branch) {
    const double d = w.c - k.c_star;
    if (!w.branch_lost && d >= 0.002 - 1e-12 && d <= 0.02 + 1e-12) pts.push_back(&w);
  }
  if (pts.size() < 4) throw ConvergenceError("bifurcation fit needs at least 4 converged branch points");
  std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->c < b->c; });

  BifurcationFit fit;
  double sxx = 0.0, sxy = 0.0;
  fit.monotone = true;
  const Grid2D& g = pts.front()->field.grid();
  const Field2D base = line_soliton_2d(g, k.c_star);
  const Field2D mode = neutral_mode_2d(g);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const ModulatedWave& w = *pts[i];
    const double d = w.c - k.c_star;
    const double b = w.b_extracted;
    sxx += d * d;
    sxy += d * b * b;
    if (i > 0 && !(std::abs(b) > std::abs(pts[i - 1]->b_extracted))) fit.monotone = false;
    const Field2D rem = w.field - base - (2.0 * b) * mode;
    fit.remainder_constants.push_back(l2_norm(rem) / (b * b));
    const auto mean = w.field.y_mean();
    double s = 0.0;
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      const double e = mean[ix] - line_soliton(k.c_star, g.x(ix));
      s += e * e;
    }
    fit.mean_constants.push_back(std::sqrt(s * g.dx() * 2.0 * kPi) / (b * b));
  }
  fit.slope = sxy / sxx;
  fit.target = k.alpha / std::abs(k.beta);
  fit.relative_error = std::abs(fit.slope / fit.target - 1.0);
  return fit;
}

}  // namespace zkline
