#include "zkline/kdv_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "zkline/error.hpp"

namespace zkline {

namespace {

constexpr double kPi = std::numbers::pi;

double sqrt_cs() { return std::sqrt(kCriticalSpeed); }

void require_same_grid(const Field1D& a, const Field1D& b) {
  if (!(a.grid() == b.grid()) || a.size() != b.size()) {
    throw GridMismatch("field grids differ");
  }
}

}  // namespace

void SolitonParams::validate() const {
  if (!std::isfinite(c) || !std::isfinite(x0)) throw ConfigError("soliton parameters must be finite");
  if (!(c > 0.0)) throw ConfigError("soliton speed must be positive");
}

// ---- Grid1D ---------------------------------------------------------------

Grid1D::Grid1D(double half_width, std::size_t n) : half_width_(half_width), n_(n) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw ConfigError("grid half-width must be positive and finite");
  }
  if (n < 3 || n % 2 == 0) throw ConfigError("grid node count must be odd and >= 3");
  h_ = 2.0 * half_width / static_cast<double>(n - 1);
}

std::vector<double> Grid1D::nodes() const {
  std::vector<double> x(n_);
  for (std::size_t j = 0; j < n_; ++j) x[j] = node(j);
  return x;
}

std::vector<double> Grid1D::weights() const {
  std::vector<double> w(n_);
  for (std::size_t j = 0; j < n_; ++j) w[j] = weight(j);
  return w;
}

std::string Grid1D::to_record() const {
  nlohmann::json j{{"L", half_width_}, {"n", n_}};
  return j.dump();
}

Grid1D Grid1D::from_record(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    return Grid1D(j.at("L").get<double>(), j.at("n").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad grid record: ") + e.what());
  }
}

// ---- Field1D --------------------------------------------------------------

Field1D::Field1D(const Grid1D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw GridMismatch("field length does not match grid");
}

Field1D Field1D::sample(const Grid1D& grid, const std::function<double(double)>& f) {
  Field1D out(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) out[j] = f(grid.node(j));
  return out;
}

double Field1D::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool Field1D::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string Field1D::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "xi,value\n";
  for (std::size_t j = 0; j < size(); ++j) os << grid_.node(j) << ',' << values_[j] << '\n';
  return os.str();
}

Field1D operator+(const Field1D& a, const Field1D& b) {
  require_same_grid(a, b);
  Field1D out(a.grid());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] + b[j];
  return out;
}

Field1D operator-(const Field1D& a, const Field1D& b) {
  require_same_grid(a, b);
  Field1D out(a.grid());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] - b[j];
  return out;
}

Field1D operator*(double s, const Field1D& a) {
  Field1D out(a.grid());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = s * a[j];
  return out;
}

Field1D hadamard(const Field1D& a, const Field1D& b) {
  require_same_grid(a, b);
  Field1D out(a.grid());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
  return out;
}

// ---- closed forms ---------------------------------------------------------

double sech(double x) {
  const double ax = std::abs(x);
  if (ax > 700.0) return 0.0;
  // 2 e^{-|x|} / (1 + e^{-2|x|}) avoids overflow of cosh
  const double e = std::exp(-ax);
  return 2.0 * e / (1.0 + e * e);
}

double eval_line_soliton(const SolitonParams& p, double xi) { return line_soliton(p.c, xi); }

double line_soliton(double c, double xi) {
  const double s = sech(std::sqrt(c) * xi);
  return c * s * s;
}

double line_soliton_dxi(double c, double xi) {
  const double r = std::sqrt(c);
  const double s = sech(r * xi);
  return -2.0 * c * r * s * s * std::tanh(r * xi);
}

double line_soliton_dc(double c, double xi) {
  const double z = std::sqrt(c) * xi;
  const double s = sech(z);
  return s * s * (1.0 - z * std::tanh(z));
}

double line_soliton_dc_antiderivative(double c, double xi) {
  const double r = std::sqrt(c);
  const double z = r * xi;
  const double s = sech(z);
  return (0.5 * std::tanh(z) + 0.5 + 0.5 * z * s * s) / r;
}

double psi_star(double xi) {
  const double s = sech(sqrt_cs() * xi);
  return s * s * s;
}

double eta_star(double xi) {
  const double z = sqrt_cs() * xi;
  const double s = sech(z);
  // atan(sinh z) is the Gudermannian; use the overflow-free form.
  const double gd = 2.0 * std::atan(std::tanh(0.5 * z));
  return (0.5 * (s * std::tanh(z) + gd) + 0.25 * kPi) / sqrt_cs();
}

Field1D psi_star(const Grid1D& grid) {
  return Field1D::sample(grid, [](double x) { return psi_star(x); });
}

Field1D eta_star(const Grid1D& grid) {
  return Field1D::sample(grid, [](double x) { return eta_star(x); });
}

double eta_psi_exact() { return kPi * kPi / (8.0 * kCriticalSpeed); }

double psi_norm2_exact() { return 16.0 / (15.0 * sqrt_cs()); }

Field1D line_soliton(const Grid1D& grid, double c) {
  return Field1D::sample(grid, [c](double x) { return line_soliton(c, x); });
}

// ---- functionals ----------------------------------------------------------

SolitonFunctionals soliton_functionals(double c) {
  const double r = std::sqrt(c);
  return {2.0 * r, 2.0 / 3.0 * c * r, 1.0 / r, r};
}

SolitonFunctionals soliton_functionals(double c, const Grid1D& grid) {
  SolitonFunctionals f;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double w = grid.weight(j);
    const double x = grid.node(j);
    const double u = line_soliton(c, x);
    const double du = line_soliton_dc(c, x);
    f.mass += w * u;
    f.momentum += 0.5 * w * u * u;
    f.mass_derivative += w * du;
    f.momentum_derivative += w * u * du;
  }
  return f;
}

// ---- quadrature -----------------------------------------------------------

double inner(const Field1D& fa, const Field1D& fb) {
  require_same_grid(fa, fb);
  const Grid1D& g = fa.grid();
  double s = 0.0;
  for (std::size_t j = 0; j < fa.size(); ++j) s += g.weight(j) * fa[j] * fb[j];
  return s;
}

double integrate(const Field1D& f) {
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += f.grid().weight(j) * f[j];
  return s;
}

double l2_norm(const Field1D& f) { return std::sqrt(inner(f, f)); }

Field1D apply_schrodinger(double c, double shift, const Field1D& f, StencilOrder order) {
  const Grid1D& g = f.grid();
  const std::size_t n = g.size();
  const double h2 = g.spacing() * g.spacing();
  Field1D out(g);
  const std::size_t reach = order == StencilOrder::second ? 1 : 2;
  for (std::size_t j = reach; j + reach < n; ++j) {
    double d2;
    if (order == StencilOrder::second) {
      d2 = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / h2;
    } else {
      d2 = (-f[j + 2] + 16.0 * f[j + 1] - 30.0 * f[j] + 16.0 * f[j - 1] - f[j - 2]) / (12.0 * h2);
    }
    const double s = sech(std::sqrt(c) * g.node(j));
    out[j] = -d2 + (4.0 * c - 12.0 * c * s * s + shift) * f[j];
  }
  return out;
}

Field1D apply_operator_c_derivative(const Field1D& f) {
  Field1D out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double z = sqrt_cs() * f.grid().node(j);
    const double s = sech(z);
    out[j] = (4.0 - 12.0 * s * s + 12.0 * z * s * s * std::tanh(z)) * f[j];
  }
  return out;
}

std::array<EigenPair, 3> kdv_eigenpairs(double c, const Grid1D& grid, StencilOrder order) {
  SolitonParams{c, 0.0}.validate();
  const double r = std::sqrt(c);
  auto phi1 = Field1D::sample(grid, [r](double x) {
    const double s = sech(r * x);
    return s * s * s;
  });
  auto phi2 = Field1D::sample(grid, [r](double x) {
    const double s = sech(r * x);
    return s * s * std::tanh(r * x);
  });
  auto phi3 = Field1D::sample(grid, [r](double x) {
    const double s = sech(r * x);
    return 4.0 * s - 5.0 * s * s * s;
  });
  std::array<EigenPair, 3> pairs{EigenPair{-5.0 * c, std::move(phi1), 0.0},
                                 EigenPair{0.0, std::move(phi2), 0.0},
                                 EigenPair{3.0 * c, std::move(phi3), 0.0}};
  for (auto& p : pairs) {
    const Field1D res = apply_schrodinger(c, -p.eigenvalue, p.eigenfunction, order);
    p.residual_norm = l2_norm(res);
  }
  return pairs;
}

}  // namespace zkline
