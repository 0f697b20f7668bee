#pragma once

// Closed-form KdV line-soliton objects on a truncated line.
//
// The line soliton u_c(xi) = c sech^2(sqrt(c) xi) and the Schroedinger
// operator L_c = -d^2/dxi^2 + 4c - 12c sech^2(sqrt(c) xi) are the building
// blocks of everything else in the library.  All quadratures are composite
// trapezoid on a uniform, symmetric grid.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace zkline {

// Critical speed for 2*pi-periodic transverse perturbations (k = 1).
inline constexpr double kCriticalSpeed = 0.2;

struct SolitonParams {
  double c = kCriticalSpeed;
  double x0 = 0.0;

  // Throws ConfigError unless c > 0 and both fields are finite.
  void validate() const;
};

// Uniform grid on [-L, L] with an odd node count so that xi = 0 is a node.
// Nodes are exactly antisymmetric: node(n-1-j) == -node(j).
class Grid1D {
 public:
  Grid1D() : Grid1D(50.0, 4001) {}
  Grid1D(double half_width, std::size_t n);

  double half_width() const { return half_width_; }
  std::size_t size() const { return n_; }
  double spacing() const { return h_; }
  std::size_t center_index() const { return n_ / 2; }

  double node(std::size_t j) const {
    return (static_cast<double>(j) - static_cast<double>(n_ / 2)) * h_;
  }
  double weight(std::size_t j) const {
    return (j == 0 || j + 1 == n_) ? 0.5 * h_ : h_;
  }
  std::vector<double> nodes() const;
  std::vector<double> weights() const;

  // Same node count with half the spacing.
  Grid1D refined() const { return Grid1D(half_width_, 2 * n_ - 1); }

  // {"L": ..., "n": ...}
  std::string to_record() const;
  static Grid1D from_record(const std::string& text);

  bool operator==(const Grid1D& other) const {
    return half_width_ == other.half_width_ && n_ == other.n_;
  }

 private:
  double half_width_;
  std::size_t n_;
  double h_;
};

class Field1D {
 public:
  Field1D() = default;
  explicit Field1D(const Grid1D& grid) : grid_(grid), values_(grid.size(), 0.0) {}
  Field1D(const Grid1D& grid, std::vector<double> values);

  static Field1D sample(const Grid1D& grid, const std::function<double(double)>& f);

  const Grid1D& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  double& operator[](std::size_t j) { return values_[j]; }

  // Value at xi = 0.
  double center_value() const { return values_[grid_.center_index()]; }
  double max_abs() const;
  bool all_finite() const;

  // Two-column CSV "xi,value" with one header line, 17 significant digits.
  std::string to_csv() const;

 private:
  Grid1D grid_;
  std::vector<double> values_;
};

Field1D operator+(const Field1D& a, const Field1D& b);
Field1D operator-(const Field1D& a, const Field1D& b);
Field1D operator*(double s, const Field1D& a);
// Pointwise product.
Field1D hadamard(const Field1D& a, const Field1D& b);

struct EigenPair {
  double eigenvalue = 0.0;
  Field1D eigenfunction;
  double residual_norm = 0.0;
};

enum class StencilOrder { second, fourth };

// ---- closed forms ---------------------------------------------------------

double sech(double x);

// c sech^2(sqrt(c) xi); xi is the co-moving coordinate x - 4ct - x0, the
// translation is applied by the caller.
double eval_line_soliton(const SolitonParams& p, double xi);
double line_soliton(double c, double xi);
// d/dxi u_c
double line_soliton_dxi(double c, double xi);
// d/dc u_c = sech^2(s) - s tanh(s) sech^2(s), s = sqrt(c) xi
double line_soliton_dc(double c, double xi);
// Antiderivative from -inf of d/dc u_c (bounded, tends to 1/sqrt(c) at +inf).
double line_soliton_dc_antiderivative(double c, double xi);

// Neutral mode sech^3(sqrt(c*) xi) and its antiderivative from -inf.
double psi_star(double xi);
double eta_star(double xi);
Field1D psi_star(const Grid1D& grid);
Field1D eta_star(const Grid1D& grid);

// <eta*, psi*> = pi^2 / (8 c*)
double eta_psi_exact();
// ||psi*||^2 = 16 / (15 sqrt(c*))
double psi_norm2_exact();

Field1D line_soliton(const Grid1D& grid, double c);

// ---- mass and momentum of the line soliton --------------------------------

struct SolitonFunctionals {
  double mass = 0.0;                 // M(c) = int u_c
  double momentum = 0.0;             // P(c) = 1/2 int u_c^2
  double mass_derivative = 0.0;      // M'(c)
  double momentum_derivative = 0.0;  // P'(c)
};

SolitonFunctionals soliton_functionals(double c);
SolitonFunctionals soliton_functionals(double c, const Grid1D& grid);

// ---- quadrature and operators ---------------------------------------------

// Composite trapezoid sum w_j fa_j fb_j.  Throws GridMismatch.
double inner(const Field1D& fa, const Field1D& fb);
double integrate(const Field1D& f);
double l2_norm(const Field1D& f);

// Applies (L_c + shift) with a central-difference stencil at interior nodes.
// Rows too close to the ends for the stencil are left at zero.
Field1D apply_schrodinger(double c, double shift, const Field1D& f,
                          StencilOrder order = StencilOrder::second);

// Applies L'_{c*} = 4 - 12 sech^2(s) + 12 s sech^2(s) tanh(s), s = sqrt(c*) xi
// (multiplication operator).
Field1D apply_operator_c_derivative(const Field1D& f);

// The three closed-form eigenpairs (-5c, sech^3), (0, sech^2 tanh),
// (3c, 4 sech - 5 sech^3) with residuals against the discretized L_c.
std::array<EigenPair, 3> kdv_eigenpairs(double c, const Grid1D& grid,
                                        StencilOrder order = StencilOrder::second);

}  // namespace zkline
