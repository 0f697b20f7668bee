#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "zkline/banded.hpp"
#include "zkline/kdv_core.hpp"

namespace zkline {

enum class BoundaryCondition { dirichlet, neumann_at_zero_halfline };

// "dirichlet" | "neumann_at_zero_halfline"; throws ConfigError otherwise.
BoundaryCondition parse_boundary_condition(std::string_view name);
std::string to_string(BoundaryCondition bc);

// Three-point discretization of L_c + shift.
//
// Dirichlet: unknowns are the interior nodes, boundary values are clamped to
// zero.  Half-line: unknowns are the nodes 0 <= xi < L; the row at xi = 0
// uses the reflected stencil u(-h) = u(h), so only even functions are seen
// and the odd kernel element of L_c drops out.
class OperatorDisc {
 public:
  OperatorDisc(double c, double shift, const Grid1D& grid, BoundaryCondition bc);

  const Grid1D& grid() const { return grid_; }
  double speed() const { return c_; }
  double shift() const { return shift_; }
  BoundaryCondition boundary() const { return bc_; }
  const BandedMatrix& matrix() const { return matrix_; }

  // Grid index of the first unknown and the number of unknowns.
  std::size_t first_node() const { return first_; }
  std::size_t unknowns() const { return matrix_.size(); }

  // Matrix applied to the restriction of f; zero at clamped nodes.  For the
  // half-line operator the result is mirrored to xi < 0.
  Field1D apply(const Field1D& f) const;

  // Solves (L_c + shift) u = rhs.  Throws SingularMatrix when a pivot falls
  // below 1e-12.
  Field1D solve(const Field1D& rhs) const;

  double smallest_eigenvalue() const;

 private:
  Grid1D grid_;
  double c_, shift_;
  BoundaryCondition bc_;
  std::size_t first_;
  BandedMatrix matrix_;

  Field1D expand(const std::vector<double>& interior) const;
};

inline OperatorDisc discretize(double c, double shift, const Grid1D& grid, BoundaryCondition bc) {
  return OperatorDisc(c, shift, grid, bc);
}

// second_order: plain three-point solve.  richardson: combines the solves on
// h and h/2 as (4 u_{h/2} - u_h) / 3, which is fourth-order accurate at the
// coarse nodes.
enum class SolveAccuracy { second_order, richardson };

// Even solution of L_{c*} w0 = 12 psi*^2.
Field1D solve_w0(const Grid1D& grid, SolveAccuracy acc = SolveAccuracy::second_order);
// (L_{c*} + 4) w2~ = 20 sech^2(sqrt(c*) xi), Dirichlet.
Field1D solve_w2tilde(const Grid1D& grid, SolveAccuracy acc = SolveAccuracy::second_order);
// w2 = 5 sech^2 + 15/4 sech^4 - w2~.
Field1D solve_w2(const Grid1D& grid, SolveAccuracy acc = SolveAccuracy::second_order);
// Direct Dirichlet solve of (L_{c*} + 4) w2 = 6 psi*^2, used as a cross-check.
Field1D solve_w2_direct(const Grid1D& grid, SolveAccuracy acc = SolveAccuracy::second_order);
// d/dc u_c at c = c*, closed form.
Field1D d_c_soliton(const Grid1D& grid);
// -15 sech^2 + 15/2 sech^4
Field1D w0_exact(const Grid1D& grid);

struct NormalFormCoeffs {
  double c_star = kCriticalSpeed;
  double lambda_prime = 0.0;  // 128 / (3 pi^2) sqrt(c*)
  double alpha = 0.0;         // 16 / (3 sqrt(c*))
  double beta = 0.0;          // -12 <psi*^2, w2~>
  double gamma = 0.0;
  double eta_psi = 0.0;       // <eta*, psi*> by quadrature
  double i_w0 = 0.0;          // <psi*^2, w0>
  double i_w2t = 0.0;         // <psi*^2, w2~>
  // cross-checks
  double i_dc = 0.0;               // <psi*^2, d_c u_{c*}>
  double alpha_quadrature = 0.0;   // -<psi*, L'_{c*} psi*>
  double beta_direct = 0.0;        // 12 <psi*^2, w0 + w2>
  Grid1D grid;
  SolveAccuracy accuracy = SolveAccuracy::second_order;

  // (1/5) sqrt(c*) <psi*^2, w0>, exact value -32/21
  double scaled_w0() const;
  // (1/5) sqrt(c*) <psi*^2, w2~>
  double scaled_w2t() const;

  nlohmann::json to_json() const;
};

double lambda_prime_exact();
double alpha_exact();
// gamma = 96 / (pi^2 sqrt(c*)) (-(1/5) sqrt(c*) i_w2t + 16/27)
double gamma_from_inner(double i_w2t);

NormalFormCoeffs compute_coefficients(const Grid1D& grid = Grid1D(),
                                      SolveAccuracy acc = SolveAccuracy::second_order);

}  // namespace zkline
