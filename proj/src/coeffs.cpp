#include "zkline/coeffs.hpp"

#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "zkline/error.hpp"

namespace zkline {

namespace {

constexpr double kPi = std::numbers::pi;

double potential(double c, double xi) {
  const double s = sech(std::sqrt(c) * xi);
  return 4.0 * c - 12.0 * c * s * s;
}

Field1D with_richardson(const Grid1D& grid, SolveAccuracy acc,
                        const std::function<Field1D(const Grid1D&)>& solver) {
  Field1D coarse = solver(grid);
  if (acc == SolveAccuracy::second_order) return coarse;
  const Field1D fine = solver(grid.refined());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    coarse[j] = (4.0 * fine[2 * j] - coarse[j]) / 3.0;
  }
  return coarse;
}

Field1D sech_power(const Grid1D& grid, int p) {
  const double r = std::sqrt(kCriticalSpeed);
  return Field1D::sample(grid, [r, p](double x) { return std::pow(sech(r * x), p); });
}

}  // namespace

BoundaryCondition parse_boundary_condition(std::string_view name) {
  if (name == "dirichlet") return BoundaryCondition::dirichlet;
  if (name == "neumann_at_zero_halfline") return BoundaryCondition::neumann_at_zero_halfline;
  throw ConfigError("unknown boundary condition '" + std::string(name) + "'");
}

std::string to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::dirichlet ? "dirichlet" : "neumann_at_zero_halfline";
}

OperatorDisc::OperatorDisc(double c, double shift, const Grid1D& grid, BoundaryCondition bc)
    : grid_(grid), c_(c), shift_(shift), bc_(bc) {
  SolitonParams{c, 0.0}.validate();
  const std::size_t n = grid.size();
  const double ih2 = 1.0 / (grid.spacing() * grid.spacing());
  first_ = bc == BoundaryCondition::dirichlet ? 1 : grid.center_index();
  const std::size_t m = (n - 1) - first_;
  matrix_ = BandedMatrix(m, 1, 1);
  for (std::size_t r = 0; r < m; ++r) {
    const double xi = grid.node(first_ + r);
    matrix_.at(r, r) = 2.0 * ih2 + potential(c, xi) + shift;
    if (r > 0) matrix_.at(r, r - 1) = -ih2;
    if (r + 1 < m) matrix_.at(r, r + 1) = -ih2;
  }
  if (bc == BoundaryCondition::neumann_at_zero_halfline && m > 1) {
    matrix_.at(0, 1) = -2.0 * ih2;
  }
}

Field1D OperatorDisc::expand(const std::vector<double>& interior) const {
  Field1D out(grid_);
  const std::size_t n = grid_.size();
  for (std::size_t r = 0; r < interior.size(); ++r) out[first_ + r] = interior[r];
  if (bc_ == BoundaryCondition::neumann_at_zero_halfline) {
    for (std::size_t j = 0; j < first_; ++j) out[j] = out[n - 1 - j];
  }
  return out;
}

Field1D OperatorDisc::apply(const Field1D& f) const {
  if (!(f.grid() == grid_)) throw GridMismatch("operator and field grids differ");
  std::vector<double> x(unknowns());
  for (std::size_t r = 0; r < x.size(); ++r) x[r] = f[first_ + r];
  return expand(matrix_.apply(x));
}

Field1D OperatorDisc::solve(const Field1D& rhs) const {
  if (!(rhs.grid() == grid_)) throw GridMismatch("operator and right-hand side grids differ");
  std::vector<double> b(unknowns());
  for (std::size_t r = 0; r < b.size(); ++r) b[r] = rhs[first_ + r];
  BandedLU lu(matrix_, 1e-12);
  lu.solve_in_place(b);
  return expand(b);
}

double OperatorDisc::smallest_eigenvalue() const {
  const std::size_t m = unknowns();
  Eigen::VectorXd diag(m);
  Eigen::VectorXd sub(m > 0 ? m - 1 : 0);
  for (std::size_t r = 0; r < m; ++r) diag(r) = matrix_.at(r, r);
  for (std::size_t r = 0; r + 1 < m; ++r) sub(r) = matrix_.at(r + 1, r);
  if (bc_ == BoundaryCondition::neumann_at_zero_halfline && m > 1) {
    // diagonal similarity diag(1/sqrt 2, 1, ...) symmetrizes the reflected row
    sub(0) = -std::sqrt(matrix_.at(0, 1) * matrix_.at(1, 0));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("tridiagonal eigensolver failed");
  return es.eigenvalues()(0);
}

// ---- BVP solutions --------------------------------------------------------

Field1D solve_w0(const Grid1D& grid, SolveAccuracy acc) {
  return with_richardson(grid, acc, [](const Grid1D& g) {
    const Field1D psi = psi_star(g);
    const Field1D rhs = 12.0 * hadamard(psi, psi);
    return discretize(kCriticalSpeed, 0.0, g, BoundaryCondition::neumann_at_zero_halfline).solve(rhs);
  });
}

Field1D solve_w2tilde(const Grid1D& grid, SolveAccuracy acc) {
  return with_richardson(grid, acc, [](const Grid1D& g) {
    return discretize(kCriticalSpeed, 4.0, g, BoundaryCondition::dirichlet)
        .solve(20.0 * sech_power(g, 2));
  });
}

Field1D solve_w2(const Grid1D& grid, SolveAccuracy acc) {
  return 5.0 * sech_power(grid, 2) + 3.75 * sech_power(grid, 4) - solve_w2tilde(grid, acc);
}

Field1D solve_w2_direct(const Grid1D& grid, SolveAccuracy acc) {
  return with_richardson(grid, acc, [](const Grid1D& g) {
    const Field1D psi = psi_star(g);
    return discretize(kCriticalSpeed, 4.0, g, BoundaryCondition::dirichlet)
        .solve(6.0 * hadamard(psi, psi));
  });
}

Field1D d_c_soliton(const Grid1D& grid) {
  return Field1D::sample(grid, [](double x) { return line_soliton_dc(kCriticalSpeed, x); });
}

Field1D w0_exact(const Grid1D& grid) {
  return -15.0 * sech_power(grid, 2) + 7.5 * sech_power(grid, 4);
}

// ---- coefficients ---------------------------------------------------------

double lambda_prime_exact() { return 128.0 / (3.0 * kPi * kPi) * std::sqrt(kCriticalSpeed); }

double alpha_exact() { return 16.0 / (3.0 * std::sqrt(kCriticalSpeed)); }

double gamma_from_inner(double i_w2t) {
  const double r = std::sqrt(kCriticalSpeed);
  return 96.0 / (kPi * kPi * r) * (-0.2 * r * i_w2t + 16.0 / 27.0);
}

double NormalFormCoeffs::scaled_w0() const { return 0.2 * std::sqrt(c_star) * i_w0; }

double NormalFormCoeffs::scaled_w2t() const { return 0.2 * std::sqrt(c_star) * i_w2t; }

nlohmann::json NormalFormCoeffs::to_json() const {
  return {
      {"c_star", c_star},
      {"lambda_prime", lambda_prime},
      {"alpha", alpha},
      {"beta", beta},
      {"gamma", gamma},
      {"eta_psi", eta_psi},
      {"i_w0", i_w0},
      {"i_w2t", i_w2t},
      {"scaled_w0", scaled_w0()},
      {"scaled_w2t", scaled_w2t()},
      {"i_dc", i_dc},
      {"alpha_quadrature", alpha_quadrature},
      {"beta_direct", beta_direct},
      {"grid", {{"L", grid.half_width()}, {"n", grid.size()}}},
      {"accuracy", accuracy == SolveAccuracy::richardson ? "richardson" : "second_order"},
  };
}

NormalFormCoeffs compute_coefficients(const Grid1D& grid, SolveAccuracy acc) {
  const Field1D psi = psi_star(grid);
  const Field1D psi2 = hadamard(psi, psi);
  const Field1D w0 = solve_w0(grid, acc);
  const Field1D w2t = solve_w2tilde(grid, acc);
  const Field1D w2 = 5.0 * sech_power(grid, 2) + 3.75 * sech_power(grid, 4) - w2t;

  NormalFormCoeffs k;
  k.grid = grid;
  k.accuracy = acc;
  k.lambda_prime = lambda_prime_exact();
  k.alpha = alpha_exact();
  k.i_w0 = inner(psi2, w0);
  k.i_w2t = inner(psi2, w2t);
  k.eta_psi = inner(eta_star(grid), psi);
  k.beta = -12.0 * k.i_w2t;
  k.gamma = gamma_from_inner(k.i_w2t);
  k.i_dc = inner(psi2, d_c_soliton(grid));
  k.alpha_quadrature = -inner(psi, apply_operator_c_derivative(psi));
  k.beta_direct = 12.0 * inner(psi2, w0 + w2);
  return k;
}

}  // namespace zkline
