#pragma once

// Transverse spectral problem d/dxi (L_c + k^2) U = lambda U.
//
// Central differences on the interior nodes of a Dirichlet grid.  The
// unstable eigenfunction has a slowly decaying tail (rate ~ lambda / (4c+k^2))
// so the default grid is much wider than the one used for the BVPs.

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "zkline/banded.hpp"
#include "zkline/kdv_core.hpp"

namespace zkline {

// L = 1600, n = 32001 (h = 0.1).
Grid1D default_spectral_grid();

// c_k = k^2 / 5
double threshold_speed(int k);

struct SpectralConfig {
  Grid1D grid = default_spectral_grid();
  int k = 1;
  double c = kCriticalSpeed;
  double mu = 0.0;          // exponential weight, 0 <= mu < 2 sqrt(c)
  double tolerance = 1e-6;  // in (0, 1e-6]

  // Throws ConfigError.
  void validate() const;
};

// (D - mu)(L~ + k^2) on the n-2 interior nodes, L~ = L_c with d -> d - mu.
// Pentadiagonal.
BandedMatrix assemble_linearized(const SpectralConfig& cfg);
// Same matrix as a dense array; requires n <= 2001.
Eigen::MatrixXd assemble_linearized_dense(const SpectralConfig& cfg);
// Matrix applied to the interior values of f; zero at the two end nodes.
Field1D apply_linearized(const SpectralConfig& cfg, const Field1D& f);

struct UnstableMode {
  double lambda = 0.0;
  Field1D eigenfunction;  // unit discrete L2 norm
  double residual = 0.0;  // ||M U - lambda U|| / ||U||
};

struct SpectralResult {
  SpectralConfig config;
  std::vector<std::complex<double>> eigenvalues;  // converged Ritz values
  std::optional<UnstableMode> unstable;
  bool threshold_flag = false;  // c > c_k
};

// Largest real eigenvalue found by shift-invert Arnoldi around the predicted
// branch lambda ~ 2 (c - c_k).  Unstable iff Re lambda > 10 tol and
// |Im lambda| <= tol after refinement; eigenvectors with more than 10% of
// their mass in the outer 10% of the domain are discarded as truncation
// artifacts.  Throws ConvergenceError if the small eigenproblem fails.
SpectralResult unstable_eigenvalue(const SpectralConfig& cfg);

// Up to `count` eigenvalues nearest to `shift` with relative residual
// <= cfg.tolerance.
std::vector<std::complex<double>> eigenvalues_near(const SpectralConfig& cfg, double shift,
                                                   int count = 10);

// Full spectrum by a dense eigensolve; requires n <= 2001.
std::vector<std::complex<double>> dense_spectrum(const SpectralConfig& cfg);

struct SlopeFit {
  std::vector<double> offsets;  // c - c_k
  std::vector<double> lambdas;
  double slope = 0.0;        // s in lambda = s d + q d^2
  double quadratic = 0.0;    // q
  double slope_linear = 0.0; // best s in lambda = s d alone
};

// Least-squares fit through the origin.  Needs at least 4 offsets in (0, 0.05];
// throws ConvergenceError if any eigenvalue is missing.
SlopeFit eigenvalue_slope(const std::vector<double>& offsets, const SpectralConfig& base);

// Smallest eigenvalue of the three-point L_{c*} + k^2 on `grid`.
double coercivity_spectrum(int k, const Grid1D& grid = Grid1D());

struct ThresholdBracket {
  double stable = 0.0;
  double unstable = 0.0;
  int evaluations = 0;
  double estimate() const { return 0.5 * (stable + unstable); }
};

// Bisection on c for the onset of instability.  `lo` must be stable and
// `hi` unstable (ConfigError otherwise); stops once hi - lo <= width.
ThresholdBracket threshold_bisection(const SpectralConfig& base, double lo, double hi,
                                     double width = 1e-4);

// k = 0 generalized kernel: M d_xi u_c = 0 and M d_c u_c = -4 d_xi u_c.
struct JordanResiduals {
  double kernel = 0.0;       // ||M d_xi u_c||
  double generalized = 0.0;  // ||M d_c u_c + 4 d_xi u_c||
};

JordanResiduals jordan_residuals(double c, const Grid1D& grid);

}  // namespace zkline
