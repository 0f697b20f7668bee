#pragma once

// Transversely modulated solitary waves: even-even solutions of
//   -u_xx - u_yy + 4 c u - 6 u^2 = 0   on Grid2D.

#include <vector>

#include "zkline/coeffs.hpp"
#include "zkline/grid2d.hpp"

namespace zkline {

// Pointwise residual by spectral differentiation on the full grid.
Field2D elliptic_residual(const Field2D& u, double c);

// y-independent line soliton c sech^2(sqrt(c) x).
Field2D line_soliton_2d(const Grid2D& grid, double c);
// cos(y) psi*(x)
Field2D neutral_mode_2d(const Grid2D& grid);
// u_{c*} + 2 b0 cos(y) psi*
Field2D wave_guess(const Grid2D& grid, double b0);

// <cos(y) psi*, u - u_{c*}> / (2 <cos(y) psi*, cos(y) psi*>), the coefficient
// b of 2 b cos(y) psi*.
double extract_b(const Field2D& u);

// sqrt(alpha (c - c*) / |beta|), zero for c <= c*.
double predicted_amplitude(double c, const NormalFormCoeffs& k);

struct WaveSolverOptions {
  double tolerance = 1e-10;  // sup-norm of the residual
  int max_newton = 30;
  double gmres_tolerance = 1e-12;  // relative
  int gmres_restart = 50;
  int gmres_max_iterations = 500;
  double branch_loss_threshold = 1e-6;  // |b| below this on c > c* is a lost branch
};

struct ModulatedWave {
  double c = 0.0;
  Field2D field;
  double b_extracted = 0.0;
  double residual_norm = 0.0;  // sup-norm on the full grid
  int newton_iters = 0;
  bool branch_lost = false;
  std::vector<double> residual_history;
};

// Newton iteration on the even-even sector (DCT-I in both directions) with
// GMRES(restart) linear solves, right-preconditioned by exact per-y-mode
// solves of -d_xx + q^2 + 4c - 12 mean_y(u).  The guess is symmetrized.
// Throws ConvergenceError (message carries the residual history) when Newton
// stalls or diverges; ConfigError for c <= 0.
ModulatedWave solve_modulated_wave(double c, const Field2D& guess,
                                   const WaveSolverOptions& opts = {});

// Continuation over increasing speeds; each point starts from the previous
// solution, the first from wave_guess with the predicted amplitude.
std::vector<ModulatedWave> compute_branch(const std::vector<double>& speeds, const Grid2D& grid,
                                          const NormalFormCoeffs& k,
                                          const WaveSolverOptions& opts = {});

struct BifurcationFit {
  double slope = 0.0;           // b^2 = slope (c - c*)
  double target = 0.0;          // alpha / |beta|
  double relative_error = 0.0;
  std::vector<double> remainder_constants;  // ||u - u_{c*} - 2 b cos(y) psi*|| / b^2
  std::vector<double> mean_constants;       // ||mean_y u - u_{c*}||_{L2(R x T)} / b^2
  bool monotone = false;        // b increases with c
};

// Needs at least 4 converged points with c - c* in [0.002, 0.02]
// (ConvergenceError otherwise).
BifurcationFit bifurcation_fit(const std::vector<ModulatedWave>& branch, const NormalFormCoeffs& k);

}  // namespace zkline
