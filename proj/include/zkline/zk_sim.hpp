#pragma once

// Pseudospectral time integration of
//   u_t + 12 u u_x + u_xxx + u_xyy = 0
// on the doubly periodic Grid2D, optionally in a frame moving with velocity V.

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "zkline/grid2d.hpp"

namespace zkline {

enum class Integrator { etd_rk4, if_rk4 };

Integrator parse_integrator(const std::string& name);
std::string to_string(Integrator i);

struct SimConfig {
  Grid2D grid;
  double dt = 5e-4;
  double t_end = 10.0;
  bool dealias = true;
  std::size_t snapshot_stride = 0;  // steps between snapshots, 0 for first and last only
  Integrator integrator = Integrator::etd_rk4;
  double frame_velocity = 0.0;  // x-velocity of the computational frame
  bool filter = false;          // exponential filter on the top 5% of retained modes
  double sponge_width = 0.0;    // absorbing layer width at each end of the x-box
  double sponge_rate = 0.0;     // peak damping rate of the layer

  // Throws ConfigError.  The linear part is integrated exactly by both
  // schemes, so dt is limited only by the advective bound max_stable_dt.
  void validate() const;
  std::size_t steps() const;

  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& j);
};

// dt bound 2.8 / (12 |u|max kmax), kmax the largest retained x-wavenumber.
double max_stable_dt(const Grid2D& grid, bool dealias, double amplitude = 0.5);

struct SimState {
  double t = 0.0;
  Field2D u;
  double energy = 0.0;
  double momentum = 0.0;
  long step = 0;
};

// i (kx^3 + kx ky^2 + V kx) in the r2c layout of the grid.
std::vector<std::complex<double>> rhs_linear_symbol(const Grid2D& grid, double frame_velocity = 0.0);

// E = 1/2 int (u_x^2 + u_y^2 - 4 u^3), Q = 1/2 int u^2, spectral derivatives.
double energy(const Field2D& u);
double momentum(const Field2D& u);

// L2 norm over the box of the y-Fourier component k (both +k and -k).
double transverse_mode_norm(const Field2D& u, std::size_t k);

// Same, restricted to |x - center| <= half_width (periodic distance).
double transverse_mode_norm(const Field2D& u, std::size_t k, double center, double half_width);

// u_{c0}(x - x_center) + 2 eps cos(y) psi*(x - x_center), eps in [0, 0.2].
SimState init_perturbed_soliton(double c0, double eps, const Grid2D& grid, double x_center = 0.0);

// Position of the profile c sech^2(sqrt(c)(x - X)) best matching the y-mean of
// u: cross-correlation peak refined by Newton on the correlation derivative.
double soliton_position(const Field2D& u, double c);

// Largest violation of conjugate symmetry in the self-conjugate spectral
// columns, relative to the largest coefficient.
double reality_defect(const Grid2D& grid, std::span<const std::complex<double>> spec);

class Simulator {
 public:
  explicit Simulator(SimConfig cfg);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const SimConfig& config() const { return cfg_; }

  // Loads u0 (dealiased when enabled) at time t0.
  void reset(const Field2D& u0, double t0 = 0.0);

  // One time step.  On a non-finite result throws Error and keeps the
  // previous state.
  void step();

  // Steps to t_end, calling on_snapshot at the first step, every stride
  // steps and at the end.
  void run(const std::function<void(const SimState&)>& on_snapshot);

  double time() const { return t_; }
  long step_count() const { return steps_; }
  Field2D field() const;
  std::span<const std::complex<double>> spectrum() const { return spec_; }
  // Field with energy and momentum evaluated.
  SimState state() const;

 private:
  struct Work;
  void nonlinear(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);

  SimConfig cfg_;
  std::unique_ptr<Work> work_;
  std::vector<std::complex<double>> spec_;
  double t_ = 0.0;
  long steps_ = 0;
};

// Convenience single step; builds the integrator from scratch.
SimState step(const SimState& state, const SimConfig& cfg);

}  // namespace zkline
