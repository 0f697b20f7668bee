#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace zkline {

// Doubly periodic tensor grid: x in [-Lx/2, Lx/2), y in [0, 2 pi).
class Grid2D {
 public:
  Grid2D() : Grid2D(200.0, 1024, 32) {}
  // Throws ConfigError unless nx, ny are powers of two (>= 4) and Lx >= 200.
  Grid2D(double lx, std::size_t nx, std::size_t ny);

  double lx() const { return lx_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  double dx() const { return lx_ / static_cast<double>(nx_); }
  double dy() const;
  double cell_area() const { return dx() * dy(); }

  double x(std::size_t ix) const { return -0.5 * lx_ + static_cast<double>(ix) * dx(); }
  double y(std::size_t iy) const { return static_cast<double>(iy) * dy(); }
  std::size_t index(std::size_t ix, std::size_t iy) const { return ix * ny_ + iy; }

  // Angular wavenumbers of the r2c layout: ix in [0, nx), iy in [0, ny/2].
  double kx(std::size_t ix) const;
  double ky(std::size_t iy) const { return static_cast<double>(iy); }
  // Signed integer mode index along x.
  long mode_x(std::size_t ix) const;
  std::size_t spectral_ny() const { return ny_ / 2 + 1; }
  std::size_t spectral_size() const { return nx_ * spectral_ny(); }

  nlohmann::json to_json() const { return {{"Lx", lx_}, {"nx", nx_}, {"ny", ny_}}; }
  static Grid2D from_json(const nlohmann::json& j);

  bool operator==(const Grid2D& o) const { return lx_ == o.lx_ && nx_ == o.nx_ && ny_ == o.ny_; }

 private:
  double lx_;
  std::size_t nx_, ny_;
};

// Row-major nx x ny real field, values[ix * ny + iy].
class Field2D {
 public:
  Field2D() = default;
  explicit Field2D(const Grid2D& grid) : grid_(grid), values_(grid.size(), 0.0) {}
  Field2D(const Grid2D& grid, std::vector<double> values);

  static Field2D sample(const Grid2D& grid, const std::function<double(double, double)>& f);

  const Grid2D& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double at(std::size_t ix, std::size_t iy) const { return values_[grid_.index(ix, iy)]; }
  double& at(std::size_t ix, std::size_t iy) { return values_[grid_.index(ix, iy)]; }

  double max_abs() const;
  bool all_finite() const;
  // Mean over y for every x node.
  std::vector<double> y_mean() const;

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

Field2D operator+(const Field2D& a, const Field2D& b);
Field2D operator-(const Field2D& a, const Field2D& b);
Field2D operator*(double s, const Field2D& a);

// Sum over nodes of a * b * dx * dy (exact for trigonometric polynomials).
double inner(const Field2D& a, const Field2D& b);
double l2_norm(const Field2D& a);

// FFTW r2c / c2r pair bound to one grid.  Plans use FFTW_ESTIMATE so that
// results are reproducible from run to run.
class Fft2D {
 public:
  explicit Fft2D(const Grid2D& grid);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  const Grid2D& grid() const { return grid_; }

  // Unnormalized forward transform.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // Inverse including the 1/(nx ny) factor.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

  std::vector<std::complex<double>> forward(const Field2D& f);
  Field2D inverse(std::span<const std::complex<double>> in);

 private:
  struct Plans;
  Grid2D grid_;
  std::unique_ptr<Plans> plans_;
};

// Multiplies the spectrum of f by symbol(kx, ky).  With zero_nyquist the
// Nyquist rows and columns are cleared (use for odd derivatives).
Field2D apply_symbol(Fft2D& fft, const Field2D& f,
                     const std::function<std::complex<double>(double, double)>& symbol,
                     bool zero_nyquist = false);

// 2/3-rule mask: true for retained modes.
bool dealias_keep(const Grid2D& grid, std::size_t ix, std::size_t iy);

// Two-dimensional DCT-I on an (mx x my) array, the even-even sector of a
// doubly periodic grid.  Unnormalized; forward followed by forward scales by
// 4 (mx - 1)(my - 1).
class Dct2D {
 public:
  Dct2D(std::size_t mx, std::size_t my);
  ~Dct2D();
  Dct2D(const Dct2D&) = delete;
  Dct2D& operator=(const Dct2D&) = delete;

  std::size_t mx() const { return mx_; }
  std::size_t my() const { return my_; }
  void apply(std::span<const double> in, std::span<double> out);

 private:
  std::size_t mx_, my_;
  double* buf_;
  void* plan_;
};

}  // namespace zkline
