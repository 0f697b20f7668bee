#include "zkline/grid2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fftw3.h>

#include "zkline/error.hpp"

namespace zkline {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n >= 4 && (n & (n - 1)) == 0; }

void require_same(const Field2D& a, const Field2D& b) {
  if (!(a.grid() == b.grid())) throw GridMismatch("2D field grids differ");
}

}  // namespace

// ---- Grid2D ---------------------------------------------------------------

Grid2D::Grid2D(double lx, std::size_t nx, std::size_t ny) : lx_(lx), nx_(nx), ny_(ny) {
  if (!std::isfinite(lx) || lx < 200.0) throw ConfigError("Lx must be finite and >= 200");
  if (!is_pow2(nx) || !is_pow2(ny)) throw ConfigError("nx and ny must be powers of two >= 4");
}

double Grid2D::dy() const { return 2.0 * kPi / static_cast<double>(ny_); }

long Grid2D::mode_x(std::size_t ix) const {
  const long n = static_cast<long>(nx_);
  const long i = static_cast<long>(ix);
  return i <= n / 2 ? i : i - n;
}

double Grid2D::kx(std::size_t ix) const { return 2.0 * kPi / lx_ * static_cast<double>(mode_x(ix)); }

Grid2D Grid2D::from_json(const nlohmann::json& j) {
  try {
    return Grid2D(j.at("Lx").get<double>(), j.at("nx").get<std::size_t>(), j.at("ny").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad 2D grid record: ") + e.what());
  }
}

// ---- Field2D --------------------------------------------------------------

Field2D::Field2D(const Grid2D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw GridMismatch("2D field length does not match grid");
}

Field2D Field2D::sample(const Grid2D& grid, const std::function<double(double, double)>& f) {
  Field2D out(grid);
  for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
    for (std::size_t iy = 0; iy < grid.ny(); ++iy) out.at(ix, iy) = f(grid.x(ix), grid.y(iy));
  }
  return out;
}

double Field2D::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool Field2D::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> Field2D::y_mean() const {
  std::vector<double> m(grid_.nx(), 0.0);
  for (std::size_t ix = 0; ix < grid_.nx(); ++ix) {
    double s = 0.0;
    for (std::size_t iy = 0; iy < grid_.ny(); ++iy) s += at(ix, iy);
    m[ix] = s / static_cast<double>(grid_.ny());
  }
  return m;
}

Field2D operator+(const Field2D& a, const Field2D& b) {
  require_same(a, b);
  Field2D out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Field2D operator-(const Field2D& a, const Field2D& b) {
  require_same(a, b);
  Field2D out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Field2D operator*(double s, const Field2D& a) {
  Field2D out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

double inner(const Field2D& a, const Field2D& b) {
  require_same(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid().cell_area();
}

double l2_norm(const Field2D& a) { return std::sqrt(inner(a, a)); }

// ---- Fft2D ----------------------------------------------------------------

struct Fft2D::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  ~Plans() {
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    fftw_free(real);
    fftw_free(spec);
  }
};

Fft2D::Fft2D(const Grid2D& grid) : grid_(grid), plans_(std::make_unique<Plans>()) {
  const int nx = static_cast<int>(grid.nx()), ny = static_cast<int>(grid.ny());
  plans_->real = fftw_alloc_real(grid.size());
  plans_->spec = fftw_alloc_complex(grid.spectral_size());
  if (!plans_->real || !plans_->spec) throw Error("FFTW allocation failed");
  plans_->fwd = fftw_plan_dft_r2c_2d(nx, ny, plans_->real, plans_->spec, FFTW_ESTIMATE);
  plans_->inv = fftw_plan_dft_c2r_2d(nx, ny, plans_->spec, plans_->real, FFTW_ESTIMATE);
  if (!plans_->fwd || !plans_->inv) throw Error("FFTW planning failed");
}

Fft2D::~Fft2D() = default;

void Fft2D::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (in.size() != grid_.size() || out.size() != grid_.spectral_size()) {
    throw GridMismatch("FFT buffer sizes do not match grid");
  }
  std::copy(in.begin(), in.end(), plans_->real);
  fftw_execute(plans_->fwd);
  const auto* spec = reinterpret_cast<const std::complex<double>*>(plans_->spec);
  std::copy(spec, spec + out.size(), out.begin());
}

void Fft2D::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  if (out.size() != grid_.size() || in.size() != grid_.spectral_size()) {
    throw GridMismatch("FFT buffer sizes do not match grid");
  }
  std::copy(in.begin(), in.end(), reinterpret_cast<std::complex<double>*>(plans_->spec));
  fftw_execute(plans_->inv);
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = plans_->real[i] * scale;
}

std::vector<std::complex<double>> Fft2D::forward(const Field2D& f) {
  if (!(f.grid() == grid_)) throw GridMismatch("field grid differs from FFT grid");
  std::vector<std::complex<double>> out(grid_.spectral_size());
  forward(f.values(), out);
  return out;
}

Field2D Fft2D::inverse(std::span<const std::complex<double>> in) {
  Field2D out(grid_);
  inverse(in, out.values());
  return out;
}

Field2D apply_symbol(Fft2D& fft, const Field2D& f,
                     const std::function<std::complex<double>(double, double)>& symbol,
                     bool zero_nyquist) {
  const Grid2D& g = fft.grid();
  auto spec = fft.forward(f);
  const std::size_t nyh = g.spectral_ny();
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    for (std::size_t iy = 0; iy < nyh; ++iy) {
      auto& s = spec[ix * nyh + iy];
      if (zero_nyquist && (ix == g.nx() / 2 || iy == g.ny() / 2)) {
        s = 0.0;
      } else {
        s *= symbol(g.kx(ix), g.ky(iy));
      }
    }
  }
  return fft.inverse(spec);
}

bool dealias_keep(const Grid2D& grid, std::size_t ix, std::size_t iy) {
  const long mx = std::labs(grid.mode_x(ix));
  const long my = static_cast<long>(iy);
  return 3 * mx < static_cast<long>(grid.nx()) && 3 * my < static_cast<long>(grid.ny());
}

// ---- Dct2D ----------------------------------------------------------------

Dct2D::Dct2D(std::size_t mx, std::size_t my) : mx_(mx), my_(my) {
  if (mx < 2 || my < 2) throw ConfigError("DCT-I needs at least two points per direction");
  buf_ = fftw_alloc_real(mx * my);
  if (!buf_) throw Error("FFTW allocation failed");
  plan_ = fftw_plan_r2r_2d(static_cast<int>(mx), static_cast<int>(my), buf_, buf_, FFTW_REDFT00,
                           FFTW_REDFT00, FFTW_ESTIMATE);
  if (!plan_) {
    fftw_free(buf_);
    throw Error("FFTW planning failed");
  }
}

Dct2D::~Dct2D() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(buf_);
}

void Dct2D::apply(std::span<const double> in, std::span<double> out) {
  if (in.size() != mx_ * my_ || out.size() != mx_ * my_) throw GridMismatch("DCT buffer size mismatch");
  std::copy(in.begin(), in.end(), buf_);
  fftw_execute(static_cast<fftw_plan>(plan_));
  std::copy(buf_, buf_ + out.size(), out.begin());
}

}  // namespace zkline
