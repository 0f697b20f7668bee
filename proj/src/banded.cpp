#include "zkline/banded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "zkline/error.hpp"

namespace zkline {

BandedMatrix::BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
    : n_(n), kl_(kl), ku_(ku), data_((kl + ku + 1) * n, 0.0) {}

double& BandedMatrix::at(std::size_t i, std::size_t j) {
  return data_[(j + kl_ - i) * n_ + i];
}

double BandedMatrix::at(std::size_t i, std::size_t j) const {
  return data_[(j + kl_ - i) * n_ + i];
}

std::vector<double> BandedMatrix::apply(std::span<const double> x) const {
  std::vector<double> y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i > kl_ ? i - kl_ : 0;
    const std::size_t j1 = std::min(n_ - 1, i + ku_);
    double s = 0.0;
    for (std::size_t j = j0; j <= j1; ++j) s += at(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

void BandedMatrix::shift_diagonal(double s) {
  for (std::size_t i = 0; i < n_; ++i) at(i, i) += s;
}

BandedLU::BandedLU(const BandedMatrix& a, double pivot_threshold)
    : n_(a.size()), kl_(a.lower()), ku_(a.upper()), lu_(n_ * width(), 0.0), piv_(n_) {
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i > kl_ ? i - kl_ : 0;
    const std::size_t j1 = std::min(n_ - 1, i + ku_);
    for (std::size_t j = j0; j <= j1; ++j) el(i, j) = a.at(i, j);
  }
  min_pivot_ = std::numeric_limits<double>::infinity();
  const std::size_t ubw = kl_ + ku_;
  for (std::size_t k = 0; k < n_; ++k) {
    const std::size_t last_row = std::min(n_ - 1, k + kl_);
    const std::size_t last_col = std::min(n_ - 1, k + ubw);
    std::size_t p = k;
    for (std::size_t i = k + 1; i <= last_row; ++i) {
      if (std::abs(el(i, k)) > std::abs(el(p, k))) p = i;
    }
    const double pivot = el(p, k);
    min_pivot_ = std::min(min_pivot_, std::abs(pivot));
    if (!(std::abs(pivot) >= pivot_threshold)) {
      throw SingularMatrix("banded LU: pivot " + std::to_string(std::abs(pivot)) + " at row " +
                           std::to_string(k) + " below threshold");
    }
    piv_[k] = p;
    if (p != k) {
      for (std::size_t j = k; j <= last_col; ++j) std::swap(el(k, j), el(p, j));
    }
    const double inv = 1.0 / el(k, k);
    for (std::size_t i = k + 1; i <= last_row; ++i) {
      const double m = el(i, k) * inv;
      el(i, k) = m;
      if (m == 0.0) continue;
      for (std::size_t j = k + 1; j <= last_col; ++j) el(i, j) -= m * el(k, j);
    }
  }
}

std::vector<double> BandedLU::solve(std::span<const double> b) const {
  std::vector<double> x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

void BandedLU::solve_in_place(std::span<double> x) const {
  if (x.size() != n_) throw GridMismatch("banded solve: right-hand side has wrong length");
  for (std::size_t k = 0; k < n_; ++k) {
    if (piv_[k] != k) std::swap(x[k], x[piv_[k]]);
    const std::size_t last_row = std::min(n_ - 1, k + kl_);
    for (std::size_t i = k + 1; i <= last_row; ++i) x[i] -= el(i, k) * x[k];
  }
  const std::size_t ubw = kl_ + ku_;
  for (std::size_t k = n_; k-- > 0;) {
    const std::size_t last_col = std::min(n_ - 1, k + ubw);
    double s = x[k];
    for (std::size_t j = k + 1; j <= last_col; ++j) s -= el(k, j) * x[j];
    x[k] = s / el(k, k);
  }
}

}  // namespace zkline
