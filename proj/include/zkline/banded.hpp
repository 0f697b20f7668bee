#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace zkline {

// Square band matrix with kl sub- and ku super-diagonals, stored by diagonals.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku);

  std::size_t size() const { return n_; }
  std::size_t lower() const { return kl_; }
  std::size_t upper() const { return ku_; }

  // Entry (i, j); must lie inside the band.
  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;
  bool in_band(std::size_t i, std::size_t j) const {
    return j + kl_ >= i && i + ku_ >= j;
  }

  std::vector<double> apply(std::span<const double> x) const;

  // Adds s to every diagonal entry.
  void shift_diagonal(double s);

 private:
  std::size_t n_ = 0, kl_ = 0, ku_ = 0;
  std::vector<double> data_;  // (kl + ku + 1) x n, row d holds diagonal d - kl
};

// LU factorization with partial pivoting; fill-in widens the upper band to
// kl + ku.  Throws SingularMatrix when a pivot magnitude falls below
// pivot_threshold.
class BandedLU {
 public:
  explicit BandedLU(const BandedMatrix& a, double pivot_threshold = 1e-12);

  std::vector<double> solve(std::span<const double> b) const;
  void solve_in_place(std::span<double> b) const;

  std::size_t size() const { return n_; }
  double min_pivot() const { return min_pivot_; }

 private:
  std::size_t n_, kl_, ku_;
  std::vector<double> lu_;  // n x (2 kl + ku + 1), row-major band rows
  std::vector<std::size_t> piv_;
  double min_pivot_ = 0.0;

  std::size_t width() const { return 2 * kl_ + ku_ + 1; }
  double& el(std::size_t i, std::size_t j) { return lu_[i * width() + (j + kl_ - i)]; }
  double el(std::size_t i, std::size_t j) const { return lu_[i * width() + (j + kl_ - i)]; }
};

}  // namespace zkline
