#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace srcsel {

// Dense row-major matrix; one row per vocabulary id.
template <typename Real>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Real fill = Real{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<Real> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

// Eight independent accumulators let the compiler vectorize the reduction
// without -ffast-math.
template <typename Real>
inline Real dot(std::span<const Real> a, std::span<const Real> b) {
  const std::size_t n = a.size();
  Real acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  }
  Real tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

// y += alpha * x
template <typename Real>
inline void axpy(Real alpha, std::span<const Real> x, std::span<Real> y) {
  const std::size_t n = x.size();
  Real* yp = y.data();
  const Real* xp = x.data();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    Real t[8];
    for (std::size_t j = 0; j < 8; ++j) t[j] = yp[i + j] + alpha * xp[i + j];
    for (std::size_t j = 0; j < 8; ++j) yp[i + j] = t[j];
  }
  for (; i < n; ++i) yp[i] += alpha * xp[i];
}

template <typename Real>
inline Real norm(std::span<const Real> a) {
  return std::sqrt(dot(a, a));
}

// Cosine similarity; 0 when either vector has zero norm.
template <typename Real>
inline double cosine(std::span<const Real> a, std::span<const Real> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return static_cast<double>(dot(a, b)) / (na * nb);
}

}  // namespace srcsel
