#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace refnet {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major dense matrix of 64-bit reals. The whole pipeline fits in
// doubles at desk scale, and doubles keep gradient checks tight.
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }

  double* row(std::size_t r) { return v_.data() + r * cols_; }
  const double* row(std::size_t r) const { return v_.data() + r * cols_; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  void require_finite(const char* what) const {
    if (!all_finite()) throw NumericError(std::string("non-finite values in ") + what);
  }

  friend bool operator==(const Dense& a, const Dense& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.v_ == b.v_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// C (m x n) = A (m x k) * B (k x n), accumulating into C.
inline void matmul_add(const Dense& a, const Dense& b, Dense& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols())
    throw NumericError("matmul shape mismatch");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      double aip = arow[p];
      if (aip == 0.0) continue;
      const double* brow = b.row(p);
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace refnet
