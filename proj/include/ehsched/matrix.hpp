#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace ehsched {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Sized once, never reshaped.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols),
        a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return a_.size(); }

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return a_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return a_[static_cast<std::size_t>(r) * cols_ + c];
  }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  void fill(double v) { a_.assign(a_.size(), v); }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

// out = m * x
inline void matvec_into(const Matrix& m, const Vec& x, Vec& out) {
  assert(static_cast<int>(x.size()) == m.cols());
  out.assign(static_cast<std::size_t>(m.rows()), 0.0);
  const double* row = m.data();
  for (int r = 0; r < m.rows(); ++r, row += m.cols()) {
    double acc = 0.0;
    for (int c = 0; c < m.cols(); ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

// m += a * b^T
inline void add_outer(Matrix& m, const Vec& a, const Vec& b) {
  assert(static_cast<int>(a.size()) == m.rows());
  assert(static_cast<int>(b.size()) == m.cols());
  double* row = m.data();
  for (int r = 0; r < m.rows(); ++r, row += m.cols()) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    for (int c = 0; c < m.cols(); ++c) row[c] += ar * b[c];
  }
}

// out += m^T * v
inline void add_matvec_transposed(const Matrix& m, const Vec& v, Vec& out) {
  assert(static_cast<int>(v.size()) == m.rows());
  assert(static_cast<int>(out.size()) == static_cast<std::size_t>(m.cols()));
  const double* row = m.data();
  for (int r = 0; r < m.rows(); ++r, row += m.cols()) {
    const double vr = v[r];
    if (vr == 0.0) continue;
    for (int c = 0; c < m.cols(); ++c) out[c] += vr * row[c];
  }
}

inline void add_scaled(Vec& dst, const Vec& src, double s) {
  assert(dst.size() == src.size());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

}  // namespace ehsched
