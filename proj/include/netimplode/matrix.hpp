#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "netimplode/errors.hpp"

namespace netimplode {

// Dense row-major matrix of doubles. Parameters, activations and gradients
// all live in one of these; a bias is a 1 x n row, a scalar is 1 x 1.
class Matrix2D {
 public:
  Matrix2D() = default;
  Matrix2D(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix2D(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("Matrix2D: data length " + std::to_string(data_.size()) +
                       " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }
  Matrix2D(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw ShapeError("Matrix2D: ragged initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix2D identity(std::size_t n) {
    Matrix2D m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }

  bool same_shape(const Matrix2D& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  // Same shape and exactly equal entries (no tolerance).
  friend bool operator==(const Matrix2D&, const Matrix2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double, Eigen::aligned_allocator<double>> data_;
};

inline std::string shape_string(const Matrix2D& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

namespace detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

inline ConstMap view(const Matrix2D& m) {
  return ConstMap(m.values().data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}
inline MutMap view(Matrix2D& m) {
  return MutMap(m.values().data(), static_cast<Eigen::Index>(m.rows()),
                static_cast<Eigen::Index>(m.cols()));
}

inline void require_same_shape(const Matrix2D& a, const Matrix2D& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": " + shape_string(a) + " vs " + shape_string(b));
  }
}

}  // namespace detail

// a * b
inline Matrix2D matmul(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_string(a) + " x " + shape_string(b));
  }
  Matrix2D out(a.rows(), b.cols());
  if (!out.empty() && a.cols() > 0) detail::view(out).noalias() = detail::view(a) * detail::view(b);
  return out;
}

// a * b^T; the layer forward form (weights stored out x in).
inline Matrix2D matmul_nt(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape_string(a) + " x " + shape_string(b) + "^T");
  }
  Matrix2D out(a.rows(), b.rows());
  if (!out.empty() && a.cols() > 0) {
    detail::view(out).noalias() = detail::view(a) * detail::view(b).transpose();
  }
  return out;
}

// a^T * b; the weight-gradient form.
inline Matrix2D matmul_tn(const Matrix2D& a, const Matrix2D& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + shape_string(a) + "^T x " + shape_string(b));
  }
  Matrix2D out(a.cols(), b.cols());
  if (!out.empty() && a.rows() > 0) {
    detail::view(out).noalias() = detail::view(a).transpose() * detail::view(b);
  }
  return out;
}

inline Matrix2D transpose(const Matrix2D& a) {
  Matrix2D out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

inline void add_inplace(Matrix2D& dst, const Matrix2D& src) {
  detail::require_same_shape(dst, src, "add");
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// dst += alpha * src
inline void axpy_inplace(Matrix2D& dst, double alpha, const Matrix2D& src) {
  detail::require_same_shape(dst, src, "axpy");
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += alpha * s[i];
}

inline Matrix2D scaled(const Matrix2D& m, double alpha) {
  Matrix2D out = m;
  for (double& v : out.values()) v *= alpha;
  return out;
}

// Adds a 1 x cols bias row to every row of m.
inline void add_row_broadcast(Matrix2D& m, const Matrix2D& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols()) {
    throw ShapeError("add_row_broadcast: bias " + shape_string(bias) + " for " + shape_string(m));
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

// Column sums as a 1 x cols row (bias gradient).
inline Matrix2D column_sums(const Matrix2D& m) {
  Matrix2D out(1, m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c];
  }
  return out;
}

// Frobenius inner product.
inline double dot(const Matrix2D& a, const Matrix2D& b) {
  detail::require_same_shape(a, b, "dot");
  double acc = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

inline double abs_sum(const Matrix2D& m) {
  double acc = 0.0;
  for (double v : m.values()) acc += v < 0 ? -v : v;
  return acc;
}

inline bool all_finite(const Matrix2D& m) {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](double v) { return v - v == 0.0; });
}

// Copies rows [first, first + count) into a new matrix.
inline Matrix2D slice_rows(const Matrix2D& m, std::size_t first, std::size_t count) {
  if (first + count > m.rows()) throw ShapeError("slice_rows: out of range");
  std::vector<double> data(m.values().begin() + static_cast<std::ptrdiff_t>(first * m.cols()),
                           m.values().begin() +
                               static_cast<std::ptrdiff_t>((first + count) * m.cols()));
  return Matrix2D(count, m.cols(), std::move(data));
}

// Gathers the listed rows in order.
inline Matrix2D gather_rows(const Matrix2D& m, std::span<const std::size_t> indices) {
  Matrix2D out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(m.row(indices[i]).begin(), m.cols(), out.row(i).begin());
  }
  return out;
}

}  // namespace netimplode
