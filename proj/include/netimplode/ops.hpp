#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "netimplode/errors.hpp"
#include "netimplode/matrix.hpp"
#include "netimplode/rng.hpp"

namespace netimplode {

inline Matrix2D relu(const Matrix2D& x) {
  Matrix2D out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

// Passes upstream where x > 0; the subgradient at 0 is taken as 0.
inline Matrix2D relu_backward(const Matrix2D& x, const Matrix2D& upstream) {
  detail::require_same_shape(x, upstream, "relu_backward");
  Matrix2D out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? upstream[i] : 0.0;
  return out;
}

struct LossAndGrad {
  double loss = 0.0;
  Matrix2D grad;  // d(mean loss)/d(logits)
};

// Mean softmax cross-entropy over the rows of logits; row-max subtraction
// keeps exp() in range.
inline LossAndGrad softmax_cross_entropy(const Matrix2D& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(logits.rows()) + " rows vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t classes = logits.cols();
  LossAndGrad result{0.0, Matrix2D(logits.rows(), classes)};
  if (logits.rows() == 0) return result;
  const double inv_batch = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DomainError("softmax_cross_entropy: label " + std::to_string(y) + " outside [0, " +
                        std::to_string(classes) + ")");
    }
    auto row = logits.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) total += std::exp(v - peak);
    const double log_total = std::log(total);
    result.loss += (log_total - (row[static_cast<std::size_t>(y)] - peak)) * inv_batch;
    auto grad = result.grad.row(r);
    for (std::size_t c = 0; c < classes; ++c) {
      grad[c] = std::exp(row[c] - peak - log_total) * inv_batch;
    }
    grad[static_cast<std::size_t>(y)] -= inv_batch;
  }
  return result;
}

// Row softmax (probabilities), used for margin scores.
inline Matrix2D softmax(const Matrix2D& logits) {
  Matrix2D out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    if (row.empty()) continue;
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    auto dst = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) total += dst[c] = std::exp(row[c] - peak);
    for (double& v : dst) v /= total;
  }
  return out;
}

// N(0, 2 / fan_in) with fan_in = cols; weights are stored out x in.
inline Matrix2D he_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw ShapeError("he_init: empty shape");
  const double stddev = std::sqrt(2.0 / static_cast<double>(cols));
  Matrix2D out(rows, cols);
  for (double& v : out.values()) v = stddev * rng.normal();
  return out;
}

}  // namespace netimplode
