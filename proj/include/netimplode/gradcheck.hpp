#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>

#include "netimplode/errors.hpp"
#include "netimplode/matrix.hpp"

namespace netimplode {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t tensor = 0;   // where the worst element lives
  std::size_t element = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences (f(x+h) - f(x-h)) / 2h against `analytic`, element by
// element over every tensor in `params`. The relative error denominator is
// max(|analytic|, |numeric|, floor); below `floor` the comparison is
// effectively absolute, which keeps rounding noise on near-zero gradients
// from dominating.
inline GradCheckResult finite_diff_check(const std::function<double()>& loss,
                                         std::span<Matrix2D* const> params,
                                         std::span<const Matrix2D> analytic, double h,
                                         double floor = 1e-4) {
  if (!(h > 0.0)) throw DomainError("finite_diff_check: step must be positive");
  if (params.size() != analytic.size()) {
    throw ShapeError("finite_diff_check: tensor count mismatch");
  }
  GradCheckResult worst;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix2D& p = *params[t];
    detail::require_same_shape(p, analytic[t], "finite_diff_check");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + h;
      const double up = loss();
      p[i] = saved - h;
      const double down = loss();
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[t][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double err = std::abs(a - numeric) / denom;
      if (err > worst.max_relative_error || (t == 0 && i == 0)) {
        worst = {err, t, i, a, numeric};
      }
    }
  }
  return worst;
}

}  // namespace netimplode
