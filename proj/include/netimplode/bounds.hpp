#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "netimplode/errors.hpp"
#include "netimplode/matrix.hpp"

namespace netimplode {

using BigInt = boost::multiprecision::cpp_int;

// Shape and statistics of an FC-ResNet as the complexity bounds see it.
// Indices into `widths` / factor lists are 1-based in the public API
// (l = 1..L), matching how units are numbered along the residual path.
struct ArchitectureSignature {
  std::size_t n0 = 2;               // input width
  std::vector<std::size_t> widths;  // n_1 .. n_L
  double input_bound = 1.0;         // N, inputs live in [-N, N]^n0
  double c = 1.0;                   // constant of the Rademacher bound
  std::size_t m = 1;                // sample count
  std::size_t classes = 2;          // M
  double delta = 0.05;              // confidence parameter
  double rho = 1.0;                 // margin, in (0, 1]

  std::size_t depth() const { return widths.size(); }

  void validate() const {
    if (n0 == 0) throw DomainError("signature: n0 must be positive");
    if (widths.empty()) throw DomainError("signature: at least one layer width required");
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (widths[i] < n0) {
        throw DomainError("signature: n_" + std::to_string(i + 1) + " = " + std::to_string(widths[i]) +
                          " < n0 = " + std::to_string(n0));
      }
    }
    if (!(input_bound > 0.0) || !std::isfinite(input_bound)) throw DomainError("signature: N must be positive");
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("signature: c must be positive");
    if (m == 0) throw DomainError("signature: m must be at least 1");
    if (classes < 2) throw DomainError("signature: M must be at least 2");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("signature: delta must lie in (0, 1)");
    if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("signature: rho must lie in (0, 1]");
  }
};

// ---------------------------------------------------------------------------
// Linear-region lower bounds (exact integers)

// Number of input-to-output paths through L residual units: 2^L.
inline BigInt count_paths(std::size_t layers) { return BigInt(1) << layers; }

// sum_{j=0}^{k} C(n, j) from one Pascal row.
inline BigInt binomial_prefix_sum(std::size_t n, std::size_t k) {
  const std::size_t top = std::min(n, k);
  std::vector<BigInt> row(top + 1, BigInt(0));
  row[0] = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = std::min(i, top); j >= 1; --j) row[j] += row[j - 1];
  }
  BigInt total = 0;
  for (const auto& v : row) total += v;
  return total;
}

namespace detail {

inline void check_region_args(std::size_t n0, std::span<const std::size_t> widths) {
  if (n0 == 0) throw DomainError("region bound: n0 must be positive");
  if (widths.empty()) throw DomainError("region bound: at least one layer width required");
  for (std::size_t w : widths) {
    if (w < n0) throw DomainError("region bound: every n_i must be >= n0");
  }
}

inline BigInt region_bound_skipping(std::size_t n0, std::span<const std::size_t> widths,
                                    std::size_t skip /* 1-based, 0 = none */) {
  BigInt product = 1;
  const std::size_t L = widths.size();
  for (std::size_t i = 1; i + 1 <= L; ++i) {  // i = 1 .. L-1
    if (i == skip) continue;
    product *= boost::multiprecision::pow(BigInt(widths[i - 1] / n0), static_cast<unsigned>(n0));
  }
  return product * binomial_prefix_sum(widths[L - 1], n0);
}

}  // namespace detail

// (prod_{i=1}^{L-1} floor(n_i / n0)^n0) * sum_{j=0}^{n0} C(n_L, j)
inline BigInt region_bound(std::size_t n0, std::span<const std::size_t> widths) {
  detail::check_region_args(n0, widths);
  return detail::region_bound_skipping(n0, widths, 0);
}

// Same product with the factor of unit `erased` (1 <= erased < L) left out.
inline BigInt region_bound_after_erasure(std::size_t n0, std::span<const std::size_t> widths,
                                         std::size_t erased) {
  detail::check_region_args(n0, widths);
  if (erased < 1 || erased >= widths.size()) {
    throw DomainError("region bound after erasure: index " + std::to_string(erased) + " outside [1, " +
                      std::to_string(widths.size() - 1) + "]");
  }
  return detail::region_bound_skipping(n0, widths, erased);
}

// ---------------------------------------------------------------------------
// Rademacher upper bounds. Natural logarithm throughout.

namespace detail {

inline double rademacher_prefactor(double c, double input_bound, std::size_t n0, std::size_t m) {
  if (n0 < 2) throw DomainError("rademacher bound: n0 must be >= 2 (log n0 > 0)");
  if (m == 0) throw DomainError("rademacher bound: m must be at least 1");
  if (!(c > 0.0) || !(input_bound > 0.0)) throw DomainError("rademacher bound: c and N must be positive");
  return c * input_bound * std::sqrt(std::log(static_cast<double>(n0)) / static_cast<double>(m));
}

inline void check_factors(std::span<const double> factors) {
  if (factors.empty()) throw DomainError("rademacher bound: no layer factors");
  for (double f : factors) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw DomainError("rademacher bound: factors must be finite and >= 0");
  }
}

inline void check_index(std::span<const double> factors, std::size_t index) {
  if (index < 1 || index > factors.size()) {
    throw DomainError("layer index " + std::to_string(index) + " outside [1, " +
                      std::to_string(factors.size()) + "]");
  }
}

}  // namespace detail

// c * N * sqrt(log n0 / m) * prod_l W_l
inline double rademacher_bound(double c, double input_bound, std::size_t n0, std::size_t m,
                               std::span<const double> factors) {
  const double pre = detail::rademacher_prefactor(c, input_bound, n0, m);
  detail::check_factors(factors);
  double product = 1.0;
  for (double f : factors) product *= f;
  return pre * product;
}

inline double rademacher_bound_after_erasure(double c, double input_bound, std::size_t n0, std::size_t m,
                                             std::span<const double> factors, std::size_t erased) {
  const double pre = detail::rademacher_prefactor(c, input_bound, n0, m);
  detail::check_factors(factors);
  detail::check_index(factors, erased);
  double product = 1.0;
  for (std::size_t l = 1; l <= factors.size(); ++l)
    if (l != erased) product *= factors[l - 1];
  return pre * product;
}

// Erasing unit l' shrinks the bound exactly when its factor exceeds 1.
inline bool erasure_tightens(std::span<const double> factors, std::size_t erased) {
  detail::check_index(factors, erased);
  return factors[erased - 1] > 1.0;
}

// ---------------------------------------------------------------------------
// Margins and the generalization bound

// f(x, y) - max_{z != y} f(x, z)
inline double margin(std::span<const double> scores, std::size_t y) {
  if (scores.size() < 2) throw DomainError("margin: need at least two class scores");
  if (y >= scores.size()) throw DomainError("margin: class " + std::to_string(y) + " out of range");
  double rival = -INFINITY;
  for (std::size_t z = 0; z < scores.size(); ++z)
    if (z != y && scores[z] > rival) rival = scores[z];
  return scores[y] - rival;
}

// Fraction of rows whose margin is <= rho.
inline double empirical_margin_error(const Matrix2D& scores, std::span<const int> labels, double rho) {
  if (!(rho > 0.0)) throw DomainError("empirical margin error: rho must be positive");
  if (labels.empty() || scores.rows() == 0) throw DomainError("empirical margin error: empty sample");
  if (scores.rows() != labels.size()) throw ShapeError("empirical margin error: rows vs labels");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw DomainError("empirical margin error: negative label");
    if (margin(scores.row(i), static_cast<std::size_t>(labels[i])) <= rho) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

inline double margin_coefficient(std::size_t classes, double rho) {
  const double M = static_cast<double>(classes);
  return 8.0 * M * (2.0 * M - 1.0) / rho;
}

// emp + (8M(2M-1)/rho) R + sqrt(ln(log2(2/rho)) / m) + sqrt(ln(2/delta) / (2m))
inline double generalization_bound(double emp_err, double rademacher, std::size_t classes, double rho,
                                   std::size_t m, double delta) {
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("generalization bound: rho must lie in (0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("generalization bound: delta must lie in (0, 1)");
  if (m == 0) throw DomainError("generalization bound: m must be at least 1");
  if (classes < 2) throw DomainError("generalization bound: M must be at least 2");
  const double md = static_cast<double>(m);
  const double loglog = std::log(std::log2(2.0 / rho));
  return emp_err + margin_coefficient(classes, rho) * rademacher + std::sqrt(loglog / md) +
         std::sqrt(std::log(2.0 / delta) / (2.0 * md));
}

struct Theorem1Verdict {
  double lhs = 0.0;  // emp(f') - emp(f)
  double rhs = 0.0;  // (8M(2M-1)/rho) (Rbar_L - Rbar_erased)
  bool holds = false;
};

// Strict inequality lhs < rhs; when it holds the erased model's bound is the
// smaller one.
inline Theorem1Verdict theorem1_holds(double emp_full, double emp_erased, std::size_t classes, double rho,
                                      double rbar_full, double rbar_erased) {
  if (!(rho > 0.0)) throw DomainError("erasure condition: rho must be positive");
  Theorem1Verdict v;
  v.lhs = emp_erased - emp_full;
  v.rhs = margin_coefficient(classes, rho) * (rbar_full - rbar_erased);
  v.holds = v.lhs < v.rhs;
  return v;
}

// ---------------------------------------------------------------------------

struct BoundReport {
  ArchitectureSignature signature;
  BigInt paths;
  BigInt region_bound;
  std::optional<std::size_t> erased_index;  // l', 1-based
  std::optional<BigInt> region_bound_after_erasure;
  std::vector<double> factors;
  std::optional<double> rademacher_bound;
  std::optional<double> rademacher_bound_after_erasure;
  std::optional<bool> erasure_tightens;
  std::optional<double> empirical_margin_error;
  std::optional<double> empirical_margin_error_after_erasure;
  std::optional<double> generalization_bound;
  std::optional<double> generalization_bound_after_erasure;
  std::optional<Theorem1Verdict> theorem1;
};

struct BoundInputs {
  ArchitectureSignature signature;
  std::vector<double> factors;              // W_1..W_L, optional
  std::optional<std::size_t> erased_index;  // l'
  std::optional<double> emp_full;
  std::optional<double> emp_erased;
};

// Evaluates whatever the inputs allow: the region bounds always, the
// Rademacher terms when factors are present, the generalization bounds and
// the erasure condition when the empirical errors are present as well.
inline BoundReport evaluate_bounds(const BoundInputs& in) {
  const auto& sig = in.signature;
  sig.validate();
  BoundReport r;
  r.signature = sig;
  r.paths = count_paths(sig.depth());
  r.region_bound = region_bound(sig.n0, sig.widths);
  r.erased_index = in.erased_index;
  if (in.erased_index && *in.erased_index < sig.depth()) {
    r.region_bound_after_erasure = region_bound_after_erasure(sig.n0, sig.widths, *in.erased_index);
  }
  if (in.erased_index && (*in.erased_index < 1 || *in.erased_index > sig.depth())) {
    throw DomainError("erased index outside [1, L]");
  }
  if (in.factors.empty()) return r;
  if (in.factors.size() != sig.depth()) throw DomainError("factor count must equal the number of widths");
  r.factors = in.factors;
  r.rademacher_bound = rademacher_bound(sig.c, sig.input_bound, sig.n0, sig.m, in.factors);
  if (in.erased_index) {
    r.rademacher_bound_after_erasure =
        rademacher_bound_after_erasure(sig.c, sig.input_bound, sig.n0, sig.m, in.factors, *in.erased_index);
    r.erasure_tightens = erasure_tightens(in.factors, *in.erased_index);
  }
  if (in.emp_full) {
    r.empirical_margin_error = in.emp_full;
    r.generalization_bound =
        generalization_bound(*in.emp_full, *r.rademacher_bound, sig.classes, sig.rho, sig.m, sig.delta);
  }
  if (in.emp_erased && r.rademacher_bound_after_erasure) {
    r.empirical_margin_error_after_erasure = in.emp_erased;
    r.generalization_bound_after_erasure = generalization_bound(
        *in.emp_erased, *r.rademacher_bound_after_erasure, sig.classes, sig.rho, sig.m, sig.delta);
    if (in.emp_full) {
      r.theorem1 = theorem1_holds(*in.emp_full, *in.emp_erased, sig.classes, sig.rho, *r.rademacher_bound,
                                  *r.rademacher_bound_after_erasure);
    }
  }
  return r;
}

}  // namespace netimplode
