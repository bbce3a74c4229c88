#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>

#include "netimplode/dataset.hpp"
#include "netimplode/errors.hpp"
#include "netimplode/rng.hpp"

namespace netimplode::app {

enum class SyntheticKind { Blobs, Spirals };

inline SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "blobs") return SyntheticKind::Blobs;
  if (name == "spirals") return SyntheticKind::Spirals;
  throw ConfigError("unknown synthetic generator '" + name + "' (expected blobs or spirals)");
}

inline const char* to_string(SyntheticKind kind) {
  return kind == SyntheticKind::Blobs ? "blobs" : "spirals";
}

// Two-dimensional labelled point clouds, class-major row order.
//   blobs:   class c centred at (cos t_c, sin t_c), t_c = 2 pi c / classes,
//            plus N(0, noise^2) per coordinate.
//   spirals: point i of class c at radius r = (i + 1) / n and angle
//            t_c + 3 pi r, plus N(0, noise^2) per coordinate.
inline DatasetSplit generate_synthetic(SyntheticKind kind, std::size_t per_class, std::size_t classes,
                                       double noise, std::uint64_t seed) {
  if (per_class == 0) throw DataError("synthetic: need at least one point per class");
  if (classes < 2) throw DataError("synthetic: need at least two classes");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw DataError("synthetic: noise must be >= 0");
  Rng rng(seed);
  DatasetSplit out{Matrix2D(per_class * classes, 2), {}, "train"};
  out.labels.reserve(per_class * classes);
  std::size_t row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double base = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      double x = 0.0;
      double y = 0.0;
      if (kind == SyntheticKind::Blobs) {
        x = std::cos(base);
        y = std::sin(base);
      } else {
        const double r = static_cast<double>(i + 1) / static_cast<double>(per_class);
        const double angle = base + 3.0 * std::numbers::pi * r;
        x = r * std::cos(angle);
        y = r * std::sin(angle);
      }
      if (noise > 0.0) {
        x += noise * rng.normal();
        y += noise * rng.normal();
      }
      out.features(row, 0) = x;
      out.features(row, 1) = y;
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

}  // namespace netimplode::app
