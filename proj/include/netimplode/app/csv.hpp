#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "netimplode/implosion.hpp"
#include "netimplode/training.hpp"

namespace netimplode::app {

// Shortest round-trip decimal; NaN prints as an empty field.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline constexpr const char* kLayerConvention =
    "# layers: weighted unit = 2, transition unit = 3, head = 1";

inline constexpr const char* kMetricsHeader =
    "method,round,epoch,remaining_units,remaining_layers,train_loss,train_acc,val_acc,lr,macs,params";

inline constexpr const char* kCurveHeader = "method,remaining_layers,remaining_units,val_accuracy,macs,params";

inline void write_metrics_header(std::ostream& out) {
  out << kLayerConvention << '\n' << kMetricsHeader << '\n';
}

inline void write_metrics_rows(std::ostream& out, const std::string& method, const std::vector<MetricsRow>& rows) {
  for (const auto& r : rows) {
    out << method << ',' << r.round << ',' << r.epoch << ',' << r.remaining_units << ',' << r.remaining_layers
        << ',' << format_double(r.train_loss) << ',' << format_double(r.train_acc) << ','
        << format_double(r.val_acc) << ',' << format_double(r.lr) << ',' << r.macs << ',' << r.params << '\n';
  }
}

struct CurvePoint {
  std::string method;
  std::size_t remaining_layers = 0;
  std::size_t remaining_units = 0;
  double val_accuracy = 0.0;
  std::size_t macs = 0;
  std::size_t params = 0;
};

inline CurvePoint curve_point(const std::string& method, const FCResNetModel& model, double val_accuracy) {
  return {method, count_layers(model), eligible_units(model).size(), val_accuracy, count_macs(model),
          count_params(model)};
}

inline void write_curve(std::ostream& out, const std::vector<CurvePoint>& points) {
  out << kLayerConvention << '\n' << kCurveHeader << '\n';
  for (const auto& p : points) {
    out << p.method << ',' << p.remaining_layers << ',' << p.remaining_units << ','
        << format_double(p.val_accuracy) << ',' << p.macs << ',' << p.params << '\n';
  }
}

}  // namespace netimplode::app
