#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netimplode/errors.hpp"
#include "netimplode/matrix.hpp"
#include "netimplode/rng.hpp"

namespace netimplode {

// Labelled samples, one per feature row.
struct DatasetSplit {
  Matrix2D features;
  std::vector<int> labels;
  std::string tag = "train";

  std::size_t size() const { return labels.size(); }

  void validate(std::size_t classes) const {
    if (features.rows() != labels.size()) {
      throw DataError(tag + ": " + std::to_string(features.rows()) + " feature rows vs " +
                      std::to_string(labels.size()) + " labels");
    }
    for (int y : labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= classes) {
        throw DataError(tag + ": label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
      }
    }
  }
};

inline DatasetSplit subset(const DatasetSplit& data, const std::vector<std::size_t>& rows,
                           std::string tag) {
  DatasetSplit out{gather_rows(data.features, rows), {}, std::move(tag)};
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(data.labels.at(r));
  return out;
}

inline DatasetSplit head_rows(const DatasetSplit& data, std::size_t count) {
  if (count == 0 || count >= data.size()) return data;
  std::vector<std::size_t> rows(count);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return subset(data, rows, data.tag);
}

// Shuffles once with `seed`, then cuts the last `fraction` off as validation.
inline std::pair<DatasetSplit, DatasetSplit> split_train_val(const DatasetSplit& data, double fraction,
                                                             std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DataError("validation fraction must lie in (0, 1)");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto val_count = static_cast<std::size_t>(static_cast<double>(data.size()) * fraction);
  if (val_count == 0 || val_count == data.size()) throw DataError("dataset too small to split");
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(val_count));
  std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(val_count), order.end());
  return {subset(data, train, "train"), subset(data, val, "val")};
}

// Fixed-order mini-batch slices of a permutation.
class BatchPlan {
 public:
  BatchPlan(std::size_t samples, std::size_t batch_size, Rng* shuffler)
      : order_(samples), batch_size_(batch_size) {
    if (batch_size_ == 0) throw DataError("batch size must be positive");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (shuffler != nullptr) shuffler->shuffle(std::span<std::size_t>(order_));
  }

  std::size_t batches() const { return (order_.size() + batch_size_ - 1) / batch_size_; }

  std::span<const std::size_t> batch(std::size_t i) const {
    const std::size_t first = i * batch_size_;
    const std::size_t count = std::min(batch_size_, order_.size() - first);
    return std::span<const std::size_t>(order_).subspan(first, count);
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
};

}  // namespace netimplode
