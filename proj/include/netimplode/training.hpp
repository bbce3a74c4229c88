#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "netimplode/dataset.hpp"
#include "netimplode/errors.hpp"
#include "netimplode/optimizer.hpp"
#include "netimplode/resnet.hpp"

namespace netimplode {

struct TrainingConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t epochs = 200;
  std::vector<std::size_t> lr_milestones{81, 122};
  double lr_factor = 0.1;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  bool decay_priorities = true;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("weight decay must be nonnegative");
    if (!(lr_factor > 0.0) || !std::isfinite(lr_factor)) throw ConfigError("lr factor must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    for (std::size_t i = 0; i < lr_milestones.size(); ++i) {
      if (i > 0 && lr_milestones[i] <= lr_milestones[i - 1]) {
        throw ConfigError("lr milestones must be strictly increasing");
      }
      if (lr_milestones[i] >= epochs) throw ConfigError("lr milestones must be below the epoch count");
    }
  }
};

// lr at `epoch` (0-based): eta * factor^(number of milestones <= epoch).
inline double learning_rate_at(const TrainingConfig& cfg, std::size_t epoch) {
  double lr = cfg.learning_rate;
  for (std::size_t m : cfg.lr_milestones)
    if (epoch >= m) lr *= cfg.lr_factor;
  return lr;
}

struct MetricsRow {
  std::size_t round = 0;
  std::size_t epoch = 0;
  std::size_t remaining_units = 0;   // weighted units
  std::size_t remaining_layers = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = std::numeric_limits<double>::quiet_NaN();  // NaN without a val split
  double lr = 0.0;
  std::size_t macs = 0;
  std::size_t params = 0;
};

inline std::size_t argmax_row(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// Fraction of rows classified correctly; evaluated in chunks of `chunk` rows.
inline double evaluate_accuracy(const FCResNetModel& model, const DatasetSplit& data,
                                std::size_t chunk = 1000) {
  if (data.size() == 0) throw DataError("evaluate: empty dataset");
  std::size_t correct = 0;
  for (std::size_t first = 0; first < data.size(); first += chunk) {
    const std::size_t count = std::min(chunk, data.size() - first);
    const Matrix2D logits = forward(model, slice_rows(data.features, first, count));
    for (std::size_t r = 0; r < count; ++r) {
      if (argmax_row(logits.row(r)) == static_cast<std::size_t>(data.labels[first + r])) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// Logits for every row, in row order.
inline Matrix2D predict(const FCResNetModel& model, const Matrix2D& features, std::size_t chunk = 1000) {
  Matrix2D out(features.rows(), model.class_count());
  for (std::size_t first = 0; first < features.rows(); first += chunk) {
    const std::size_t count = std::min(chunk, features.rows() - first);
    const Matrix2D logits = forward(model, slice_rows(features, first, count));
    std::copy(logits.values().begin(), logits.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(first * out.cols()));
  }
  return out;
}

inline MetricsRow snapshot_row(const FCResNetModel& model, std::size_t round, std::size_t epoch) {
  MetricsRow row;
  row.round = round;
  row.epoch = epoch;
  row.remaining_units = eligible_units(model).size();
  row.remaining_layers = count_layers(model);
  row.macs = count_macs(model);
  row.params = count_params(model);
  return row;
}

// Mini-batch SGD with momentum and step decay. The optimizer state starts
// fresh on every call. Batches are reshuffled each epoch from a stream that
// depends only on (cfg.seed, round). One metrics row per epoch.
inline std::vector<MetricsRow> train(FCResNetModel& model, const DatasetSplit& data,
                                     const DatasetSplit* val, const TrainingConfig& cfg,
                                     std::size_t round = 0) {
  cfg.validate();
  if (data.size() == 0) throw DataError("train: empty dataset");
  if (data.features.cols() != model.input_width()) {
    throw ShapeError("train: data width " + std::to_string(data.features.cols()) +
                     " != model input width " + std::to_string(model.input_width()));
  }
  data.validate(model.class_count());
  if (val != nullptr) {
    if (val->size() == 0) throw DataError("train: empty validation split");
    if (val->features.cols() != model.input_width()) throw ShapeError("train: validation width mismatch");
    val->validate(model.class_count());
  }

  std::vector<MetricsRow> metrics;
  if (cfg.epochs == 0) return metrics;

  auto params = parameter_refs(model, cfg.decay_priorities);
  OptimizerState opt = make_optimizer(params, cfg.learning_rate, cfg.momentum, cfg.weight_decay);
  Rng shuffler = Rng(cfg.seed).derive(0x7261696e00000000ULL + round);
  ForwardCache cache;
  std::vector<int> labels;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.learning_rate = learning_rate_at(cfg, epoch);
    BatchPlan plan(data.size(), cfg.batch_size, &shuffler);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < plan.batches(); ++b) {
      const auto rows = plan.batch(b);
      const Matrix2D x = gather_rows(data.features, rows);
      labels.clear();
      for (std::size_t r : rows) labels.push_back(data.labels[r]);

      const Matrix2D logits = forward(model, x, &cache);
      const auto lg = softmax_cross_entropy(logits, labels);
      if (!std::isfinite(lg.loss)) {
        throw NumericalError("training diverged: non-finite loss at round " + std::to_string(round) +
                             ", epoch " + std::to_string(epoch));
      }
      loss_sum += lg.loss * static_cast<double>(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (argmax_row(logits.row(r)) == static_cast<std::size_t>(labels[r])) ++correct;
      }
      const Gradients grads = backward(model, cache, lg.grad);
      sgd_momentum_step(params, grads.tensors, opt);
    }
    MetricsRow row = snapshot_row(model, round, epoch);
    row.train_loss = loss_sum / static_cast<double>(data.size());
    row.train_acc = static_cast<double>(correct) / static_cast<double>(data.size());
    row.lr = opt.learning_rate;
    if (val != nullptr) row.val_acc = evaluate_accuracy(model, *val);
    metrics.push_back(row);
  }
  return metrics;
}

}  // namespace netimplode
