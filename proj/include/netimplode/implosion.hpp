#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "netimplode/dataset.hpp"
#include "netimplode/errors.hpp"
#include "netimplode/resnet.hpp"
#include "netimplode/training.hpp"

namespace netimplode {

struct ImplosionConfig {
  std::size_t k = 1;                 // units erased per round
  std::size_t target_remaining = 0;  // stop once eligible units <= this
  TrainingConfig retrain{.epochs = 60, .lr_milestones = {20, 40}};

  void validate(std::size_t initial_eligible) const {
    if (k == 0) throw ConfigError("implosion: k must be at least 1");
    if (target_remaining > initial_eligible) {
      throw ConfigError("implosion: target " + std::to_string(target_remaining) + " exceeds the " +
                        std::to_string(initial_eligible) + " eligible units");
    }
    retrain.validate();
  }
};

// Rounds the loop will run: ceil((initial - target) / k).
inline std::size_t implosion_rounds(std::size_t initial_eligible, std::size_t target, std::size_t k) {
  if (k == 0) throw ConfigError("implosion: k must be at least 1");
  if (initial_eligible <= target) return 0;
  return (initial_eligible - target + k - 1) / k;
}

// The k eligible ids with the smallest |w|, ties to the lower id, returned
// in selection order.
inline std::vector<UnitId> select_topk(const FCResNetModel& model, std::size_t k) {
  auto ranked = priorities(model);
  if (k == 0 || k > ranked.size()) {
    throw SelectionError("select_topk: k=" + std::to_string(k) + " with " + std::to_string(ranked.size()) +
                         " eligible units");
  }
  std::sort(ranked.begin(), ranked.end(), [](const UnitPriority& a, const UnitPriority& b) {
    return a.priority != b.priority ? a.priority < b.priority : a.id < b.id;
  });
  std::vector<UnitId> ids;
  for (std::size_t i = 0; i < k; ++i) ids.push_back(ranked[i].id);
  return ids;
}

struct RoundRecord {
  std::size_t round = 0;
  std::vector<UnitPriority> priorities_before;  // snapshot the selection used
  std::vector<UnitId> erased;                   // I_s, selection order
  std::vector<MetricsRow> metrics;              // retraining epochs
};

struct ImplosionState {
  std::size_t round = 0;
  std::vector<RoundRecord> rounds;
  std::vector<MetricsRow> metrics;  // every retraining epoch, all rounds

  std::vector<std::vector<UnitId>> erased_history() const {
    std::vector<std::vector<UnitId>> out;
    for (const auto& r : rounds) out.push_back(r.erased);
    return out;
  }
};

using RoundCallback = std::function<void(const FCResNetModel&, const RoundRecord&)>;

// Erase-and-retrain loop on an already trained model. Each round selects the
// k lowest-priority eligible units, erases them and retrains for
// icfg.retrain.epochs starting again from the initial learning rate. The
// final round erases fewer than k when fewer remain above the target.
inline ImplosionState run_implosion(FCResNetModel& model, const DatasetSplit& data,
                                    const DatasetSplit* val, const ImplosionConfig& icfg,
                                    const RoundCallback& on_round = {}) {
  icfg.validate(eligible_units(model).size());
  ImplosionState state;
  std::size_t remaining = eligible_units(model).size();
  while (remaining > icfg.target_remaining) {
    ++state.round;
    RoundRecord rec;
    rec.round = state.round;
    rec.priorities_before = priorities(model);
    rec.erased = select_topk(model, std::min(icfg.k, remaining));
    erase_units(model, rec.erased);
    rec.metrics = train(model, data, val, icfg.retrain, state.round);
    state.metrics.insert(state.metrics.end(), rec.metrics.begin(), rec.metrics.end());
    remaining = eligible_units(model).size();
    if (on_round) on_round(model, rec);
    state.rounds.push_back(std::move(rec));
  }
  return state;
}

// ---------------------------------------------------------------------------
// Scratch baseline

inline std::size_t baseline_epoch_budget(std::size_t initial_epochs, std::size_t rounds,
                                         std::size_t retrain_epochs) {
  return initial_epochs + rounds * retrain_epochs;
}

// The initial-training schedule stretched to `budget` epochs: each milestone
// scales by budget / epochs (floored); collisions are dropped.
inline TrainingConfig stretch_schedule(const TrainingConfig& cfg, std::size_t budget) {
  TrainingConfig out = cfg;
  out.epochs = budget;
  if (cfg.epochs == budget || cfg.epochs == 0) return out;
  out.lr_milestones.clear();
  for (std::size_t m : cfg.lr_milestones) {
    const std::size_t scaled = m * budget / cfg.epochs;
    if (scaled < budget && (out.lr_milestones.empty() || scaled > out.lr_milestones.back())) {
      out.lr_milestones.push_back(scaled);
    }
  }
  return out;
}

// Stage specs with `weighted[s]` weighted units left in stage s.
inline std::vector<StageSpec> reduced_stages(const std::vector<StageSpec>& stages,
                                             std::span<const std::size_t> weighted) {
  if (weighted.size() != stages.size()) throw ArchitectureError("reduced_stages: stage count mismatch");
  std::vector<StageSpec> out = stages;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (weighted[s] + 1 > stages[s].unit_count) {
      throw ArchitectureError("reduced_stages: stage " + std::to_string(s) + " cannot grow");
    }
    out[s].unit_count = weighted[s] + 1;
  }
  return out;
}

// Spreads `total` weighted units over the stages as evenly as possible,
// earlier stages taking the remainder, capped by each stage's original size.
inline std::vector<std::size_t> even_weighted_split(const std::vector<StageSpec>& stages, std::size_t total) {
  std::size_t capacity = 0;
  for (const auto& s : stages) capacity += s.unit_count - 1;
  if (total > capacity) {
    throw ArchitectureError("even_weighted_split: " + std::to_string(total) + " units exceed capacity " +
                            std::to_string(capacity));
  }
  std::vector<std::size_t> counts(stages.size(), 0);
  std::size_t placed = 0;
  while (placed < total) {
    for (std::size_t s = 0; s < stages.size() && placed < total; ++s) {
      if (counts[s] + 1 < stages[s].unit_count) {
        ++counts[s];
        ++placed;
      }
    }
  }
  return counts;
}

struct BaselineResult {
  FCResNetModel model;
  std::vector<MetricsRow> metrics;
};

// Fresh model at the reduced depth trained for `budget` epochs on the
// stretched initial schedule.
inline BaselineResult train_scratch_baseline(const std::vector<StageSpec>& stages, std::size_t classes,
                                             std::size_t input_width, double input_bound,
                                             std::uint64_t model_seed, const DatasetSplit& data,
                                             const DatasetSplit* val, const TrainingConfig& cfg,
                                             std::size_t budget) {
  BaselineResult result{build_model(stages, classes, input_width, input_bound, model_seed), {}};
  result.metrics = train(result.model, data, val, stretch_schedule(cfg, budget), 0);
  return result;
}

}  // namespace netimplode
