#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netimplode/errors.hpp"
#include "netimplode/matrix.hpp"
#include "netimplode/ops.hpp"
#include "netimplode/optimizer.hpp"
#include "netimplode/rng.hpp"

namespace netimplode {

using UnitId = std::uint32_t;

struct StageSpec {
  std::size_t stream_width = 0;  // width of x_l inside the stage
  std::size_t hidden_width = 0;  // interior width n_i of each unit
  std::size_t unit_count = 0;    // including the leading transition unit

  friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

enum class UnitKind { Transition, Weighted };

inline const char* to_string(UnitKind kind) {
  return kind == UnitKind::Transition ? "transition" : "weighted";
}

// Weighted:   y = x + w * B relu(A x + a)
// Transition: y = P x + B relu(A x + a), always first in its stage, no w.
// Matrices are stored out x in; a is 1 x hidden, w is 1 x 1.
struct ResidualUnit {
  UnitId id = 0;
  UnitKind kind = UnitKind::Weighted;
  std::size_t stage = 0;
  Matrix2D A;
  Matrix2D a;
  Matrix2D B;
  Matrix2D P;
  Matrix2D w;

  std::size_t in_width() const { return A.cols(); }
  std::size_t hidden_width() const { return A.rows(); }
  std::size_t out_width() const { return B.rows(); }
  bool eligible() const { return kind == UnitKind::Weighted; }
  double priority() const { return kind == UnitKind::Weighted ? w[0] : 1.0; }
};

struct DenseLayer {
  Matrix2D W;  // out x in
  Matrix2D b;  // 1 x out
};

// Layer-count convention for reports: a weighted unit is two affine layers,
// a transition unit three (projection plus two affines), the head one.
inline constexpr std::size_t kLayersPerWeightedUnit = 2;
inline constexpr std::size_t kLayersPerTransitionUnit = 3;
inline constexpr std::size_t kHeadLayers = 1;

class FCResNetModel {
 public:
  FCResNetModel() = default;

  // Checks every structural invariant; used by build_model and the
  // checkpoint loader.
  static FCResNetModel assemble(std::vector<StageSpec> stages, std::size_t classes,
                                std::size_t input_width, double input_bound,
                                std::vector<ResidualUnit> units, DenseLayer head,
                                UnitId next_id) {
    FCResNetModel m;
    m.stages_ = std::move(stages);
    m.classes_ = classes;
    m.input_width_ = input_width;
    m.input_bound_ = input_bound;
    m.units_ = std::move(units);
    m.head_ = std::move(head);
    m.next_id_ = next_id;
    m.validate();
    return m;
  }

  const std::vector<StageSpec>& stages() const { return stages_; }
  std::size_t class_count() const { return classes_; }
  std::size_t input_width() const { return input_width_; }
  double input_bound() const { return input_bound_; }
  UnitId next_id() const { return next_id_; }
  // Bumped by every structural change; forward caches record it.
  std::uint64_t generation() const { return generation_; }

  const std::vector<ResidualUnit>& units() const { return units_; }
  std::vector<ResidualUnit>& units() { return units_; }
  const DenseLayer& head() const { return head_; }
  DenseLayer& head() { return head_; }

  const ResidualUnit* find(UnitId id) const {
    auto it = std::find_if(units_.begin(), units_.end(), [&](const auto& u) { return u.id == id; });
    return it == units_.end() ? nullptr : &*it;
  }
  ResidualUnit* find(UnitId id) {
    return const_cast<ResidualUnit*>(std::as_const(*this).find(id));
  }

  // Removes the listed units. Callers validate eligibility first.
  void remove_units(const std::set<UnitId>& ids) {
    std::erase_if(units_, [&](const ResidualUnit& u) { return ids.contains(u.id); });
    ++generation_;
  }

  void validate() const {
    if (stages_.empty()) throw ArchitectureError("model needs at least one stage");
    if (classes_ < 2) throw ArchitectureError("class count must be at least 2");
    if (input_width_ == 0) throw ArchitectureError("input width must be positive");
    if (!(input_bound_ > 0.0) || !std::isfinite(input_bound_)) {
      throw ArchitectureError("input bound must be a positive finite number");
    }
    for (std::size_t s = 0; s < stages_.size(); ++s) {
      const auto& st = stages_[s];
      if (st.stream_width == 0 || st.hidden_width == 0 || st.unit_count == 0) {
        throw ArchitectureError("stage " + std::to_string(s) + ": widths and unit count must be positive");
      }
      if (st.hidden_width < st.stream_width) {
        throw ArchitectureError("stage " + std::to_string(s) + ": hidden width " +
                                std::to_string(st.hidden_width) + " < stream width " +
                                std::to_string(st.stream_width));
      }
    }
    std::set<UnitId> seen;
    std::size_t width = input_width_;
    std::size_t stage = 0;
    bool first = true;
    for (const auto& u : units_) {
      if (u.id >= next_id_ || !seen.insert(u.id).second) {
        throw ArchitectureError("unit id " + std::to_string(u.id) + " duplicated or beyond next id");
      }
      if (u.kind == UnitKind::Transition) {
        const std::size_t expected = first ? 0 : stage + 1;
        if (u.stage != expected) throw ArchitectureError("transition units out of stage order");
        stage = expected;
        first = false;
      } else if (first || u.stage != stage) {
        throw ArchitectureError("weighted unit " + std::to_string(u.id) + " not preceded by its stage's transition");
      }
      const auto& st = stages_.at(u.stage);
      const std::size_t in = u.kind == UnitKind::Transition ? width : st.stream_width;
      auto shape_ok = [](const Matrix2D& m, std::size_t r, std::size_t c) {
        return m.rows() == r && m.cols() == c;
      };
      bool ok = shape_ok(u.A, st.hidden_width, in) && shape_ok(u.a, 1, st.hidden_width) &&
                shape_ok(u.B, st.stream_width, st.hidden_width);
      if (u.kind == UnitKind::Transition) {
        ok = ok && shape_ok(u.P, st.stream_width, in) && u.w.empty();
      } else {
        ok = ok && shape_ok(u.w, 1, 1) && u.P.empty();
      }
      if (!ok) throw ArchitectureError("unit " + std::to_string(u.id) + " has inconsistent tensor shapes");
      width = st.stream_width;
    }
    if (stage + 1 != stages_.size() || first) {
      throw ArchitectureError("every stage needs exactly one transition unit");
    }
    if (head_.W.rows() != classes_ || head_.W.cols() != width || head_.b.rows() != 1 ||
        head_.b.cols() != classes_) {
      throw ArchitectureError("head shape does not match last stage width and class count");
    }
  }

 private:
  std::vector<StageSpec> stages_;
  std::size_t classes_ = 0;
  std::size_t input_width_ = 0;
  double input_bound_ = 1.0;
  std::vector<ResidualUnit> units_;
  DenseLayer head_;
  UnitId next_id_ = 1;
  std::uint64_t generation_ = 0;
};

// He-initialized weights, zero biases, every priority w = 1. The output
// matrix B of each weighted unit starts at zero, so a fresh weighted unit is
// the identity map. Unit ids start at 1 in forward order.
inline FCResNetModel build_model(const std::vector<StageSpec>& stages, std::size_t classes,
                                 std::size_t input_width, double input_bound, std::uint64_t seed) {
  if (stages.empty()) throw ArchitectureError("model needs at least one stage");
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (stages[s].hidden_width < stages[s].stream_width) {
      throw ArchitectureError("stage " + std::to_string(s) + ": hidden width < stream width");
    }
    if (stages[s].unit_count == 0 || stages[s].stream_width == 0) {
      throw ArchitectureError("stage " + std::to_string(s) + ": widths and unit count must be positive");
    }
  }
  if (input_width == 0) throw ArchitectureError("input width must be positive");

  Rng rng(seed);
  std::vector<ResidualUnit> units;
  UnitId next = 1;
  std::size_t width = input_width;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const auto& st = stages[s];
    for (std::size_t j = 0; j < st.unit_count; ++j) {
      ResidualUnit u;
      u.id = next++;
      u.stage = s;
      u.kind = j == 0 ? UnitKind::Transition : UnitKind::Weighted;
      const std::size_t in = j == 0 ? width : st.stream_width;
      if (u.kind == UnitKind::Transition) u.P = he_init(st.stream_width, in, rng);
      u.A = he_init(st.hidden_width, in, rng);
      u.a = Matrix2D(1, st.hidden_width);
      if (u.kind == UnitKind::Weighted) {
        u.B = Matrix2D(st.stream_width, st.hidden_width);
        u.w = Matrix2D(1, 1, 1.0);
      } else {
        u.B = he_init(st.stream_width, st.hidden_width, rng);
      }
      units.push_back(std::move(u));
    }
    width = st.stream_width;
  }
  DenseLayer head{he_init(classes, width, rng), Matrix2D(1, classes)};
  return FCResNetModel::assemble(stages, classes, input_width, input_bound, std::move(units),
                                 std::move(head), next);
}

// ---------------------------------------------------------------------------
// Forward / backward

struct UnitActivations {
  Matrix2D input;   // x_l
  Matrix2D pre;     // A x + a
  Matrix2D hidden;  // relu(pre)
  Matrix2D mapped;  // F(x_l) = B relu(A x + a)
};

struct ForwardCache {
  std::uint64_t generation = 0;
  std::vector<UnitId> unit_ids;
  std::vector<UnitActivations> units;
  Matrix2D head_input;
  Matrix2D logits;
};

namespace detail {

inline Matrix2D unit_forward(const ResidualUnit& u, const Matrix2D& x, UnitActivations* keep) {
  Matrix2D pre = matmul_nt(x, u.A);
  add_row_broadcast(pre, u.a);
  Matrix2D hidden = relu(pre);
  Matrix2D mapped = matmul_nt(hidden, u.B);
  Matrix2D y;
  if (u.kind == UnitKind::Weighted) {
    y = x;
    axpy_inplace(y, u.w[0], mapped);
  } else {
    y = matmul_nt(x, u.P);
    add_inplace(y, mapped);
  }
  if (keep != nullptr) {
    keep->input = x;
    keep->pre = std::move(pre);
    keep->hidden = std::move(hidden);
    keep->mapped = std::move(mapped);
  }
  return y;
}

inline Matrix2D head_forward(const DenseLayer& head, const Matrix2D& x) {
  Matrix2D logits = matmul_nt(x, head.W);
  add_row_broadcast(logits, head.b);
  return logits;
}

}  // namespace detail

inline Matrix2D forward(const FCResNetModel& model, const Matrix2D& batch, ForwardCache* cache) {
  if (batch.cols() != model.input_width()) {
    throw ShapeError("forward: batch width " + std::to_string(batch.cols()) + " != input width " +
                     std::to_string(model.input_width()));
  }
  if (cache != nullptr) {
    cache->generation = model.generation();
    cache->unit_ids.clear();
    cache->units.assign(model.units().size(), {});
  }
  Matrix2D x = batch;
  for (std::size_t i = 0; i < model.units().size(); ++i) {
    const auto& u = model.units()[i];
    x = detail::unit_forward(u, x, cache != nullptr ? &cache->units[i] : nullptr);
    if (cache != nullptr) cache->unit_ids.push_back(u.id);
  }
  Matrix2D logits = detail::head_forward(model.head(), x);
  if (cache != nullptr) {
    cache->head_input = std::move(x);
    cache->logits = logits;
  }
  return logits;
}

inline Matrix2D forward(const FCResNetModel& model, const Matrix2D& batch) {
  return forward(model, batch, nullptr);
}

inline ForwardCache make_cache() { return {}; }

// One tensor per parameter, ordered exactly as parameter_refs() lists them:
// for each unit in forward order P (transitions only), A, a, B, w (weighted
// only); then head W, b.
struct Gradients {
  std::vector<Matrix2D> tensors;
};

inline Gradients backward(const FCResNetModel& model, const ForwardCache& cache,
                          const Matrix2D& logits_grad) {
  if (cache.generation != model.generation() || cache.units.size() != model.units().size()) {
    throw UsageError("backward: cache does not belong to this model state");
  }
  for (std::size_t i = 0; i < model.units().size(); ++i) {
    if (cache.unit_ids[i] != model.units()[i].id) throw UsageError("backward: cache unit ids differ");
  }
  if (!logits_grad.same_shape(cache.logits)) {
    throw ShapeError("backward: gradient " + shape_string(logits_grad) + " vs logits " +
                     shape_string(cache.logits));
  }

  const auto& units = model.units();
  std::vector<std::vector<Matrix2D>> per_unit(units.size());

  const auto& head = model.head();
  Matrix2D head_dW = matmul_tn(logits_grad, cache.head_input);
  Matrix2D head_db = column_sums(logits_grad);
  Matrix2D upstream = matmul(logits_grad, head.W);

  for (std::size_t idx = units.size(); idx-- > 0;) {
    const auto& u = units[idx];
    const auto& act = cache.units[idx];
    const bool need_input_grad = idx > 0;
    auto& out = per_unit[idx];

    Matrix2D d_mapped;
    Matrix2D d_P;
    Matrix2D d_w;
    if (u.kind == UnitKind::Weighted) {
      d_w = Matrix2D(1, 1, dot(upstream, act.mapped));
      d_mapped = scaled(upstream, u.w[0]);
    } else {
      d_P = matmul_tn(upstream, act.input);
      d_mapped = upstream;
    }
    Matrix2D d_B = matmul_tn(d_mapped, act.hidden);
    Matrix2D d_pre = relu_backward(act.pre, matmul(d_mapped, u.B));
    Matrix2D d_A = matmul_tn(d_pre, act.input);
    Matrix2D d_a = column_sums(d_pre);

    if (need_input_grad) {
      Matrix2D d_x = matmul(d_pre, u.A);
      if (u.kind == UnitKind::Weighted) {
        add_inplace(d_x, upstream);
      } else {
        add_inplace(d_x, matmul(upstream, u.P));
      }
      upstream = std::move(d_x);
    }

    if (u.kind == UnitKind::Transition) out.push_back(std::move(d_P));
    out.push_back(std::move(d_A));
    out.push_back(std::move(d_a));
    out.push_back(std::move(d_B));
    if (u.kind == UnitKind::Weighted) out.push_back(std::move(d_w));
  }

  Gradients g;
  for (auto& list : per_unit)
    for (auto& t : list) g.tensors.push_back(std::move(t));
  g.tensors.push_back(std::move(head_dW));
  g.tensors.push_back(std::move(head_db));
  return g;
}

// Mutable views of every parameter, in Gradients order. `decay_priorities`
// sets whether the w scalars receive weight decay.
inline std::vector<ParamRef> parameter_refs(FCResNetModel& model, bool decay_priorities = true) {
  std::vector<ParamRef> refs;
  for (auto& u : model.units()) {
    const std::string prefix = "u" + std::to_string(u.id) + ".";
    if (u.kind == UnitKind::Transition) refs.push_back({prefix + "P", &u.P, true});
    refs.push_back({prefix + "A", &u.A, true});
    refs.push_back({prefix + "a", &u.a, true});
    refs.push_back({prefix + "B", &u.B, true});
    if (u.kind == UnitKind::Weighted) refs.push_back({prefix + "w", &u.w, decay_priorities});
  }
  refs.push_back({"head.W", &model.head().W, true});
  refs.push_back({"head.b", &model.head().b, true});
  return refs;
}

// Read-only counterpart of parameter_refs.
inline std::vector<std::pair<std::string, const Matrix2D*>> named_tensors(const FCResNetModel& model) {
  std::vector<std::pair<std::string, const Matrix2D*>> out;
  for (auto& ref : parameter_refs(const_cast<FCResNetModel&>(model))) out.emplace_back(ref.name, ref.value);
  return out;
}

// ---------------------------------------------------------------------------
// Erasure and priorities

inline std::vector<UnitId> eligible_units(const FCResNetModel& model) {
  std::vector<UnitId> ids;
  for (const auto& u : model.units())
    if (u.eligible()) ids.push_back(u.id);
  return ids;
}

// Removes the listed weighted units; every other tensor stays untouched.
// Nothing is removed if any id is unknown, a transition unit, or repeated.
inline void erase_units(FCResNetModel& model, std::span<const UnitId> ids) {
  std::set<UnitId> chosen;
  for (UnitId id : ids) {
    const ResidualUnit* u = model.find(id);
    if (u == nullptr) throw EligibilityError("erase: unknown unit id " + std::to_string(id));
    if (!u->eligible()) {
      throw EligibilityError("erase: unit " + std::to_string(id) + " opens its stage and cannot be erased");
    }
    if (!chosen.insert(id).second) throw EligibilityError("erase: unit " + std::to_string(id) + " listed twice");
  }
  model.remove_units(chosen);
}

struct UnitPriority {
  UnitId id = 0;
  double priority = 0.0;  // |w_l|

  friend bool operator==(const UnitPriority&, const UnitPriority&) = default;
};

inline std::vector<UnitPriority> priorities(const FCResNetModel& model) {
  std::vector<UnitPriority> out;
  for (const auto& u : model.units())
    if (u.eligible()) out.push_back({u.id, std::abs(u.w[0])});
  return out;
}

// ---------------------------------------------------------------------------
// Accounting. One MAC per weight multiply; bias adds, ReLU, the skip add and
// the scalar w multiply are not counted. Parameters count every matrix entry,
// every bias and one per priority w.

inline std::size_t unit_macs(const ResidualUnit& u) {
  std::size_t macs = u.A.size() + u.B.size();
  if (u.kind == UnitKind::Transition) macs += u.P.size();
  return macs;
}

inline std::size_t unit_params(const ResidualUnit& u) {
  return u.A.size() + u.a.size() + u.B.size() + u.P.size() + u.w.size();
}

inline std::size_t unit_layers(const ResidualUnit& u) {
  return u.kind == UnitKind::Transition ? kLayersPerTransitionUnit : kLayersPerWeightedUnit;
}

inline std::size_t count_macs(const FCResNetModel& model) {
  std::size_t total = model.head().W.size();
  for (const auto& u : model.units()) total += unit_macs(u);
  return total;
}

inline std::size_t count_params(const FCResNetModel& model) {
  std::size_t total = model.head().W.size() + model.head().b.size();
  for (const auto& u : model.units()) total += unit_params(u);
  return total;
}

inline std::size_t count_layers(const FCResNetModel& model) {
  std::size_t total = kHeadLayers;
  for (const auto& u : model.units()) total += unit_layers(u);
  return total;
}

// Closed forms from the architecture alone; `weighted_per_stage[s]` is the
// number of weighted units left in stage s.
struct Accounting {
  std::size_t macs = 0;
  std::size_t params = 0;
  std::size_t layers = 0;
};

inline Accounting closed_form_accounting(const std::vector<StageSpec>& stages,
                                         std::span<const std::size_t> weighted_per_stage,
                                         std::size_t classes, std::size_t input_width) {
  if (weighted_per_stage.size() != stages.size()) throw ShapeError("closed_form_accounting: stage count");
  Accounting acc;
  std::size_t in = input_width;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::size_t sw = stages[s].stream_width;
    const std::size_t hw = stages[s].hidden_width;
    const std::size_t n = weighted_per_stage[s];
    acc.macs += in * sw + in * hw + hw * sw;
    acc.params += in * sw + in * hw + hw + hw * sw;
    acc.macs += n * (2 * sw * hw);
    acc.params += n * (2 * sw * hw + hw + 1);
    acc.layers += kLayersPerTransitionUnit + n * kLayersPerWeightedUnit;
    in = sw;
  }
  acc.macs += in * classes;
  acc.params += in * classes + classes;
  acc.layers += kHeadLayers;
  return acc;
}

inline std::vector<std::size_t> weighted_per_stage(const FCResNetModel& model) {
  std::vector<std::size_t> counts(model.stages().size(), 0);
  for (const auto& u : model.units())
    if (u.eligible()) ++counts[u.stage];
  return counts;
}

// ---------------------------------------------------------------------------
// L1 summaries

struct LayerL1 {
  std::string name;  // e.g. "u3.A", "head.W"
  UnitId unit = 0;   // 0 for the head
  double abs_sum = 0.0;
};

struct UnitFactor {
  UnitId id = 0;
  UnitKind kind = UnitKind::Weighted;
  std::size_t hidden_width = 0;
  double factor = 0.0;  // (sum|A|) * (sum|B|) * |w|, with |w| = 1 for transitions
};

struct LayerNormSummary {
  std::vector<LayerL1> layers;
  std::vector<UnitFactor> units;
};

inline LayerNormSummary layer_l1_bounds(const FCResNetModel& model) {
  LayerNormSummary s;
  for (const auto& u : model.units()) {
    const std::string prefix = "u" + std::to_string(u.id) + ".";
    if (u.kind == UnitKind::Transition) s.layers.push_back({prefix + "P", u.id, abs_sum(u.P)});
    const double sa = abs_sum(u.A);
    const double sb = abs_sum(u.B);
    s.layers.push_back({prefix + "A", u.id, sa});
    s.layers.push_back({prefix + "B", u.id, sb});
    const double scale = u.kind == UnitKind::Weighted ? std::abs(u.w[0]) : 1.0;
    s.units.push_back({u.id, u.kind, u.hidden_width(), sa * sb * scale});
  }
  s.layers.push_back({"head.W", 0, abs_sum(model.head().W)});
  return s;
}

}  // namespace netimplode
