#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "netimplode/app/checkpoint.hpp"
#include "netimplode/app/synthetic.hpp"
#include "netimplode/errors.hpp"
#include "netimplode/implosion.hpp"
#include "netimplode/resnet.hpp"
#include "netimplode/training.hpp"

namespace netimplode::app {

using nlohmann::json;

struct MnistSource {
  std::string dir = "data/mnist";  // holds the four standard IDX files
  std::size_t train_limit = 10000;   // 0 = all rows in the file
  std::size_t val_limit = 0;
};

struct SyntheticSource {
  SyntheticKind kind = SyntheticKind::Spirals;
  std::size_t per_class = 200;
  double noise = 0.05;
  std::uint64_t seed = 7;
  double val_fraction = 0.25;
};

struct DatasetSpec {
  std::string kind = "mnist";  // "mnist" | "synthetic"
  MnistSource mnist;
  SyntheticSource synthetic;
};

struct ArchitectureSpec {
  std::vector<StageSpec> stages;
  std::size_t classes = 10;
  std::size_t input_width = 784;
  double input_bound = 1.0;
};

struct RunConfig {
  DatasetSpec dataset;
  ArchitectureSpec architecture;
  TrainingConfig training;
  ImplosionConfig implosion;
  std::vector<std::size_t> baseline_depths;  // weighted-unit totals; empty = imploded depth only
  std::string output_dir = "runs/default";
  std::uint64_t seed = 0;

  // Checks everything that can be checked without touching the filesystem.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Presets

inline RunConfig desk_preset() {
  RunConfig c;
  c.architecture.stages = {{64, 128, 6}, {64, 128, 6}};
  c.training.learning_rate = 0.01;
  c.training.epochs = 40;
  c.training.lr_milestones = {16, 24};
  c.implosion.k = 1;
  c.implosion.target_remaining = 6;
  c.implosion.retrain = c.training;
  c.implosion.retrain.epochs = 12;
  c.implosion.retrain.lr_milestones = {4, 8};
  c.output_dir = "runs/desk";
  c.seed = 1;
  return c;
}

inline RunConfig paper_preset() {
  RunConfig c;
  c.architecture.stages = {{64, 128, 10}, {64, 128, 10}, {64, 128, 10}};
  c.dataset.mnist.train_limit = 0;
  c.training = TrainingConfig{};
  c.implosion.k = 1;
  c.implosion.target_remaining = 0;
  c.implosion.retrain = c.training;
  c.implosion.retrain.epochs = 60;
  c.implosion.retrain.lr_milestones = {20, 40};
  c.output_dir = "runs/paper";
  c.seed = 1;
  return c;
}

inline RunConfig preset(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

// Unsigned integers reject negatives and fractions instead of wrapping.
inline void read_count(const json& j, const char* key, std::size_t& out, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) throw ConfigError(where + "." + key + ": expected a nonnegative integer");
  out = v.get<std::size_t>();
}

inline void read_counts(const json& j, const char* key, std::vector<std::size_t>& out, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
  out.clear();
  for (const auto& e : v) {
    if (!e.is_number_unsigned()) throw ConfigError(where + "." + key + ": expected nonnegative integers");
    out.push_back(e.get<std::size_t>());
  }
}

inline void read_u64(const json& j, const char* key, std::uint64_t& out, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) throw ConfigError(where + "." + key + ": expected a nonnegative integer");
  out = v.get<std::uint64_t>();
}

inline void read_training(const json& j, TrainingConfig& t, const std::string& where) {
  reject_unknown(j, where,
                 {"learning_rate", "momentum", "weight_decay", "epochs", "lr_milestones", "lr_factor", "batch_size",
                  "decay_priorities"});
  read(j, "learning_rate", t.learning_rate, where);
  read(j, "momentum", t.momentum, where);
  read(j, "weight_decay", t.weight_decay, where);
  read_count(j, "epochs", t.epochs, where);
  read_counts(j, "lr_milestones", t.lr_milestones, where);
  read(j, "lr_factor", t.lr_factor, where);
  read_count(j, "batch_size", t.batch_size, where);
  read(j, "decay_priorities", t.decay_priorities, where);
}

inline json write_training(const TrainingConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"momentum", t.momentum},
          {"weight_decay", t.weight_decay},   {"epochs", t.epochs},
          {"lr_milestones", t.lr_milestones}, {"lr_factor", t.lr_factor},
          {"batch_size", t.batch_size},       {"decay_priorities", t.decay_priorities}};
}

}  // namespace detail

// Starts from the desk preset, or the one a "preset" key names, and overlays
// every key present. Unknown keys anywhere are an error.
inline RunConfig config_from_json(const json& j) {
  using namespace detail;
  reject_unknown(j, "config",
                 {"preset", "dataset", "architecture", "training", "implosion", "baseline", "output_dir", "seed"});
  RunConfig c = desk_preset();
  if (j.contains("preset")) {
    if (!j.at("preset").is_string()) throw ConfigError("config.preset: expected a string");
    c = preset(j.at("preset").get<std::string>());
  }
  read(j, "output_dir", c.output_dir, "config");
  read_u64(j, "seed", c.seed, "config");

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    reject_unknown(d, "dataset",
                   {"kind", "dir", "train_limit", "val_limit", "generator", "per_class", "noise", "seed",
                    "val_fraction"});
    read(d, "kind", c.dataset.kind, "dataset");
    if (c.dataset.kind == "mnist") {
      for (const char* k : {"generator", "per_class", "noise", "seed", "val_fraction"}) {
        if (d.contains(k)) throw ConfigError(std::string("dataset: key '") + k + "' does not apply to mnist");
      }
      read(d, "dir", c.dataset.mnist.dir, "dataset");
      read_count(d, "train_limit", c.dataset.mnist.train_limit, "dataset");
      read_count(d, "val_limit", c.dataset.mnist.val_limit, "dataset");
    } else if (c.dataset.kind == "synthetic") {
      for (const char* k : {"dir", "train_limit", "val_limit"}) {
        if (d.contains(k)) throw ConfigError(std::string("dataset: key '") + k + "' does not apply to synthetic");
      }
      auto& s = c.dataset.synthetic;
      if (d.contains("generator")) {
        std::string g;
        read(d, "generator", g, "dataset");
        try {
          s.kind = parse_synthetic_kind(g);
        } catch (const std::exception& e) {
          throw ConfigError(std::string("dataset.generator: ") + e.what());
        }
      }
      read_count(d, "per_class", s.per_class, "dataset");
      read(d, "noise", s.noise, "dataset");
      read_u64(d, "seed", s.seed, "dataset");
      read(d, "val_fraction", s.val_fraction, "dataset");
    } else {
      throw ConfigError("dataset.kind: expected mnist or synthetic, got '" + c.dataset.kind + "'");
    }
  }

  if (j.contains("architecture")) {
    const auto& a = j.at("architecture");
    reject_unknown(a, "architecture", {"stages", "classes", "input_width", "input_bound"});
    read_count(a, "classes", c.architecture.classes, "architecture");
    read_count(a, "input_width", c.architecture.input_width, "architecture");
    read(a, "input_bound", c.architecture.input_bound, "architecture");
    if (a.contains("stages")) {
      if (!a.at("stages").is_array()) throw ConfigError("architecture.stages: expected an array");
      c.architecture.stages.clear();
      for (const auto& s : a.at("stages")) {
        reject_unknown(s, "architecture.stages[]", {"stream_width", "hidden_width", "unit_count"});
        StageSpec spec{0, 0, 0};
        for (const char* k : {"stream_width", "hidden_width", "unit_count"}) {
          if (!s.contains(k)) throw ConfigError(std::string("architecture.stages[]: missing '") + k + "'");
        }
        read_count(s, "stream_width", spec.stream_width, "architecture.stages[]");
        read_count(s, "hidden_width", spec.hidden_width, "architecture.stages[]");
        read_count(s, "unit_count", spec.unit_count, "architecture.stages[]");
        c.architecture.stages.push_back(spec);
      }
    }
  }

  if (j.contains("training")) read_training(j.at("training"), c.training, "training");

  if (j.contains("implosion")) {
    const auto& im = j.at("implosion");
    reject_unknown(im, "implosion", {"k", "target_remaining", "retrain"});
    read_count(im, "k", c.implosion.k, "implosion");
    read_count(im, "target_remaining", c.implosion.target_remaining, "implosion");
    if (im.contains("retrain")) read_training(im.at("retrain"), c.implosion.retrain, "implosion.retrain");
  }

  if (j.contains("baseline")) {
    const auto& b = j.at("baseline");
    reject_unknown(b, "baseline", {"depths"});
    read_counts(b, "depths", c.baseline_depths, "baseline");
  }
  return c;
}

inline json config_to_json(const RunConfig& c) {
  json dataset{{"kind", c.dataset.kind}};
  if (c.dataset.kind == "mnist") {
    dataset["dir"] = c.dataset.mnist.dir;
    dataset["train_limit"] = c.dataset.mnist.train_limit;
    dataset["val_limit"] = c.dataset.mnist.val_limit;
  } else {
    const auto& s = c.dataset.synthetic;
    dataset["generator"] = to_string(s.kind);
    dataset["per_class"] = s.per_class;
    dataset["noise"] = s.noise;
    dataset["seed"] = s.seed;
    dataset["val_fraction"] = s.val_fraction;
  }
  json stages = json::array();
  for (const auto& s : c.architecture.stages) {
    stages.push_back({{"stream_width", s.stream_width}, {"hidden_width", s.hidden_width}, {"unit_count", s.unit_count}});
  }
  return {{"dataset", dataset},
          {"architecture",
           {{"stages", stages},
            {"classes", c.architecture.classes},
            {"input_width", c.architecture.input_width},
            {"input_bound", c.architecture.input_bound}}},
          {"training", detail::write_training(c.training)},
          {"implosion",
           {{"k", c.implosion.k},
            {"target_remaining", c.implosion.target_remaining},
            {"retrain", detail::write_training(c.implosion.retrain)}}},
          {"baseline", {{"depths", c.baseline_depths}}},
          {"output_dir", c.output_dir},
          {"seed", c.seed}};
}

inline RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::size_t initial_weighted_units(const std::vector<StageSpec>& stages) {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.unit_count - 1;
  return n;
}

inline void RunConfig::validate() const {
  const auto& a = architecture;
  if (a.stages.empty()) throw ConfigError("architecture: at least one stage required");
  for (std::size_t s = 0; s < a.stages.size(); ++s) {
    const auto& st = a.stages[s];
    if (st.stream_width == 0 || st.hidden_width == 0) {
      throw ConfigError("architecture.stages[" + std::to_string(s) + "]: widths must be positive");
    }
    if (st.unit_count == 0) {
      throw ConfigError("architecture.stages[" + std::to_string(s) + "]: unit_count counts the transition, so >= 1");
    }
  }
  if (a.classes < 2) throw ConfigError("architecture.classes must be at least 2");
  if (a.input_width == 0) throw ConfigError("architecture.input_width must be positive");
  if (!(a.input_bound > 0.0)) throw ConfigError("architecture.input_bound must be positive");
  if (dataset.kind == "mnist") {
    if (a.input_width != 784) throw ConfigError("architecture.input_width must be 784 for mnist");
    if (a.classes != 10) throw ConfigError("architecture.classes must be 10 for mnist");
  } else {
    const auto& s = dataset.synthetic;
    if (a.input_width != 2) throw ConfigError("architecture.input_width must be 2 for synthetic data");
    if (s.per_class == 0) throw ConfigError("dataset.per_class must be at least 1");
    if (!(s.noise >= 0.0)) throw ConfigError("dataset.noise must be nonnegative");
    if (!(s.val_fraction > 0.0 && s.val_fraction < 1.0)) throw ConfigError("dataset.val_fraction must lie in (0, 1)");
  }
  training.validate();
  const std::size_t eligible = initial_weighted_units(a.stages);
  implosion.validate(eligible);
  for (std::size_t d : baseline_depths) {
    if (d > eligible) {
      throw ConfigError("baseline.depths: " + std::to_string(d) + " exceeds the " + std::to_string(eligible) +
                        " weighted units of the architecture");
    }
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

// Fingerprint of the effective config, stored in checkpoints.
inline std::string config_fingerprint(const RunConfig& c) { return config_digest(config_to_json(c).dump()); }

}  // namespace netimplode::app
