// netimplode: train, implode, baseline, bounds, eval and inspect FC-ResNets.

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "netimplode/app/checkpoint.hpp"
#include "netimplode/app/config.hpp"
#include "netimplode/app/csv.hpp"
#include "netimplode/app/idx.hpp"
#include "netimplode/app/synthetic.hpp"
#include "netimplode/bounds.hpp"
#include "netimplode/implosion.hpp"
#include "netimplode/ops.hpp"

namespace fs = std::filesystem;
using namespace netimplode;
using namespace netimplode::app;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct Options {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> k;
  std::optional<std::size_t> target;
  std::optional<std::string> data_dir;
  std::string checkpoint;
  std::string split = "val";
  bool quiet = false;

  // bounds, raw signature
  std::optional<std::size_t> n0;
  std::vector<std::size_t> widths;
  std::vector<double> factors;
  std::optional<std::size_t> erase;
  std::optional<std::size_t> m;
  std::optional<std::size_t> classes;
  double c = 1.0;
  std::optional<double> input_bound;
  double rho = 1.0;
  double delta = 0.05;
  std::optional<double> emp;
  std::optional<double> emp_erased;
};

RunConfig resolve_config(const Options& o) {
  if (!o.config_path.empty() && !o.preset_name.empty()) throw ConfigError("--config and --preset are exclusive");
  RunConfig c = o.config_path.empty() ? preset(o.preset_name.empty() ? "desk" : o.preset_name)
                                      : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.k) c.implosion.k = *o.k;
  if (o.target) c.implosion.target_remaining = *o.target;
  if (o.data_dir) c.dataset.mnist.dir = *o.data_dir;
  c.training.seed = c.seed;
  c.implosion.retrain.seed = c.seed;
  c.validate();
  return c;
}

struct Data {
  DatasetSplit train;
  DatasetSplit val;
};

Data load_data(const RunConfig& c) {
  if (c.dataset.kind == "mnist") {
    const fs::path dir = c.dataset.mnist.dir;
    Data d{load_mnist((dir / "train-images-idx3-ubyte").string(), (dir / "train-labels-idx1-ubyte").string(),
                      c.dataset.mnist.train_limit, "train"),
           load_mnist((dir / "t10k-images-idx3-ubyte").string(), (dir / "t10k-labels-idx1-ubyte").string(),
                      c.dataset.mnist.val_limit, "val")};
    return d;
  }
  const auto& s = c.dataset.synthetic;
  auto all = generate_synthetic(s.kind, s.per_class, c.architecture.classes, s.noise, s.seed);
  auto [train, val] = split_train_val(all, s.val_fraction, s.seed);
  return {std::move(train), std::move(val)};
}

void check_compatible(const FCResNetModel& model, const DatasetSplit& data) {
  if (model.input_width() != data.features.cols()) {
    throw ConfigError("model input width " + std::to_string(model.input_width()) + " does not match data width " +
                      std::to_string(data.features.cols()));
  }
  data.validate(model.class_count());
}

// Exclusive per-directory lock, removed on scope exit.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / ".netimplode.lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      if (errno == EEXIST) {
        throw std::runtime_error("output directory " + dir.string() + " is locked by another run (" +
                                 path_.string() + ")");
      }
      throw std::runtime_error("cannot create " + path_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  ~OutputLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("short write to " + path.string());
}

std::string round_name(std::size_t round) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "round-%02zu.nimp", round);
  return buf;
}

void say(const Options& o, const std::string& line) {
  if (!o.quiet) std::cout << line << '\n';
}

std::string pct(double acc) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", acc * 100.0);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_train(const Options& o) {
  const RunConfig c = resolve_config(o);
  const Data data = load_data(c);
  FCResNetModel model = build_model(c.architecture.stages, c.architecture.classes, c.architecture.input_width,
                                    c.architecture.input_bound, c.seed);
  check_compatible(model, data.train);
  check_compatible(model, data.val);

  const fs::path out = c.output_dir;
  OutputLock lock(out);
  write_text(out / "config.json", config_to_json(c).dump(2) + "\n");
  const auto rows = train(model, data.train, &data.val, c.training);
  std::ostringstream csv;
  write_metrics_header(csv);
  write_metrics_rows(csv, "train", rows);
  write_text(out / "metrics.csv", csv.str());
  save_checkpoint(model, (out / "model.nimp").string(), config_fingerprint(c));
  say(o, "trained " + std::to_string(rows.size()) + " epochs, val accuracy " +
             (rows.empty() ? pct(evaluate_accuracy(model, data.val)) : pct(rows.back().val_acc)) + ", wrote " +
             (out / "model.nimp").string());
  return 0;
}

int cmd_implode(const Options& o) {
  const RunConfig c = resolve_config(o);
  const Data data = load_data(c);
  FCResNetModel model;
  bool from_checkpoint = !o.checkpoint.empty();
  if (from_checkpoint) {
    model = load_checkpoint(o.checkpoint).model;
    c.implosion.validate(eligible_units(model).size());
  } else {
    model = build_model(c.architecture.stages, c.architecture.classes, c.architecture.input_width,
                        c.architecture.input_bound, c.seed);
  }
  check_compatible(model, data.train);
  check_compatible(model, data.val);

  const fs::path out = c.output_dir;
  OutputLock lock(out);
  write_text(out / "config.json", config_to_json(c).dump(2) + "\n");
  const std::string digest = config_fingerprint(c);

  std::ostringstream metrics;
  write_metrics_header(metrics);
  double initial_acc = 0.0;
  if (from_checkpoint) {
    initial_acc = evaluate_accuracy(model, data.val);
  } else {
    const auto rows = train(model, data.train, &data.val, c.training);
    write_metrics_rows(metrics, "train", rows);
    initial_acc = rows.empty() ? evaluate_accuracy(model, data.val) : rows.back().val_acc;
  }
  save_checkpoint(model, (out / round_name(0)).string(), digest);
  say(o, "round 0: " + std::to_string(eligible_units(model).size()) + " units, val accuracy " + pct(initial_acc));

  std::vector<CurvePoint> curve{curve_point("implosion", model, initial_acc)};
  std::ostringstream rounds;
  rounds << "round,unit_id,priority,erased\n";
  auto on_round = [&](const FCResNetModel& m, const RoundRecord& rec) {
    for (const auto& p : rec.priorities_before) {
      const bool erased = std::find(rec.erased.begin(), rec.erased.end(), p.id) != rec.erased.end();
      rounds << rec.round << ',' << p.id << ',' << format_double(p.priority) << ',' << (erased ? 1 : 0) << '\n';
    }
    const double acc = rec.metrics.empty() ? evaluate_accuracy(m, data.val) : rec.metrics.back().val_acc;
    curve.push_back(curve_point("implosion", m, acc));
    save_checkpoint(m, (out / round_name(rec.round)).string(), digest);
    std::string ids;
    for (UnitId id : rec.erased) ids += (ids.empty() ? "" : " ") + std::to_string(id);
    say(o, "round " + std::to_string(rec.round) + ": erased {" + ids + "}, " +
               std::to_string(eligible_units(m).size()) + " units left, val accuracy " + pct(acc));
  };
  const auto state = run_implosion(model, data.train, &data.val, c.implosion, on_round);
  write_metrics_rows(metrics, "implosion", state.metrics);

  std::ostringstream curve_csv;
  write_curve(curve_csv, curve);
  write_text(out / "metrics.csv", metrics.str());
  write_text(out / "curve.csv", curve_csv.str());
  write_text(out / "rounds.csv", rounds.str());
  return 0;
}

int cmd_baseline(const Options& o) {
  const RunConfig c = resolve_config(o);
  const Data data = load_data(c);
  const auto& stages = c.architecture.stages;
  const std::size_t initial = initial_weighted_units(stages);
  std::vector<std::size_t> depths = c.baseline_depths;
  if (depths.empty()) depths.push_back(c.implosion.target_remaining);
  std::sort(depths.begin(), depths.end(), std::greater<>());
  depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
  std::vector<std::vector<StageSpec>> plans;
  for (std::size_t d : depths) plans.push_back(reduced_stages(stages, even_weighted_split(stages, d)));
  {
    const auto probe = build_model(plans.front(), c.architecture.classes, c.architecture.input_width,
                                   c.architecture.input_bound, c.seed);
    check_compatible(probe, data.train);
    check_compatible(probe, data.val);
  }

  const fs::path out = c.output_dir;
  OutputLock lock(out);
  write_text(out / "config.json", config_to_json(c).dump(2) + "\n");
  const std::string digest = config_fingerprint(c);
  std::ostringstream metrics;
  write_metrics_header(metrics);
  std::vector<CurvePoint> curve;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    const std::size_t rounds = implosion_rounds(initial, depths[i], c.implosion.k);
    const std::size_t budget = baseline_epoch_budget(c.training.epochs, rounds, c.implosion.retrain.epochs);
    auto result = train_scratch_baseline(plans[i], c.architecture.classes, c.architecture.input_width,
                                         c.architecture.input_bound, c.seed, data.train, &data.val, c.training,
                                         budget);
    write_metrics_rows(metrics, "baseline", result.metrics);
    const double acc =
        result.metrics.empty() ? evaluate_accuracy(result.model, data.val) : result.metrics.back().val_acc;
    curve.push_back(curve_point("baseline", result.model, acc));
    save_checkpoint(result.model, (out / ("baseline-" + std::to_string(depths[i]) + ".nimp")).string(), digest);
    say(o, "baseline " + std::to_string(depths[i]) + " units, " + std::to_string(budget) +
               " epochs: val accuracy " + pct(acc));
  }
  std::ostringstream curve_csv;
  write_curve(curve_csv, curve);
  write_text(out / "metrics.csv", metrics.str());
  write_text(out / "curve.csv", curve_csv.str());
  return 0;
}

// ---------------------------------------------------------------------------
// bounds

std::string opt_string(const std::optional<double>& v) { return v ? format_double(*v) : ""; }
std::string opt_string(const std::optional<BigInt>& v) { return v ? v->str() : ""; }

inline constexpr const char* kBoundsHeader =
    "n0,L,widths,m,classes,c,input_bound,rho,delta,paths,region_bound,erased_index,region_bound_after_erasure,"
    "rademacher_bound,rademacher_bound_after_erasure,erasure_tightens,empirical_margin_error,"
    "empirical_margin_error_after_erasure,generalization_bound,generalization_bound_after_erasure,"
    "theorem1_lhs,theorem1_rhs,theorem1_holds";

std::string bounds_csv(const BoundReport& r) {
  const auto& s = r.signature;
  std::ostringstream out;
  out << "# natural log throughout except log2(2/rho); m doubles as the training-set size\n";
  out << kBoundsHeader << '\n';
  std::string widths;
  for (std::size_t w : s.widths) widths += (widths.empty() ? "" : " ") + std::to_string(w);
  out << s.n0 << ',' << s.depth() << ',' << widths << ',' << s.m << ',' << s.classes << ',' << format_double(s.c)
      << ',' << format_double(s.input_bound) << ',' << format_double(s.rho) << ',' << format_double(s.delta) << ','
      << r.paths.str() << ',' << r.region_bound.str() << ','
      << (r.erased_index ? std::to_string(*r.erased_index) : "") << ',' << opt_string(r.region_bound_after_erasure)
      << ',' << opt_string(r.rademacher_bound) << ',' << opt_string(r.rademacher_bound_after_erasure) << ','
      << (r.erasure_tightens ? (*r.erasure_tightens ? "true" : "false") : "") << ','
      << opt_string(r.empirical_margin_error) << ',' << opt_string(r.empirical_margin_error_after_erasure) << ','
      << opt_string(r.generalization_bound) << ',' << opt_string(r.generalization_bound_after_erasure) << ','
      << (r.theorem1 ? format_double(r.theorem1->lhs) : "") << ','
      << (r.theorem1 ? format_double(r.theorem1->rhs) : "") << ','
      << (r.theorem1 ? (r.theorem1->holds ? "true" : "false") : "") << '\n';
  return out.str();
}

nlohmann::json bounds_json(const BoundReport& r) {
  using nlohmann::json;
  const auto& s = r.signature;
  // Big integers go out as decimal strings; they overflow JSON numbers.
  json j{{"signature",
          {{"n0", s.n0},
           {"widths", s.widths},
           {"L", s.depth()},
           {"m", s.m},
           {"classes", s.classes},
           {"c", s.c},
           {"input_bound", s.input_bound},
           {"rho", s.rho},
           {"delta", s.delta}}},
         {"log_base", "natural, except log2(2/rho)"},
         {"paths", r.paths.str()},
         {"region_bound", r.region_bound.str()}};
  auto put = [&j](const char* key, const auto& v) {
    if (v) j[key] = *v;
  };
  put("erased_index", r.erased_index);
  if (r.region_bound_after_erasure) j["region_bound_after_erasure"] = r.region_bound_after_erasure->str();
  if (!r.factors.empty()) j["factors"] = r.factors;
  put("rademacher_bound", r.rademacher_bound);
  put("rademacher_bound_after_erasure", r.rademacher_bound_after_erasure);
  put("erasure_tightens", r.erasure_tightens);
  put("empirical_margin_error", r.empirical_margin_error);
  put("empirical_margin_error_after_erasure", r.empirical_margin_error_after_erasure);
  put("generalization_bound", r.generalization_bound);
  put("generalization_bound_after_erasure", r.generalization_bound_after_erasure);
  if (r.theorem1) j["theorem1"] = {{"lhs", r.theorem1->lhs}, {"rhs", r.theorem1->rhs}, {"holds", r.theorem1->holds}};
  return j;
}

// Margins are taken on the raw network scores (logits).
double margin_error_on(const FCResNetModel& model, const DatasetSplit& data, double rho) {
  return empirical_margin_error(predict(model, data.features), data.labels, rho);
}

int cmd_bounds(const Options& o) {
  const RunConfig c = resolve_config(o);
  BoundInputs in;
  auto& sig = in.signature;
  sig.c = o.c;
  sig.rho = o.rho;
  sig.delta = o.delta;
  in.erased_index = o.erase;

  if (!o.checkpoint.empty()) {
    if (o.n0 || !o.widths.empty() || !o.factors.empty() || o.emp || o.emp_erased) {
      throw ConfigError("--checkpoint derives n0, widths, factors and errors; drop the raw signature flags");
    }
    const FCResNetModel model = load_checkpoint(o.checkpoint).model;
    const Data data = load_data(c);
    check_compatible(model, data.train);
    sig.n0 = model.input_width();
    sig.input_bound = o.input_bound.value_or(model.input_bound());
    sig.classes = model.class_count();
    sig.m = o.m.value_or(data.train.size());
    for (const auto& f : layer_l1_bounds(model).units) {
      sig.widths.push_back(f.hidden_width);
      in.factors.push_back(f.factor);
    }
    sig.validate();
    in.emp_full = margin_error_on(model, data.train, sig.rho);
    if (o.erase) {
      if (*o.erase < 1 || *o.erase > model.units().size()) {
        throw DomainError("--erase " + std::to_string(*o.erase) + " outside [1, " +
                          std::to_string(model.units().size()) + "]");
      }
      FCResNetModel erased = model;
      const UnitId id = model.units()[*o.erase - 1].id;
      erase_units(erased, std::span<const UnitId>(&id, 1));
      in.emp_erased = margin_error_on(erased, data.train, sig.rho);
    }
  } else {
    if (!o.n0 || o.widths.empty()) throw ConfigError("bounds needs --checkpoint or --n0 and --widths");
    sig.n0 = *o.n0;
    sig.widths = o.widths;
    sig.m = o.m.value_or(1);
    sig.classes = o.classes.value_or(2);
    sig.input_bound = o.input_bound.value_or(1.0);
    in.factors = o.factors;
    in.emp_full = o.emp;
    in.emp_erased = o.emp_erased;
  }
  const BoundReport report = evaluate_bounds(in);

  const fs::path out = c.output_dir;
  OutputLock lock(out);
  const std::string csv = bounds_csv(report);
  write_text(out / "bounds.csv", csv);
  write_text(out / "bounds.json", bounds_json(report).dump(2) + "\n");
  if (!o.quiet) std::cout << csv;
  return 0;
}

// ---------------------------------------------------------------------------

const DatasetSplit& pick_split(const Data& d, const std::string& split) {
  if (split == "train") return d.train;
  if (split == "val") return d.val;
  throw ConfigError("--split must be train or val");
}

int cmd_eval(const Options& o) {
  const RunConfig c = resolve_config(o);
  if (o.checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
  const FCResNetModel model = load_checkpoint(o.checkpoint).model;
  const Data data = load_data(c);
  const DatasetSplit& split = pick_split(data, o.split);
  check_compatible(model, split);
  std::cout << "accuracy," << format_double(evaluate_accuracy(model, split)) << '\n'
            << "split," << o.split << '\n'
            << "rows," << split.size() << '\n';
  return 0;
}

int cmd_inspect(const Options& o, bool with_accuracy) {
  if (o.checkpoint.empty()) throw ConfigError("inspect needs --checkpoint");
  const FCResNetModel model = load_checkpoint(o.checkpoint).model;
  std::optional<double> acc;
  if (with_accuracy) {
    const RunConfig c = resolve_config(o);
    const Data data = load_data(c);
    const DatasetSplit& split = pick_split(data, o.split);
    check_compatible(model, split);
    acc = evaluate_accuracy(model, split);
  }
  const auto factors = layer_l1_bounds(model).units;
  std::cout << kLayerConvention << '\n' << "unit,kind,stage,hidden_width,priority,factor,layers,macs,params\n";
  for (std::size_t i = 0; i < model.units().size(); ++i) {
    const auto& u = model.units()[i];
    std::cout << u.id << ',' << to_string(u.kind) << ',' << u.stage << ',' << u.hidden_width() << ','
              << (u.kind == UnitKind::Weighted ? format_double(std::abs(u.w[0])) : "") << ','
              << format_double(factors[i].factor) << ',' << unit_layers(u) << ',' << unit_macs(u) << ','
              << unit_params(u) << '\n';
  }
  const auto& h = model.head();
  std::cout << "head,dense,," << h.W.rows() << ",,," << kHeadLayers << ',' << h.W.rows() * h.W.cols() << ','
            << h.W.rows() * h.W.cols() + h.b.cols() * h.b.rows() << '\n';
  std::cout << "total,,,,,," << count_layers(model) << ',' << count_macs(model) << ',' << count_params(model)
            << '\n';
  std::cout << "# weighted units: " << eligible_units(model).size() << '\n';
  if (acc) std::cout << "# accuracy(" << o.split << "): " << format_double(*acc) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network implosion for fully-connected residual networks"};
  app.require_subcommand(1);
  Options o;
  bool inspect_accuracy = false;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration");
    sub->add_option("--preset", o.preset_name, "Named preset: desk or paper");
    sub->add_option("--seed", o.seed, "Override the global seed");
    sub->add_option("--out", o.out, "Override the output directory");
    sub->add_option("--data-dir", o.data_dir, "Override the MNIST directory");
    sub->add_flag("--quiet", o.quiet, "Suppress progress lines");
  };
  auto* train_cmd = app.add_subcommand("train", "Train a model from scratch; writes model.nimp and metrics.csv");
  common(train_cmd);
  auto* implode_cmd = app.add_subcommand("implode", "Erase-and-retrain; writes per-round checkpoints and curve.csv");
  common(implode_cmd);
  implode_cmd->add_option("--k", o.k, "Units erased per round");
  implode_cmd->add_option("--target", o.target, "Stop at this many weighted units");
  implode_cmd->add_option("--from", o.checkpoint, "Start from a trained checkpoint instead of training first");
  auto* baseline_cmd = app.add_subcommand("baseline", "Scratch baselines with matched epoch budgets");
  common(baseline_cmd);
  baseline_cmd->add_option("--k", o.k, "Units per implosion round used for budget matching");
  baseline_cmd->add_option("--target", o.target, "Depth when the config lists none");
  auto* bounds_cmd = app.add_subcommand("bounds", "Region and generalization bounds as CSV and JSON");
  common(bounds_cmd);
  bounds_cmd->add_option("--checkpoint", o.checkpoint, "Derive the signature from a checkpoint");
  bounds_cmd->add_option("--n0", o.n0, "Input width");
  bounds_cmd->add_option("--widths", o.widths, "Layer widths n_1..n_L")->delimiter(',');
  bounds_cmd->add_option("--factors", o.factors, "Per-layer norm factors W_1..W_L")->delimiter(',');
  bounds_cmd->add_option("--erase", o.erase, "1-based layer index to erase");
  bounds_cmd->add_option("--m", o.m, "Sample count");
  bounds_cmd->add_option("--classes", o.classes, "Class count M");
  bounds_cmd->add_option("--c", o.c, "Rademacher constant")->capture_default_str();
  bounds_cmd->add_option("--input-bound", o.input_bound, "Input half-width N");
  bounds_cmd->add_option("--rho", o.rho, "Margin in (0, 1]")->capture_default_str();
  bounds_cmd->add_option("--delta", o.delta, "Confidence parameter in (0, 1)")->capture_default_str();
  bounds_cmd->add_option("--emp", o.emp, "Empirical margin error of the full model");
  bounds_cmd->add_option("--emp-erased", o.emp_erased, "Empirical margin error after erasure");
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy of a checkpoint on a split");
  common(eval_cmd);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate")->required();
  eval_cmd->add_option("--split", o.split, "train or val")->capture_default_str();
  auto* inspect_cmd = app.add_subcommand("inspect", "Per-unit accounting table of a checkpoint");
  common(inspect_cmd);
  inspect_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint to inspect")->required();
  inspect_cmd->add_option("--split", o.split, "Split for --accuracy")->capture_default_str();
  inspect_cmd->add_flag("--accuracy", inspect_accuracy, "Also report accuracy on --split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "netimplode: error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(o);
    if (implode_cmd->parsed()) return cmd_implode(o);
    if (baseline_cmd->parsed()) return cmd_baseline(o);
    if (bounds_cmd->parsed()) return cmd_bounds(o);
    if (eval_cmd->parsed()) return cmd_eval(o);
    if (inspect_cmd->parsed()) return cmd_inspect(o, inspect_accuracy);
  } catch (const DataError& e) {
    std::cerr << "netimplode: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::logic_error& e) {
    std::cerr << "netimplode: error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "netimplode: runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
