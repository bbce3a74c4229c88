#include <sys/wait.h>
#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "netimplode/app/checkpoint.hpp"
#include "netimplode/app/config.hpp"
#include "netimplode/app/csv.hpp"
#include "netimplode/app/idx.hpp"
#include "netimplode/app/synthetic.hpp"
#include "netimplode/training.hpp"

namespace fs = std::filesystem;
using namespace netimplode;
using namespace netimplode::app;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("netimplode-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path capture = dir / "stdout.txt";
  const std::string cmd = std::string(NETIMPLODE_CLI) + " " + args + " > " + capture.string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(capture);
  return r;
}

void put_be32(std::vector<unsigned char>& bytes, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) bytes.push_back(static_cast<unsigned char>(v >> shift));
}

std::vector<unsigned char> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                      const std::vector<unsigned char>& pixels) {
  std::vector<unsigned char> bytes;
  put_be32(bytes, kIdxImageMagic);
  put_be32(bytes, count);
  put_be32(bytes, rows);
  put_be32(bytes, cols);
  bytes.insert(bytes.end(), pixels.begin(), pixels.end());
  return bytes;
}

std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& labels) {
  std::vector<unsigned char> bytes;
  put_be32(bytes, kIdxLabelMagic);
  put_be32(bytes, static_cast<std::uint32_t>(labels.size()));
  bytes.insert(bytes.end(), labels.begin(), labels.end());
  return bytes;
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

bool bit_identical(const Matrix2D& a, const Matrix2D& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.values().data(), b.values().data(), a.values().size() * sizeof(double)) == 0;
}

FCResNetModel perturbed_model() {
  auto model = build_model({{3, 5, 3}, {4, 6, 3}}, 3, 2, 1.5, 21);
  Rng rng(5);
  for (auto& u : model.units()) {
    for (double& v : u.B.values()) v = rng.normal(0.0, 0.3);
    for (double& v : u.a.values()) v = rng.normal(0.0, 0.1);
    if (u.eligible()) u.w[0] = rng.normal();
  }
  const UnitId gone = eligible_units(model)[1];
  erase_units(model, std::span<const UnitId>(&gone, 1));
  return model;
}

Matrix2D probe_batch() {
  Matrix2D x(16, 2);
  Rng rng(8);
  for (double& v : x.values()) v = rng.uniform() * 3.0 - 1.5;
  return x;
}

// Writes an IDX image/label pair with pixels and labels drawn independently.
void write_noise_mnist(const fs::path& dir, const std::string& prefix, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<unsigned char> pixels(count * 784);
  for (auto& p : pixels) p = static_cast<unsigned char>(rng.below(256));
  std::vector<unsigned char> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<unsigned char>(i % 10);
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<unsigned char> shuffled(count);
  for (std::size_t i = 0; i < count; ++i) shuffled[i] = labels[order[i]];
  write_bytes(dir / (prefix + "-images-idx3-ubyte"), idx_images(static_cast<std::uint32_t>(count), 28, 28, pixels));
  write_bytes(dir / (prefix + "-labels-idx1-ubyte"), idx_labels(shuffled));
}

std::string tiny_synthetic_config(const fs::path& out, std::size_t units_per_stage) {
  nlohmann::json j = {
      {"dataset",
       {{"kind", "synthetic"}, {"generator", "blobs"}, {"per_class", 40}, {"noise", 0.2}, {"seed", 4},
        {"val_fraction", 0.25}}},
      {"architecture",
       {{"stages",
         {{{"stream_width", 4}, {"hidden_width", 8}, {"unit_count", units_per_stage}},
          {{"stream_width", 4}, {"hidden_width", 8}, {"unit_count", units_per_stage}}}},
        {"classes", 3},
        {"input_width", 2},
        {"input_bound", 1.5}}},
      {"training", {{"learning_rate", 0.02}, {"epochs", 3}, {"lr_milestones", {2}}, {"batch_size", 16}}},
      {"implosion",
       {{"k", 1},
        {"target_remaining", 5},
        {"retrain", {{"learning_rate", 0.02}, {"epochs", 1}, {"lr_milestones", nlohmann::json::array()},
                     {"batch_size", 16}}}}},
      {"baseline", {{"depths", {5}}}},
      {"output_dir", out.string()},
      {"seed", 11}};
  return j.dump(2);
}

}  // namespace

// ---------------------------------------------------------------------------
// IDX

TEST(Idx, ParsesHeaderAndScalesPixels) {
  const auto bytes = idx_images(2, 2, 3, {0, 255, 51, 102, 0, 1, 255, 255, 255, 0, 0, 0});
  const auto m = parse_idx_images(bytes, "mem");
  ASSERT_EQ(m.rows(), 2u);
  ASSERT_EQ(m.cols(), 6u);
  EXPECT_EQ(m(0, 1), 1.0);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(m(0, 2), 0.2);
  EXPECT_EQ(m(1, 0), 1.0);
  EXPECT_EQ(parse_idx_images(bytes, "mem", 1).rows(), 1u);
  EXPECT_EQ(parse_idx_labels(idx_labels({7, 2, 9}), "mem"), (std::vector<int>{7, 2, 9}));
}

TEST(Idx, WrongMagicIsFormatError) {
  auto bytes = idx_images(1, 1, 1, {3});
  EXPECT_THROW(parse_idx_labels(bytes, "mem"), FormatError);
  bytes[3] = 0x01;
  EXPECT_THROW(parse_idx_images(bytes, "mem"), FormatError);
}

TEST(Idx, TruncationIsFormatError) {
  const auto bytes = idx_images(3, 2, 2, std::vector<unsigned char>(11, 9));
  EXPECT_THROW(parse_idx_images(bytes, "mem"), FormatError);
  EXPECT_THROW(parse_idx_images(std::vector<unsigned char>{0, 0, 8, 3, 0, 0}, "mem"), FormatError);
  auto labels = idx_labels({1, 2, 3});
  labels.pop_back();
  EXPECT_THROW(parse_idx_labels(labels, "mem"), FormatError);
}

TEST(Idx, CountMismatchBetweenFiles) {
  const auto dir = scratch_dir("idx-mismatch");
  write_bytes(dir / "img", idx_images(2, 28, 28, std::vector<unsigned char>(2 * 784, 0)));
  write_bytes(dir / "lbl", idx_labels({1, 2, 3}));
  EXPECT_THROW(load_mnist((dir / "img").string(), (dir / "lbl").string()), FormatError);
  EXPECT_THROW(load_mnist((dir / "missing").string(), (dir / "lbl").string()), DataError);
}

TEST(Idx, BundledSubsetHasMnistShape) {
  const fs::path dir = fs::path(NETIMPLODE_DATA_DIR) / "mnist";
  const auto split = load_mnist((dir / "t10k-images-idx3-ubyte").string(), (dir / "t10k-labels-idx1-ubyte").string(),
                                500, "val");
  EXPECT_EQ(split.features.rows(), 500u);
  EXPECT_EQ(split.features.cols(), 784u);
  EXPECT_NO_THROW(split.validate(10));
  for (double v : split.features.values()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

// ---------------------------------------------------------------------------
// Synthetic data

TEST(Synthetic, NoiselessBlobsSitOnTheirCentres) {
  const auto d = generate_synthetic(SyntheticKind::Blobs, 5, 4, 0.0, 1);
  ASSERT_EQ(d.size(), 20u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = 2.0 * std::numbers::pi * d.labels[i] / 4.0;
    EXPECT_EQ(d.features(i, 0), std::cos(t));
    EXPECT_EQ(d.features(i, 1), std::sin(t));
  }
}

TEST(Synthetic, SameSeedSameData) {
  for (auto kind : {SyntheticKind::Blobs, SyntheticKind::Spirals}) {
    const auto a = generate_synthetic(kind, 30, 3, 0.1, 9);
    const auto b = generate_synthetic(kind, 30, 3, 0.1, 9);
    EXPECT_TRUE(bit_identical(a.features, b.features));
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_FALSE(bit_identical(a.features, generate_synthetic(kind, 30, 3, 0.1, 10).features));
  }
}

TEST(Synthetic, FirstSpiralPointGolden) {
  const auto d = generate_synthetic(SyntheticKind::Spirals, 100, 3, 0.05, 42);
  EXPECT_EQ(d.features(0, 0), -0.0052075335879060991);
  EXPECT_EQ(d.features(0, 1), 0.015364170074656337);
  EXPECT_EQ(d.labels[0], 0);
}

TEST(Synthetic, RejectsDegenerateRequests) {
  EXPECT_THROW(generate_synthetic(SyntheticKind::Blobs, 0, 3, 0.1, 1), DataError);
  EXPECT_THROW(generate_synthetic(SyntheticKind::Blobs, 4, 1, 0.1, 1), DataError);
  EXPECT_THROW(parse_synthetic_kind("moons"), ConfigError);
}

// ---------------------------------------------------------------------------
// Checkpoints

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto model = perturbed_model();
  const auto bytes = serialize_checkpoint(model, "fnv1a64:0123456789abcdef");
  const auto loaded = deserialize_checkpoint(std::vector<unsigned char>(bytes.begin(), bytes.end()), "mem");
  EXPECT_EQ(loaded.config_digest, "fnv1a64:0123456789abcdef");
  const auto& m = loaded.model;
  EXPECT_EQ(m.next_id(), model.next_id());
  EXPECT_EQ(m.stages(), model.stages());
  ASSERT_EQ(m.units().size(), model.units().size());
  for (std::size_t i = 0; i < m.units().size(); ++i) {
    EXPECT_EQ(m.units()[i].id, model.units()[i].id);
    EXPECT_EQ(m.units()[i].kind, model.units()[i].kind);
    EXPECT_EQ(m.units()[i].priority(), model.units()[i].priority());
  }
  const auto x = probe_batch();
  EXPECT_TRUE(bit_identical(forward(m, x), forward(model, x)));
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = scratch_dir("ckpt-file");
  const auto model = perturbed_model();
  save_checkpoint(model, (dir / "m.nimp").string());
  const auto x = probe_batch();
  EXPECT_TRUE(bit_identical(forward(load_checkpoint((dir / "m.nimp").string()).model, x), forward(model, x)));
  EXPECT_THROW(load_checkpoint((dir / "absent.nimp").string()), DataError);
}

TEST(Checkpoint, LayoutStartsWithMagicAndVersion) {
  const auto bytes = serialize_checkpoint(perturbed_model());
  ASSERT_GT(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "NIMP");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 0);
  EXPECT_EQ(bytes[7], 0);
  std::uint32_t len = 0;
  for (int i = 3; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(bytes[8 + i]);
  const auto header = nlohmann::json::parse(std::string(bytes.begin() + 12, bytes.begin() + 12 + len));
  EXPECT_EQ(header.at("units").size(), 5u);
  EXPECT_EQ(header.at("architecture").at("input_width"), 2);
}

TEST(Checkpoint, TruncatedIsFormatError) {
  const auto bytes = serialize_checkpoint(perturbed_model());
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(deserialize_checkpoint(std::vector<unsigned char>(bytes.begin(), bytes.begin() + cut), "mem"),
                 FormatError)
        << cut;
  }
  auto extra = std::vector<unsigned char>(bytes.begin(), bytes.end());
  extra.push_back(0);
  EXPECT_THROW(deserialize_checkpoint(extra, "mem"), FormatError);
}

TEST(Checkpoint, NewerVersionIsVersionError) {
  const auto bytes = serialize_checkpoint(perturbed_model());
  std::vector<unsigned char> v(bytes.begin(), bytes.end());
  v[4] = static_cast<unsigned char>(kCheckpointVersion + 1);
  EXPECT_THROW(deserialize_checkpoint(v, "mem"), VersionError);
  v[4] = static_cast<unsigned char>(kCheckpointVersion);
  v[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(v, "mem"), FormatError);
}

TEST(Checkpoint, DigestIsStable) {
  EXPECT_EQ(config_digest(""), "fnv1a64:cbf29ce484222325");
  EXPECT_EQ(config_digest("a"), "fnv1a64:af63dc4c8601ec8c");
}

// ---------------------------------------------------------------------------
// Config

TEST(Config, RoundTripThroughJson) {
  const auto dir = scratch_dir("cfg-roundtrip");
  const auto c = parse_config(tiny_synthetic_config(dir / "out", 5));
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.dataset.kind, "synthetic");
  EXPECT_EQ(c.dataset.synthetic.kind, SyntheticKind::Blobs);
  EXPECT_EQ(c.architecture.stages.size(), 2u);
  EXPECT_EQ(c.implosion.target_remaining, 5u);
  const auto again = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(again), config_to_json(c));
  EXPECT_EQ(config_fingerprint(again), config_fingerprint(c));
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(parse_config(R"({"sede": 3})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"training": {"epocs": 3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"architecture": {"stages": [{"stream_width": 4, "hidden_width": 8,
                                 "unit_count": 3, "extra": 1}]}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"dataset": {"kind": "mnist", "per_class": 3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"dataset": {"kind": "cifar"}})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
}

TEST(Config, TypeErrorsRejected) {
  EXPECT_THROW(parse_config(R"({"seed": "one"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"implosion": {"k": -1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"implosion": {"k": 1.5}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"architecture": {"stages": [{"stream_width": 4}]}})"), ConfigError);
}

TEST(Config, ValidationCatchesInconsistentRuns) {
  auto c = desk_preset();
  EXPECT_NO_THROW(c.validate());
  c.architecture.input_width = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = desk_preset();
  c.baseline_depths = {11};
  EXPECT_THROW(c.validate(), ConfigError);
  c = desk_preset();
  c.implosion.target_remaining = 11;
  EXPECT_THROW(c.validate(), std::logic_error);
}

TEST(Config, Presets) {
  const auto desk = preset("desk");
  EXPECT_EQ(initial_weighted_units(desk.architecture.stages), 10u);
  EXPECT_EQ(desk.training.epochs, 40u);
  EXPECT_EQ(desk.training.lr_milestones, (std::vector<std::size_t>{16, 24}));
  EXPECT_EQ(desk.implosion.retrain.epochs, 12u);
  EXPECT_EQ(desk.implosion.retrain.lr_milestones, (std::vector<std::size_t>{4, 8}));
  EXPECT_EQ(desk.implosion.target_remaining, 6u);
  EXPECT_EQ(desk.dataset.mnist.train_limit, 10000u);
  const auto paper = preset("paper");
  EXPECT_EQ(paper.training.learning_rate, 0.1);
  EXPECT_EQ(paper.training.momentum, 0.9);
  EXPECT_EQ(paper.training.weight_decay, 0.0001);
  EXPECT_EQ(paper.implosion.retrain.epochs, 60u);
  EXPECT_EQ(paper.implosion.retrain.lr_milestones, (std::vector<std::size_t>{20, 40}));
  EXPECT_NO_THROW(paper.validate());
  EXPECT_THROW(preset("laptop"), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(NETIMPLODE_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(entry.path().string()).validate()) << entry.path();
  }
}

// ---------------------------------------------------------------------------
// CSV

TEST(Csv, HeadersAreFixed) {
  std::ostringstream m;
  write_metrics_header(m);
  EXPECT_EQ(m.str(),
            "# layers: weighted unit = 2, transition unit = 3, head = 1\n"
            "method,round,epoch,remaining_units,remaining_layers,train_loss,train_acc,val_acc,lr,macs,params\n");
  std::ostringstream c;
  write_curve(c, {});
  EXPECT_EQ(lines_of(c.str()).at(1), "method,remaining_layers,remaining_units,val_accuracy,macs,params");
}

TEST(Csv, CurvePointFollowsLayerConvention) {
  const auto model = build_model({{4, 8, 4}, {4, 8, 3}}, 3, 2, 1.0, 1);
  const auto p = curve_point("implosion", model, 0.5);
  EXPECT_EQ(p.remaining_units, 5u);
  EXPECT_EQ(p.remaining_layers, 5u * 2 + 2u * 3 + 1);
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::nan("")), "");
}

// ---------------------------------------------------------------------------
// Command line

TEST(Cli, ImplodeEightToFiveGivesFourCurvePoints) {
  const auto dir = scratch_dir("cli-implode");
  spit(dir / "run.json", tiny_synthetic_config(dir / "out", 5));
  const auto r = run_cli("implode --quiet --config " + (dir / "run.json").string(), dir);
  ASSERT_EQ(r.code, 0) << slurp(dir / "stderr.txt");
  const auto curve = lines_of(slurp(dir / "out" / "curve.csv"));
  ASSERT_EQ(curve.size(), 2u + 4u);
  EXPECT_EQ(curve[0].front(), '#');
  std::vector<int> layers;
  std::vector<int> units;
  for (std::size_t i = 2; i < curve.size(); ++i) {
    const auto f = fields_of(curve[i]);
    ASSERT_EQ(f.size(), 6u);
    EXPECT_EQ(f[0], "implosion");
    layers.push_back(std::stoi(f[1]));
    units.push_back(std::stoi(f[2]));
  }
  EXPECT_EQ(units, (std::vector<int>{8, 7, 6, 5}));
  for (std::size_t i = 1; i < layers.size(); ++i) EXPECT_LT(layers[i], layers[i - 1]);
  for (int n = 0; n <= 3; ++n) {
    char name[32];
    std::snprintf(name, sizeof name, "round-%02d.nimp", n);
    EXPECT_TRUE(fs::exists(dir / "out" / name)) << name;
  }
  EXPECT_TRUE(fs::exists(dir / "out" / "rounds.csv"));
  EXPECT_FALSE(fs::exists(dir / "out" / ".netimplode.lock"));
  const auto last = load_checkpoint((dir / "out" / "round-03.nimp").string()).model;
  EXPECT_EQ(eligible_units(last).size(), 5u);
}

TEST(Cli, ImplodeIsByteReproducible) {
  const auto dir = scratch_dir("cli-repro");
  spit(dir / "run.json", tiny_synthetic_config(dir / "a", 5));
  ASSERT_EQ(run_cli("implode --quiet --config " + (dir / "run.json").string(), dir).code, 0);
  ASSERT_EQ(run_cli("implode --quiet --config " + (dir / "run.json").string() + " --out " + (dir / "b").string(), dir)
                .code,
            0);
  EXPECT_EQ(slurp(dir / "a" / "metrics.csv"), slurp(dir / "b" / "metrics.csv"));
  EXPECT_EQ(slurp(dir / "a" / "curve.csv"), slurp(dir / "b" / "curve.csv"));
  ASSERT_EQ(run_cli("implode --quiet --config " + (dir / "run.json").string() + " --seed 12 --out " +
                        (dir / "c").string(),
                    dir)
                .code,
            0);
  EXPECT_NE(slurp(dir / "a" / "metrics.csv"), slurp(dir / "c" / "metrics.csv"));
}

TEST(Cli, TrainEvalInspectAndBaseline) {
  const auto dir = scratch_dir("cli-train");
  spit(dir / "run.json", tiny_synthetic_config(dir / "out", 5));
  const std::string cfg = " --quiet --config " + (dir / "run.json").string();
  ASSERT_EQ(run_cli("train" + cfg, dir).code, 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "model.nimp"));
  EXPECT_EQ(lines_of(slurp(dir / "out" / "metrics.csv")).size(), 2u + 3u);

  const auto ev = run_cli("eval" + cfg + " --checkpoint " + (dir / "out" / "model.nimp").string(), dir);
  ASSERT_EQ(ev.code, 0);
  EXPECT_EQ(ev.out.rfind("accuracy,", 0), 0u);

  const auto in = run_cli("inspect" + cfg + " --checkpoint " + (dir / "out" / "model.nimp").string(), dir);
  ASSERT_EQ(in.code, 0);
  const auto rows = lines_of(in.out);
  const auto model = load_checkpoint((dir / "out" / "model.nimp").string()).model;
  bool saw_total = false;
  for (const auto& row : rows) {
    if (row.rfind("total,", 0) != 0) continue;
    const auto f = fields_of(row);
    EXPECT_EQ(std::stoul(f[6]), count_layers(model));
    EXPECT_EQ(std::stoul(f[7]), count_macs(model));
    EXPECT_EQ(std::stoul(f[8]), count_params(model));
    saw_total = true;
  }
  EXPECT_TRUE(saw_total);

  ASSERT_EQ(run_cli("baseline" + cfg + " --out " + (dir / "base").string(), dir).code, 0);
  const auto curve = lines_of(slurp(dir / "base" / "curve.csv"));
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_EQ(fields_of(curve[2])[0], "baseline");
  EXPECT_EQ(fields_of(curve[2])[2], "5");
  EXPECT_TRUE(fs::exists(dir / "base" / "baseline-5.nimp"));
}

TEST(Cli, BoundsOnRawSignature) {
  const auto dir = scratch_dir("cli-bounds");
  const auto r = run_cli("bounds --quiet --n0 2 --widths 4,4,4 --factors 1.5,2,0.5 --erase 2 --m 100 --out " +
                             (dir / "out").string(),
                         dir);
  ASSERT_EQ(r.code, 0) << slurp(dir / "stderr.txt");
  const auto csv = lines_of(slurp(dir / "out" / "bounds.csv"));
  ASSERT_EQ(csv.size(), 3u);
  const auto header = fields_of(csv[1]);
  const auto row = fields_of(csv[2]);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return row.at(i);
    ADD_FAILURE() << name;
    return std::string();
  };
  EXPECT_EQ(column("region_bound"), "176");
  EXPECT_EQ(column("region_bound_after_erasure"), "44");
  EXPECT_EQ(column("paths"), "8");
  EXPECT_EQ(column("erasure_tightens"), "true");
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "bounds.json"));
  EXPECT_EQ(j.at("region_bound"), "176");
}

TEST(Cli, EvalOfUntrainedModelIsChance) {
  const auto dir = scratch_dir("cli-chance");
  fs::create_directories(dir / "mnist");
  write_noise_mnist(dir / "mnist", "train", 200, 1);
  write_noise_mnist(dir / "mnist", "t10k", 3000, 2);
  save_checkpoint(build_model({{16, 32, 2}}, 10, 784, 1.0, 3), (dir / "untrained.nimp").string());
  const auto r = run_cli("eval --preset desk --data-dir " + (dir / "mnist").string() + " --checkpoint " +
                             (dir / "untrained.nimp").string(),
                         dir);
  ASSERT_EQ(r.code, 0) << slurp(dir / "stderr.txt");
  const double acc = std::stod(fields_of(lines_of(r.out).at(0)).at(1));
  EXPECT_NEAR(acc, 0.1, 0.03);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli-exit");
  EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
  EXPECT_EQ(run_cli("bounds --n0 3 --widths 4,2 --out " + (dir / "x").string(), dir).code, 2);
  spit(dir / "bad.json", R"({"seed": 1, "colour": "red"})");
  EXPECT_EQ(run_cli("train --config " + (dir / "bad.json").string(), dir).code, 2);
  EXPECT_EQ(run_cli("eval --preset desk --checkpoint " + (dir / "nope.nimp").string(), dir).code, 3);
  spit(dir / "junk.nimp", "NIMPgarbage");
  EXPECT_EQ(run_cli("inspect --checkpoint " + (dir / "junk.nimp").string(), dir).code, 3);
  EXPECT_EQ(run_cli("train --preset desk --quiet --data-dir " + (dir / "empty").string() + " --out " +
                        (dir / "y").string(),
                    dir)
                .code,
            3);
  EXPECT_FALSE(slurp(dir / "stderr.txt").empty());
  EXPECT_EQ(slurp(dir / "stderr.txt").find("terminate"), std::string::npos);
}

TEST(Cli, LockedOutputDirectoryIsRefused) {
  const auto dir = scratch_dir("cli-lock");
  fs::create_directories(dir / "out");
  spit(dir / "out" / ".netimplode.lock", "1\n");
  const auto r = run_cli("bounds --quiet --n0 2 --widths 4,4 --out " + (dir / "out").string(), dir);
  EXPECT_EQ(r.code, 4);
  EXPECT_FALSE(fs::exists(dir / "out" / "bounds.csv"));
}

TEST(Cli, InvalidConfigLeavesNoOutput) {
  const auto dir = scratch_dir("cli-no-partial");
  auto j = nlohmann::json::parse(tiny_synthetic_config(dir / "out", 5));
  j["implosion"]["target_remaining"] = 9;
  spit(dir / "bad-target.json", j.dump());
  j = nlohmann::json::parse(tiny_synthetic_config(dir / "out", 5));
  j["training"]["lr_milestones"] = {3, 2};
  spit(dir / "bad-milestones.json", j.dump());
  j = nlohmann::json::parse(tiny_synthetic_config(dir / "out", 5));
  j["architecture"]["input_width"] = 3;
  spit(dir / "bad-width.json", j.dump());
  for (const char* name : {"bad-target.json", "bad-milestones.json", "bad-width.json"}) {
    for (const char* cmd : {"train", "implode", "baseline"}) {
      const auto r = run_cli(std::string(cmd) + " --quiet --config " + (dir / name).string(), dir);
      EXPECT_EQ(r.code, 2) << cmd << " " << name;
      EXPECT_FALSE(fs::exists(dir / "out")) << cmd << " " << name;
    }
  }
}
