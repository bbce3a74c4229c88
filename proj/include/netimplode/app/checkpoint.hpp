#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "netimplode/errors.hpp"
#include "netimplode/resnet.hpp"

namespace netimplode::app {

// Layout (all integers little-endian):
//   "NIMP"
//   u32 version
//   u32 byte length, then that many bytes of UTF-8 JSON (architecture,
//       unit ids and kinds, tensor count, config digest)
//   per tensor, in parameter order:
//       u32 name length, name bytes, u32 rank, rank x u32 dims,
//       prod(dims) x f64 (IEEE-754 bits, little-endian)
inline constexpr char kCheckpointMagic[4] = {'N', 'I', 'M', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// FNV-1a 64-bit, hex; identifies the run config a checkpoint came from.
inline std::string config_digest(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out = "fnv1a64:";
  for (int shift = 60; shift >= 0; shift -= 4) out += digits[(h >> shift) & 0xf];
  return out;
}

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  void raw(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::vector<unsigned char> bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(path_ + ": truncated checkpoint");
  }

  std::vector<unsigned char> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

inline nlohmann::json checkpoint_header(const FCResNetModel& model, const std::string& digest) {
  nlohmann::json arch;
  arch["classes"] = model.class_count();
  arch["input_width"] = model.input_width();
  arch["input_bound"] = model.input_bound();
  for (const auto& s : model.stages()) {
    arch["stages"].push_back(
        {{"stream_width", s.stream_width}, {"hidden_width", s.hidden_width}, {"unit_count", s.unit_count}});
  }
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : model.units()) {
    units.push_back({{"id", u.id}, {"kind", to_string(u.kind)}, {"stage", u.stage}});
  }
  return {{"format", "netimplode-checkpoint"},
          {"architecture", arch},
          {"units", units},
          {"next_id", model.next_id()},
          {"tensor_count", named_tensors(model).size()},
          {"config_digest", digest}};
}

}  // namespace detail

inline std::vector<char> serialize_checkpoint(const FCResNetModel& model, const std::string& digest = "") {
  detail::ByteWriter w;
  w.raw(std::string(kCheckpointMagic, 4));
  w.u32(kCheckpointVersion);
  const std::string header = detail::checkpoint_header(model, digest).dump();
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.raw(header);
  for (const auto& [name, tensor] : named_tensors(model)) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name);
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(tensor->rows()));
    w.u32(static_cast<std::uint32_t>(tensor->cols()));
    for (double v : tensor->values()) w.f64(v);
  }
  return w.bytes();
}

inline void save_checkpoint(const FCResNetModel& model, const std::string& path, const std::string& digest = "") {
  const auto bytes = serialize_checkpoint(model, digest);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path);
}

struct LoadedCheckpoint {
  FCResNetModel model;
  std::string config_digest;
};

inline LoadedCheckpoint deserialize_checkpoint(std::vector<unsigned char> bytes, const std::string& path) {
  detail::ByteReader r(std::move(bytes), path);
  if (r.remaining() < 4 || r.raw(4) != std::string(kCheckpointMagic, 4)) {
    throw FormatError(path + ": not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError(path + ": checkpoint format version " + std::to_string(version) +
                       " is not supported (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t header_len = r.u32();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.raw(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": malformed checkpoint header: " + e.what());
  }

  try {
    const auto& arch = header.at("architecture");
    std::vector<StageSpec> stages;
    for (const auto& s : arch.at("stages")) {
      stages.push_back({s.at("stream_width").get<std::size_t>(), s.at("hidden_width").get<std::size_t>(),
                        s.at("unit_count").get<std::size_t>()});
    }
    std::vector<ResidualUnit> units;
    for (const auto& ju : header.at("units")) {
      ResidualUnit u;
      u.id = ju.at("id").get<UnitId>();
      const auto kind = ju.at("kind").get<std::string>();
      if (kind != "transition" && kind != "weighted") throw FormatError(path + ": unknown unit kind " + kind);
      u.kind = kind == "transition" ? UnitKind::Transition : UnitKind::Weighted;
      u.stage = ju.at("stage").get<std::size_t>();
      units.push_back(std::move(u));
    }

    auto read_tensor = [&](const std::string& expected) {
      const std::string name = r.raw(r.u32());
      if (name != expected) throw FormatError(path + ": expected tensor " + expected + ", found " + name);
      const std::uint32_t rank = r.u32();
      if (rank != 2) throw FormatError(path + ": tensor " + name + " has rank " + std::to_string(rank));
      const std::size_t rows = r.u32();
      const std::size_t cols = r.u32();
      if (rows * cols * 8 > r.remaining()) throw FormatError(path + ": truncated checkpoint");
      std::vector<double> data(rows * cols);
      for (double& v : data) v = r.f64();
      return Matrix2D(rows, cols, std::move(data));
    };

    std::size_t read = 0;
    for (auto& u : units) {
      const std::string prefix = "u" + std::to_string(u.id) + ".";
      if (u.kind == UnitKind::Transition) u.P = read_tensor(prefix + "P"), ++read;
      u.A = read_tensor(prefix + "A");
      u.a = read_tensor(prefix + "a");
      u.B = read_tensor(prefix + "B");
      read += 3;
      if (u.kind == UnitKind::Weighted) u.w = read_tensor(prefix + "w"), ++read;
    }
    DenseLayer head;
    head.W = read_tensor("head.W");
    head.b = read_tensor("head.b");
    read += 2;
    if (read != header.at("tensor_count").get<std::size_t>()) {
      throw FormatError(path + ": tensor count does not match header");
    }
    if (!r.at_end()) throw FormatError(path + ": trailing bytes after last tensor");

    LoadedCheckpoint out;
    out.model = FCResNetModel::assemble(std::move(stages), arch.at("classes").get<std::size_t>(),
                                        arch.at("input_width").get<std::size_t>(),
                                        arch.at("input_bound").get<double>(), std::move(units), std::move(head),
                                        header.at("next_id").get<UnitId>());
    out.config_digest = header.value("config_digest", "");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": malformed checkpoint header: " + e.what());
  } catch (const ArchitectureError& e) {
    throw FormatError(path + ": inconsistent dimensions: " + e.what());
  }
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(std::move(bytes), path);
}

}  // namespace netimplode::app
