#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "netimplode/dataset.hpp"
#include "netimplode/errors.hpp"

namespace netimplode::app {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                               const std::string& path) {
  if (offset + 4 > bytes.size()) throw FormatError(path + ": truncated IDX header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace detail

// IDX image file: magic 0x00000803, count, rows, cols (big-endian), then
// count*rows*cols unsigned bytes. Pixels are scaled by 1/255.
inline Matrix2D parse_idx_images(const std::vector<unsigned char>& bytes, const std::string& path,
                                 std::size_t limit = 0) {
  const std::uint32_t magic = detail::read_be32(bytes, 0, path);
  if (magic != kIdxImageMagic) throw FormatError(path + ": bad IDX image magic");
  const std::size_t count = detail::read_be32(bytes, 4, path);
  const std::size_t rows = detail::read_be32(bytes, 8, path);
  const std::size_t cols = detail::read_be32(bytes, 12, path);
  const std::size_t width = rows * cols;
  if (bytes.size() < 16 + count * width) throw FormatError(path + ": truncated IDX image data");
  const std::size_t take = limit == 0 ? count : std::min(limit, count);
  Matrix2D out(take, width);
  auto dst = out.values();
  for (std::size_t i = 0; i < take * width; ++i) dst[i] = static_cast<double>(bytes[16 + i]) / 255.0;
  return out;
}

inline std::vector<int> parse_idx_labels(const std::vector<unsigned char>& bytes, const std::string& path,
                                         std::size_t limit = 0) {
  const std::uint32_t magic = detail::read_be32(bytes, 0, path);
  if (magic != kIdxLabelMagic) throw FormatError(path + ": bad IDX label magic");
  const std::size_t count = detail::read_be32(bytes, 4, path);
  if (bytes.size() < 8 + count) throw FormatError(path + ": truncated IDX label data");
  const std::size_t take = limit == 0 ? count : std::min(limit, count);
  return std::vector<int>(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(take));
}

// Loads an image/label file pair; `limit` > 0 keeps only the first rows.
inline DatasetSplit load_mnist(const std::string& images_path, const std::string& labels_path,
                               std::size_t limit = 0, std::string tag = "train") {
  const auto image_bytes = detail::read_file(images_path);
  const auto label_bytes = detail::read_file(labels_path);
  const std::size_t image_count = detail::read_be32(image_bytes, 4, images_path);
  const std::size_t label_count = detail::read_be32(label_bytes, 4, labels_path);
  if (image_count != label_count) {
    throw FormatError(images_path + " holds " + std::to_string(image_count) + " images but " + labels_path +
                      " holds " + std::to_string(label_count) + " labels");
  }
  DatasetSplit split{parse_idx_images(image_bytes, images_path, limit),
                     parse_idx_labels(label_bytes, labels_path, limit), std::move(tag)};
  return split;
}

}  // namespace netimplode::app
