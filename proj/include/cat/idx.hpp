#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "cat/errors.hpp"

namespace cat {

struct IdxImages {
  std::size_t count = 0, rows = 0, cols = 0;
  std::vector<double> pixels;  // count*rows*cols values in [0,1]
};

struct IdxLabels {
  std::vector<std::uint8_t> labels;
};

namespace detail {

inline std::vector<std::uint8_t> read_all_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(path + ": cannot open");
  f.seekg(0, std::ios::end);
  const auto len = f.tellg();
  f.seekg(0);
  const auto n = static_cast<std::size_t>(len);
  std::vector<std::uint8_t> bytes(n);
  f.read(reinterpret_cast<char*>(bytes.data()), len);
  if (!f) throw FormatError(path + ": read failed");
  return bytes;
}

inline std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off,
                          const std::string& path) {
  if (off + 4 > b.size())
    throw FormatError(path + ": truncated at byte offset " + std::to_string(b.size()) +
                      " (needed " + std::to_string(off + 4) + ")");
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

}  // namespace detail

/// Reads a big-endian IDX image file (magic 0x00000803) and scales pixel
/// bytes to [0,1].
inline IdxImages parse_idx_images(const std::string& path) {
  const auto bytes = detail::read_all_bytes(path);
  const std::uint32_t magic = detail::be32(bytes, 0, path);
  if (magic != 0x00000803u)
    throw FormatError(path + ": bad image magic " + std::to_string(magic) + " at byte offset 0");
  IdxImages out;
  out.count = detail::be32(bytes, 4, path);
  out.rows = detail::be32(bytes, 8, path);
  out.cols = detail::be32(bytes, 12, path);
  const std::size_t need = 16 + out.count * out.rows * out.cols;
  if (bytes.size() < need)
    throw FormatError(path + ": truncated at byte offset " + std::to_string(bytes.size()) +
                      " (needed " + std::to_string(need) + ")");
  out.pixels.resize(out.count * out.rows * out.cols);
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = double(bytes[16 + i]) / 255.0;
  return out;
}

/// Reads a big-endian IDX label file (magic 0x00000801).
inline IdxLabels parse_idx_labels(const std::string& path) {
  const auto bytes = detail::read_all_bytes(path);
  const std::uint32_t magic = detail::be32(bytes, 0, path);
  if (magic != 0x00000801u)
    throw FormatError(path + ": bad label magic " + std::to_string(magic) + " at byte offset 0");
  const std::size_t count = detail::be32(bytes, 4, path);
  const std::size_t need = 8 + count;
  if (bytes.size() < need)
    throw FormatError(path + ": truncated at byte offset " + std::to_string(bytes.size()) +
                      " (needed " + std::to_string(need) + ")");
  IdxLabels out;
  out.labels.assign(bytes.begin() + 8, bytes.begin() + std::ptrdiff_t(need));
  return out;
}

inline void write_idx_images(const std::string& path, std::size_t rows, std::size_t cols,
                             const std::vector<double>& pixels) {
  if (rows * cols == 0 || pixels.size() % (rows * cols) != 0)
    throw InputError("pixel count does not tile " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " images");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError(path + ": cannot open for writing");
  auto put32 = [&](std::uint32_t v) {
    const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
    f.write(b, 4);
  };
  put32(0x00000803u);
  put32(std::uint32_t(pixels.size() / (rows * cols)));
  put32(std::uint32_t(rows));
  put32(std::uint32_t(cols));
  for (double p : pixels) {
    const double clamped = p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
    const char byte = char(int(clamped * 255.0 + 0.5));
    f.write(&byte, 1);
  }
  if (!f) throw FormatError(path + ": write failed");
}

inline void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError(path + ": cannot open for writing");
  auto put32 = [&](std::uint32_t v) {
    const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
    f.write(b, 4);
  };
  put32(0x00000801u);
  put32(std::uint32_t(labels.size()));
  f.write(reinterpret_cast<const char*>(labels.data()), std::streamsize(labels.size()));
  if (!f) throw FormatError(path + ": write failed");
}

}  // namespace cat
