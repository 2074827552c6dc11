// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dtts/core.hpp"

namespace dtts {

// On-disk tensor format: raw little-endian float32, row-major, with a sidecar
// text header `<file>.meta` of `key=value` pairs separated by ';'.
// Spectrogram dumps carry `shape=T,F;sr=...;hop=...`; checkpoint tensors just
// carry their shape.

namespace detail {

inline void write_f32_le(std::ofstream& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  char b[4] = {char(u & 0xff), char((u >> 8) & 0xff), char((u >> 16) & 0xff), char((u >> 24) & 0xff)};
  out.write(b, 4);
}

inline float read_f32_le(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t u = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
                    (std::uint32_t(b[3]) << 24);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

inline std::string meta_path(const std::string& path) { return path + ".meta"; }

/// Parses `a=b;c=d` into lookups; throws on missing key.
struct MetaFields {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string get(const std::string& key) const {
    for (auto& [k, v] : kv)
      if (k == key) return v;
    throw std::runtime_error("sidecar header missing field: " + key);
  }
  bool has(const std::string& key) const {
    for (auto& [k, v] : kv)
      if (k == key) return true;
    return false;
  }
};

inline MetaFields parse_meta(const std::string& text) {
  MetaFields m;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    m.kv.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return m;
}

inline std::vector<int> parse_shape(const std::string& s) {
  std::vector<int> shape;
  std::stringstream ss(s);
  std::string d;
  while (std::getline(ss, d, ',')) shape.push_back(std::stoi(d));
  return shape;
}

}  // namespace detail

inline void write_raw_f32(const std::string& path, const std::vector<double>& data, const std::string& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  for (double d : data) detail::write_f32_le(out, float(d));
  std::ofstream m(detail::meta_path(path));
  if (!m) throw std::runtime_error("cannot open for write: " + detail::meta_path(path));
  m << meta << "\n";
}

inline std::vector<double> read_raw_f32(const std::string& path, std::string* meta_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  in.seekg(0, std::ios::end);
  auto bytes = in.tellg();
  in.seekg(0);
  if (bytes % 4 != 0) throw std::runtime_error("raw f32 file size not a multiple of 4: " + path);
  std::vector<double> data(size_t(bytes) / 4);
  for (auto& d : data) d = double(detail::read_f32_le(in));
  if (meta_out) {
    std::ifstream m(detail::meta_path(path));
    if (!m) throw std::runtime_error("missing sidecar header: " + detail::meta_path(path));
    std::getline(m, *meta_out);
  }
  return data;
}

/// Spectrogram dump: row-major [T,F] with `shape=T,F;sr=...;hop=...` sidecar.
inline void write_spectrogram_dump(const std::string& path, const Mat& spec, int sample_rate, int hop) {
  std::ostringstream meta;
  meta << "shape=" << spec.rows << "," << spec.cols << ";sr=" << sample_rate << ";hop=" << hop;
  write_raw_f32(path, spec.v, meta.str());
}

inline Mat read_spectrogram_dump(const std::string& path, int* sample_rate = nullptr, int* hop = nullptr) {
  std::string meta;
  auto data = read_raw_f32(path, &meta);
  auto fields = detail::parse_meta(meta);
  auto shape = detail::parse_shape(fields.get("shape"));
  if (shape.size() != 2) throw std::runtime_error("spectrogram dump is not 2-D: " + path);
  if (size_t(shape[0]) * shape[1] != data.size())
    throw std::runtime_error("spectrogram dump shape/size mismatch: " + path);
  if (sample_rate) *sample_rate = std::stoi(fields.get("sr"));
  if (hop) *hop = std::stoi(fields.get("hop"));
  Mat m(shape[0], shape[1]);
  m.v = std::move(data);
  return m;
}

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

constexpr int kCheckpointFormatVersion = 1;

/// Checkpoint layout: a directory with `manifest.txt` plus one raw-f32 file
/// (and sidecar) per tensor. The manifest pins names, shapes and the format
/// version; tensors load back in manifest order.
inline void save_checkpoint(const std::string& dir, const std::vector<NamedTensor>& tensors) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir + "/manifest.txt");
  if (!manifest) throw std::runtime_error("cannot open for write: " + dir + "/manifest.txt");
  manifest << "format=" << kCheckpointFormatVersion << "\n";
  int idx = 0;
  for (const auto& nt : tensors) {
    std::string fname = "t" + std::to_string(idx++) + ".f32";
    std::ostringstream shape;
    for (size_t i = 0; i < nt.tensor.shape.size(); ++i) shape << (i ? "," : "") << nt.tensor.shape[i];
    manifest << "tensor=" << nt.name << ";shape=" << shape.str() << ";file=" << fname << "\n";
    write_raw_f32(dir + "/" + fname, nt.tensor.v, "shape=" + shape.str());
  }
}

inline std::vector<NamedTensor> load_checkpoint(const std::string& dir) {
  std::ifstream manifest(dir + "/manifest.txt");
  if (!manifest) throw std::runtime_error("cannot open checkpoint manifest: " + dir + "/manifest.txt");
  std::string line;
  if (!std::getline(manifest, line)) throw std::runtime_error("empty checkpoint manifest");
  auto header = detail::parse_meta(line);
  if (std::stoi(header.get("format")) != kCheckpointFormatVersion)
    throw std::runtime_error("unsupported checkpoint format version");
  std::vector<NamedTensor> tensors;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    auto fields = detail::parse_meta(line);
    NamedTensor nt;
    nt.name = fields.get("tensor");
    nt.tensor.shape = detail::parse_shape(fields.get("shape"));
    nt.tensor.v = read_raw_f32(dir + "/" + fields.get("file"));
    size_t n = 1;
    for (int d : nt.tensor.shape) n *= size_t(d);
    if (n != nt.tensor.v.size()) throw std::runtime_error("checkpoint tensor size mismatch: " + nt.name);
    tensors.push_back(std::move(nt));
  }
  return tensors;
}

}  // namespace dtts
