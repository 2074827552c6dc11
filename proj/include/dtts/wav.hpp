// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtts {

// Minimal mono WAV support: 16-bit PCM (format 1) and 32-bit float (format 3).
// No resampling: callers that require a specific rate must check it.

struct WavData {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 0;
};

namespace wav_detail {

inline void put_u32(std::ofstream& f, std::uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
  f.write(b, 4);
}
inline void put_u16(std::ofstream& f, std::uint16_t v) {
  char b[2] = {char(v & 0xff), char((v >> 8) & 0xff)};
  f.write(b, 2);
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t get_u16(const unsigned char* p) { return std::uint16_t(p[0]) | (std::uint16_t(p[1]) << 8); }

}  // namespace wav_detail

enum class WavFormat { Pcm16, Float32 };

inline void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate,
                      WavFormat format = WavFormat::Pcm16) {
  using namespace wav_detail;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  const bool pcm = format == WavFormat::Pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t data_bytes = std::uint32_t(samples.size()) * (bits / 8);
  f.write("RIFF", 4);
  put_u32(f, 36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(f, 16);
  put_u16(f, pcm ? 1 : 3);
  put_u16(f, 1);  // mono
  put_u32(f, std::uint32_t(sample_rate));
  put_u32(f, std::uint32_t(sample_rate) * (bits / 8));
  put_u16(f, bits / 8);
  put_u16(f, bits);
  f.write("data", 4);
  put_u32(f, data_bytes);
  for (double s : samples) {
    if (pcm) {
      double c = s < -1.0 ? -1.0 : (s > 1.0 ? 1.0 : s);
      auto q = std::int16_t(c < 0 ? c * 32768.0 : c * 32767.0);
      put_u16(f, std::uint16_t(q));
    } else {
      float v = float(s);
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      put_u32(f, u);
    }
  }
}

/// Reads a mono WAV. If `expected_rate` > 0 and the file rate differs, throws
/// (this library never resamples).
inline WavData read_wav(const std::string& path, int expected_rate = 0) {
  using namespace wav_detail;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("not a RIFF/WAVE file: " + path);
  size_t pos = 12;
  int format = -1, channels = 0, bits = 0;
  int rate = 0;
  WavData out;
  bool got_data = false;
  while (pos + 8 <= buf.size()) {
    std::uint32_t chunk_size = get_u32(buf.data() + pos + 4);
    const unsigned char* body = buf.data() + pos + 8;
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw std::runtime_error("truncated fmt chunk: " + path);
      format = get_u16(body);
      channels = get_u16(body + 2);
      rate = int(get_u32(body + 4));
      bits = get_u16(body + 14);
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      if (format < 0) throw std::runtime_error("data chunk before fmt chunk: " + path);
      if (channels != 1) throw std::runtime_error("only mono WAV is supported: " + path);
      size_t avail = std::min(size_t(chunk_size), buf.size() - pos - 8);
      if (format == 1 && bits == 16) {
        out.samples.resize(avail / 2);
        for (size_t i = 0; i < out.samples.size(); ++i) {
          auto q = std::int16_t(get_u16(body + 2 * i));
          out.samples[i] = q < 0 ? q / 32768.0 : q / 32767.0;
        }
      } else if (format == 3 && bits == 32) {
        out.samples.resize(avail / 4);
        for (size_t i = 0; i < out.samples.size(); ++i) {
          std::uint32_t u = get_u32(body + 4 * i);
          float v;
          std::memcpy(&v, &u, 4);
          out.samples[i] = double(v);
        }
      } else {
        throw std::runtime_error("unsupported WAV encoding (want 16-bit PCM or 32-bit float): " + path);
      }
      got_data = true;
    }
    pos += 8 + chunk_size + (chunk_size & 1);
  }
  if (!got_data) throw std::runtime_error("WAV file has no data chunk: " + path);
  out.sample_rate = rate;
  if (expected_rate > 0 && rate != expected_rate)
    throw std::runtime_error("sample-rate mismatch: file " + path + " is " + std::to_string(rate) + " Hz, expected " +
                             std::to_string(expected_rate) + " Hz (resampling is not supported)");
  return out;
}

}  // namespace dtts
