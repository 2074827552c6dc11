// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "dtts/io.hpp"
#include "dtts/wav.hpp"

using namespace dtts;
namespace fs = std::filesystem;

namespace {
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("dtts_test_" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};
}  // namespace

TEST_CASE("spectrogram dump round trip with sidecar header") {
  TempDir tmp;
  Mat m(3, 4);
  for (size_t i = 0; i < m.v.size(); ++i) m.v[i] = double(i) * 0.25;
  write_spectrogram_dump(tmp.file("spec.f32"), m, 24000, 1024);
  int sr = 0, hop = 0;
  Mat back = read_spectrogram_dump(tmp.file("spec.f32"), &sr, &hop);
  CHECK(sr == 24000);
  CHECK(hop == 1024);
  REQUIRE(back.rows == 3);
  REQUIRE(back.cols == 4);
  for (size_t i = 0; i < m.v.size(); ++i) CHECK(back.v[i] == doctest::Approx(m.v[i]).epsilon(1e-7));
}

TEST_CASE("checkpoint save/load preserves names, shapes and values") {
  TempDir tmp;
  std::vector<NamedTensor> tensors;
  Tensor a({2, 3});
  for (size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * double(i) - 1.0;
  Tensor b({4});
  for (size_t i = 0; i < b.size(); ++i) b[i] = double(i);
  tensors.push_back({"layer.w", a});
  tensors.push_back({"layer.b", b});
  save_checkpoint(tmp.file("ckpt"), tensors);
  auto back = load_checkpoint(tmp.file("ckpt"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "layer.w");
  CHECK(back[0].tensor.shape == std::vector<int>{2, 3});
  CHECK(back[1].name == "layer.b");
  for (size_t i = 0; i < a.size(); ++i) CHECK(back[0].tensor[i] == doctest::Approx(a[i]).epsilon(1e-7));
}

TEST_CASE("wav round trip: pcm16 and float32, mono") {
  TempDir tmp;
  std::vector<double> samples(512);
  for (size_t i = 0; i < samples.size(); ++i) samples[i] = 0.9 * std::sin(0.05 * double(i));
  write_wav(tmp.file("a.wav"), samples, 24000, WavFormat::Pcm16);
  auto a = read_wav(tmp.file("a.wav"));
  CHECK(a.sample_rate == 24000);
  REQUIRE(a.samples.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) CHECK(a.samples[i] == doctest::Approx(samples[i]).epsilon(2e-4));

  write_wav(tmp.file("b.wav"), samples, 4800, WavFormat::Float32);
  auto b = read_wav(tmp.file("b.wav"), 4800);
  for (size_t i = 0; i < samples.size(); ++i) CHECK(b.samples[i] == doctest::Approx(samples[i]).epsilon(1e-6));
}

TEST_CASE("wav sample-rate mismatch is an error, not a resample") {
  TempDir tmp;
  write_wav(tmp.file("c.wav"), std::vector<double>(64, 0.0), 24000);
  CHECK_THROWS_WITH_AS(read_wav(tmp.file("c.wav"), 4800), doctest::Contains("sample-rate mismatch"),
                       std::runtime_error);
}
