#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "test_support.hpp"
#include "vdegrade/codec.hpp"
#include "vdegrade/error.hpp"
#include "vdegrade/metrics.hpp"

using namespace vdegrade;

namespace {

struct ScopedEnv {
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (value) setenv(name, value, 1); else unsetenv(name);
  }
  ~ScopedEnv() { unsetenv(name_); }
  const char* name_;
};

}  // namespace

TEST_CASE("dct round trip without quantization") {
  SeededRng rng(3, 0);
  for (int trial = 0; trial < 100; ++trial) {
    Block8 b;
    for (double& v : b) v = rng.uniform(-255.0, 255.0);
    const Block8 r = inverse_dct(forward_dct(b));
    for (std::size_t i = 0; i < 64; ++i) CHECK(std::fabs(r[i] - b[i]) < 1e-4);
  }
}

TEST_CASE("dct of a constant block has only a DC term") {
  Block8 b;
  b.fill(10.0);
  const Block8 c = forward_dct(b);
  CHECK(c[0] == doctest::Approx(80.0));  // 8 * mean under the orthonormal basis
  for (std::size_t i = 1; i < 64; ++i) CHECK(std::fabs(c[i]) < 1e-12);
}

TEST_CASE("quant table derivation") {
  const QuantTables q50 = derive_quant_tables(50);
  CHECK(q50.luma == kBaseLumaTable);
  CHECK(q50.chroma == kBaseChromaTable);
  const QuantTables q100 = derive_quant_tables(100);
  for (int v : q100.luma) CHECK(v == 1);
  for (int v : q100.chroma) CHECK(v == 1);
  CHECK(derive_quant_tables(30).luma[0] == 27);
  CHECK(derive_quant_tables(1).luma[0] == 255);  // 16 * 5000 clamps
  CHECK_THROWS_AS(derive_quant_tables(0), ArgumentError);
  CHECK_THROWS_AS(derive_quant_tables(101), ArgumentError);
}

TEST_CASE("jpeg psnr is monotone in quality on the fixtures") {
  for (const auto& name : testing::fixture_names()) {
    const Frame x = testing::fixture(name);
    double prev = 0.0;
    for (int q : {30, 50, 70, 95}) {
      const double p = psnr(jpeg_roundtrip(x, {q, ChromaSubsampling::k420}), x);
      CHECK_MESSAGE(p >= prev, name << " Q" << q);
      prev = p;
    }
    const double gain = psnr(jpeg_roundtrip(x, {95}), x) - psnr(jpeg_roundtrip(x, {30}), x);
    CHECK_MESSAGE(gain >= 4.0, name << " gain " << gain);
  }
}

TEST_CASE("jpeg blockiness is stronger at low quality") {
  for (const auto& name : testing::fixture_names()) {
    const Frame x = testing::fixture(name);
    CHECK_MESSAGE(block_boundary_metric(jpeg_roundtrip(x, {30})) > block_boundary_metric(jpeg_roundtrip(x, {95})), name);
  }
}

TEST_CASE("jpeg is deterministic and keeps range and shape") {
  const Frame x = testing::fixture("chelsea");
  const Frame a = jpeg_roundtrip(x, {42, ChromaSubsampling::k444});
  const Frame b = jpeg_roundtrip(x, {42, ChromaSubsampling::k444});
  CHECK(a == b);
  for (double v : a.samples()) CHECK((v >= 0.0 && v <= 1.0));
  // Odd sizes exercise block padding and chroma decimation edges.
  const Frame odd(13, 21, 0.3);
  const Frame r = jpeg_roundtrip(odd, {75});
  CHECK(r.height() == 13);
  CHECK(r.width() == 21);
}

TEST_CASE("jpeg on constant frames follows the DC-only analysis") {
  // Only the DC term survives, quantized with step q = luma[0]. The DC of a
  // constant block is 8 (v*255 - 128), so the per-pixel error is at most
  // q / 16 in 8-bit units before the final 8-bit rounding.
  for (int q : {30, 50, 75, 95}) {
    const int step = derive_quant_tables(q).luma[0];
    for (double v : {0.1, 0.37, 0.5, 0.81}) {
      const Frame x = quantize_8bit(Frame(16, 16, v));
      const Frame y = jpeg_roundtrip(x, {q, ChromaSubsampling::k444});
      const double bound = (step / 16.0 + 0.5 + 1e-9) / 255.0;
      double max_err = 0.0;
      for (std::size_t i = 0; i < x.samples().size(); ++i) max_err = std::max(max_err, std::fabs(y.samples()[i] - x.samples()[i]));
      // Gray input: chroma DC is exactly 0 and stays 0, so only luma errs.
      CHECK_MESSAGE(max_err <= bound, "Q" << q << " v=" << v);
    }
  }
  // Steps of 2 or less (Q >= 88 for the luma DC entry) land within one 8-bit level.
  const Frame x = quantize_8bit(Frame(16, 16, 0.37));
  CHECK(psnr(jpeg_roundtrip(x, {90, ChromaSubsampling::k444}), x) > 48.0);
}

TEST_CASE("qp mapping from bitrate") {
  CHECK(qp_from_bitrate(1e4) == 51);
  CHECK(qp_from_bitrate(2e4) == 43);
  CHECK(qp_from_bitrate(1e5) == 24);  // 51 - 8 log2(10) = 24.42
  CHECK(qp_from_bitrate(1e9) == kMinQp);
  CHECK(qp_from_bitrate(10.0) == kMaxQp);
  int prev = kMaxQp;
  for (double b = 1e4; b <= 1e5; b *= 1.1) {
    CHECK(qp_from_bitrate(b) <= prev);
    prev = qp_from_bitrate(b);
  }
  CHECK(quantizer_step(8) == 1.0);
  CHECK(quantizer_step(14) == doctest::Approx(2.0));
  CHECK_THROWS_AS(qp_from_bitrate(0.0), ArgumentError);
}

TEST_CASE("builtin video: static clip propagates frame zero exactly") {
  const Frame f = testing::fixture("coffee");
  const Clip clip(std::vector<Frame>(4, f));
  SeededRng rng(1, 1);
  for (int qp : {8, 30, 51}) {
    VideoCodecSpec spec;
    spec.qp = qp;
    const VideoCompressResult r = video_compress(clip, spec, rng);
    CHECK(r.commands.empty());
    for (std::size_t i = 1; i < r.clip.length(); ++i) CHECK(r.clip[i] == r.clip[0]);
  }
}

TEST_CASE("builtin video: psnr non-increasing in qp, near lossless at qp 8") {
  Clip clip = testing::fixture_clip("astronaut", 3);
  std::vector<Frame> q;
  for (const Frame& f : clip.frames()) q.push_back(quantize_8bit(f));
  clip = Clip(std::move(q));
  SeededRng rng(1, 1);
  double prev = INFINITY;
  for (int qp = kMinQp; qp <= kMaxQp; qp += 4) {
    VideoCodecSpec spec;
    spec.qp = qp;
    const double p = psnr(video_compress(clip, spec, rng).clip, clip);
    CHECK_MESSAGE(p <= prev + 1e-9, "qp " << qp);
    if (qp == kMinQp) CHECK(p > 48.0);
    prev = p;
  }
}

TEST_CASE("builtin video: coarse qp produces block structure") {
  const Clip clip = testing::fixture_clip("chelsea", 2);
  SeededRng rng(1, 1);
  VideoCodecSpec spec;
  spec.qp = 51;
  const Clip out = video_compress(clip, spec, rng).clip;
  CHECK(block_boundary_metric(out[0]) > 0.0);
  CHECK(block_boundary_metric(out[0]) > block_boundary_metric(clip[0]));
  spec.qp = 60;
  CHECK_THROWS_AS(video_compress(clip, spec, rng), ArgumentError);
}

TEST_CASE("external video backend") {
  const Clip clip = testing::fixture_clip("rocket", 2);
  SeededRng rng(1, 1);
  VideoCodecSpec spec;
  spec.backend = VideoBackend::kExternal;
  spec.codec_name = "mpeg4";
  spec.bitrate = 5e4;

  SUBCASE("missing tool is an environment error") {
    ScopedEnv env(kEncoderEnvVar, nullptr);
    CHECK_THROWS_AS(video_compress(clip, spec, rng), EnvironmentError);
  }
  SUBCASE("non executable tool is an environment error") {
    ScopedEnv env(kEncoderEnvVar, "/nonexistent/encoder");
    CHECK_THROWS_AS(video_compress(clip, spec, rng), EnvironmentError);
  }
  SUBCASE("codec outside the list is rejected") {
    ScopedEnv env(kEncoderEnvVar, VDEGRADE_FAKE_ENCODER);
    spec.codec_name = "vp9";
    CHECK_THROWS_AS(video_compress(clip, spec, rng), ConfigError);
  }
  SUBCASE("pass-through tool gives a 4:2:0 round trip and records commands") {
    ScopedEnv env(kEncoderEnvVar, VDEGRADE_FAKE_ENCODER);
    const VideoCompressResult r = video_compress(clip, spec, rng);
    REQUIRE(r.clip.length() == clip.length());
    CHECK(r.clip.height() == clip.height());
    CHECK(r.clip.width() == clip.width());
    CHECK(psnr(r.clip, clip) > 28.0);  // chroma decimation only
    REQUIRE(r.commands.size() == 2);
    CHECK(r.commands[0].find("-c:v mpeg4") != std::string::npos);
    CHECK(r.commands[0].find("-b:v 50000") != std::string::npos);
    CHECK(r.commands[0].find("yuv420p") != std::string::npos);
  }
  SUBCASE("size change is an integrity error") {
    ScopedEnv env(kEncoderEnvVar, VDEGRADE_FAKE_ENCODER);
    ScopedEnv trunc("FAKE_ENCODER_TRUNCATE", "1");
    CHECK_THROWS_AS(video_compress(clip, spec, rng), IntegrityError);
  }
}

TEST_CASE("codec sampling ranges") {
  SeededRng rng(9, 2);
  int lo = 100, hi = 0;
  for (int i = 0; i < 5000; ++i) {
    const JpegSpec j = sample_jpeg_spec(rng);
    lo = std::min(lo, j.quality);
    hi = std::max(hi, j.quality);
    const VideoCodecSpec v = sample_video_spec(rng);
    CHECK((v.bitrate >= 1e4 && v.bitrate < 1e5));
    CHECK(v.qp == qp_from_bitrate(v.bitrate));
    CHECK(std::find(kDefaultVideoCodecs.begin(), kDefaultVideoCodecs.end(), v.codec_name) != kDefaultVideoCodecs.end());
  }
  CHECK(lo == 30);
  CHECK(hi == 95);
}

TEST_CASE("8-bit helpers") {
  CHECK(to_u8(-0.2) == 0);
  CHECK(to_u8(1.5) == 255);
  CHECK(to_u8(0.5) == 128);  // 127.5 rounds half to even
  CHECK(to_u8(128.0 / 255.0) == 128);
}
