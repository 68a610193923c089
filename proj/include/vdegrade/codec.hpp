#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vdegrade/frame.hpp"
#include "vdegrade/rng.hpp"

namespace vdegrade {

// ---------------------------------------------------------------------------
// Block DCT primitives (orthonormal 8x8 DCT-II), shared by both codecs.

using Block8 = std::array<double, 64>;

Block8 forward_dct(const Block8& block) noexcept;
Block8 inverse_dct(const Block8& coeffs) noexcept;

// ---------------------------------------------------------------------------
// JPEG round trip (quantization only; entropy coding is lossless and skipped).

enum class ChromaSubsampling { k444, k420 };

std::string_view to_string(ChromaSubsampling mode) noexcept;
ChromaSubsampling chroma_subsampling_from_string(std::string_view name);

struct JpegSpec {
  int quality = 75;
  ChromaSubsampling chroma_subsampling = ChromaSubsampling::k420;
  friend bool operator==(const JpegSpec&, const JpegSpec&) = default;
};

using QuantTable = std::array<int, 64>;

/// Annex K base tables in row-major (not zig-zag) order.
extern const QuantTable kBaseLumaTable;
extern const QuantTable kBaseChromaTable;

struct QuantTables {
  QuantTable luma;
  QuantTable chroma;
};

/// IJG quality scaling: scale = 5000/Q below 50, else 200 - 2Q;
/// entry = clamp(floor((base * scale + 50) / 100), 1, 255). Q in [1, 100].
QuantTables derive_quant_tables(int quality);

/// RGB -> YCbCr (BT.601 full range), optional 4:2:0 decimation, 8x8 DCT,
/// quantize/dequantize, inverse DCT, chroma upsample, YCbCr -> RGB. Input and
/// output pass through 8-bit quantization as a real codec would.
Frame jpeg_roundtrip(const Frame& frame, const JpegSpec& spec);

// ---------------------------------------------------------------------------
// Video compression.

enum class VideoBackend { kBuiltin, kExternal };

std::string_view to_string(VideoBackend backend) noexcept;
VideoBackend video_backend_from_string(std::string_view name);

inline const std::vector<std::string> kDefaultVideoCodecs = {"libx264", "h264", "mpeg4"};

struct VideoCodecSpec {
  VideoBackend backend = VideoBackend::kBuiltin;
  std::string codec_name = "libx264";
  double bitrate = 1e4;
  int qp = 51;
  friend bool operator==(const VideoCodecSpec&, const VideoCodecSpec&) = default;
};

inline constexpr int kMinQp = 8;
inline constexpr int kMaxQp = 51;

/// qp = clamp(round(51 - 8 log2(bitrate / 1e4)), 8, 51).
int qp_from_bitrate(double bitrate);
/// Uniform quantizer step in 8-bit units: 2^((qp - 8) / 6), so qp 8 -> step 1.
double quantizer_step(int qp);

/// Environment variable naming the external encoder executable (an
/// ffmpeg-compatible command line tool).
inline constexpr const char* kEncoderEnvVar = "VDEGRADE_ENCODER";

struct VideoCompressResult {
  Clip clip;
  /// Command lines run by the external backend; empty for builtin.
  std::vector<std::string> commands;
};

/// Builtin: frame 0 intra coded, later frames code the residual against the
/// previous reconstruction (no motion search), all with the qp quantizer.
/// External: encode/decode through the tool named by VDEGRADE_ENCODER.
/// The rng is reserved for stochastic encoders; the builtin path ignores it.
VideoCompressResult video_compress(const Clip& clip, const VideoCodecSpec& spec, SeededRng& rng,
                                   const std::vector<std::string>& allowed_codecs = kDefaultVideoCodecs);

// ---------------------------------------------------------------------------
// Sampling.

struct CodecSampling {
  std::array<int, 2> jpeg_quality = {30, 95};
  ChromaSubsampling jpeg_chroma = ChromaSubsampling::k420;
  VideoBackend video_backend = VideoBackend::kBuiltin;
  std::vector<std::string> video_codecs = kDefaultVideoCodecs;
  std::array<double, 2> video_bitrate = {1e4, 1e5};
  friend bool operator==(const CodecSampling&, const CodecSampling&) = default;
};

JpegSpec sample_jpeg_spec(SeededRng& rng, const CodecSampling& sampling = {});
VideoCodecSpec sample_video_spec(SeededRng& rng, const CodecSampling& sampling = {});

// 8-bit helpers shared with I/O.
std::uint8_t to_u8(double unit_sample) noexcept;  // clamp, scale by 255, round half to even
Frame quantize_8bit(const Frame& frame);

}  // namespace vdegrade
