#include "vdegrade/codec.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "vdegrade/error.hpp"

extern char** environ;

namespace vdegrade {

namespace {

struct DctBasis {
  std::array<std::array<double, 8>, 8> c{};
  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) c[u][x] = alpha * std::cos((2.0 * x + 1.0) * u * std::numbers::pi / 16.0);
    }
  }
};

const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

// Single-channel plane padded to block multiples by edge replication.
struct Plane {
  int height = 0;
  int width = 0;
  std::vector<double> v;
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

int round_up(int n, int m) { return (n + m - 1) / m * m; }

Plane pad_plane(const Plane& p, int multiple) {
  Plane out{round_up(p.height, multiple), round_up(p.width, multiple), {}};
  out.v.resize(static_cast<std::size_t>(out.height) * out.width);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) out.at(y, x) = p.at(std::min(y, p.height - 1), std::min(x, p.width - 1));
  }
  return out;
}

struct YccPlanes {
  Plane y, cb, cr;
};

// BT.601 full-range (JFIF) conversion on 0..255 samples.
YccPlanes to_ycc(const Frame& frame) {
  const int h = frame.height();
  const int w = frame.width();
  YccPlanes p{{h, w, {}}, {h, w, {}}, {h, w, {}}};
  for (Plane* q : {&p.y, &p.cb, &p.cr}) q->v.resize(frame.pixel_count());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = to_u8(frame.at(y, x, 0));
      const double g = to_u8(frame.at(y, x, 1));
      const double b = to_u8(frame.at(y, x, 2));
      p.y.at(y, x) = 0.299 * r + 0.587 * g + 0.114 * b;
      p.cb.at(y, x) = -0.168735892 * r - 0.331264108 * g + 0.5 * b + 128.0;
      p.cr.at(y, x) = 0.5 * r - 0.418687589 * g - 0.081312411 * b + 128.0;
    }
  }
  return p;
}

Frame from_ycc(const Plane& y_plane, const Plane& cb, const Plane& cr, int h, int w) {
  Frame out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double luma = y_plane.at(y, x);
      const double db = cb.at(y, x) - 128.0;
      const double dr = cr.at(y, x) - 128.0;
      const double rgb[3] = {luma + 1.402 * dr, luma - 0.344136286 * db - 0.714136286 * dr, luma + 1.772 * db};
      for (int c = 0; c < kChannels; ++c) {
        out.at(y, x, c) = std::nearbyint(std::clamp(rgb[c], 0.0, 255.0)) / 255.0;
      }
    }
  }
  return out;
}

Plane decimate_2x2(const Plane& p) {
  Plane out{(p.height + 1) / 2, (p.width + 1) / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.height) * out.width);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double s = 0.0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) s += p.at(std::min(2 * y + dy, p.height - 1), std::min(2 * x + dx, p.width - 1));
      }
      out.at(y, x) = s / 4.0;
    }
  }
  return out;
}

// Centered 2x bilinear upsampling (align-corners false), cropped to h x w.
Plane upsample_2x(const Plane& p, int h, int w) {
  Plane out{h, w, {}};
  out.v.resize(static_cast<std::size_t>(h) * w);
  auto coord = [](int i, int n, int& i0, int& i1, double& t) {
    double s = std::clamp((i + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(n - 1));
    i0 = static_cast<int>(std::floor(s));
    i1 = std::min(i0 + 1, n - 1);
    t = s - i0;
  };
  for (int y = 0; y < h; ++y) {
    int y0, y1;
    double ty;
    coord(y, p.height, y0, y1, ty);
    for (int x = 0; x < w; ++x) {
      int x0, x1;
      double tx;
      coord(x, p.width, x0, x1, tx);
      const double top = p.at(y0, x0) * (1 - tx) + p.at(y0, x1) * tx;
      const double bottom = p.at(y1, x0) * (1 - tx) + p.at(y1, x1) * tx;
      out.at(y, x) = top * (1 - ty) + bottom * ty;
    }
  }
  return out;
}

Block8 read_block(const Plane& p, int by, int bx, double offset) {
  Block8 b;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) b[static_cast<std::size_t>(y * 8 + x)] = p.at(by + y, bx + x) - offset;
  }
  return b;
}

void write_block(Plane& p, int by, int bx, const Block8& b, double offset) {
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) p.at(by + y, bx + x) = b[static_cast<std::size_t>(y * 8 + x)] + offset;
  }
}

// Quantize/dequantize every 8x8 block of a padded plane in place.
void jpeg_quantize_plane(Plane& p, const QuantTable& table) {
  for (int by = 0; by < p.height; by += 8) {
    for (int bx = 0; bx < p.width; bx += 8) {
      Block8 coeffs = forward_dct(read_block(p, by, bx, 128.0));
      for (std::size_t i = 0; i < 64; ++i) {
        const double q = table[i];
        coeffs[i] = std::round(coeffs[i] / q) * q;
      }
      write_block(p, by, bx, inverse_dct(coeffs), 128.0);
    }
  }
}

Plane crop(const Plane& p, int h, int w) {
  Plane out{h, w, {}};
  out.v.resize(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.at(y, x) = p.at(y, x);
  }
  return out;
}

// Dead-zone uniform quantizer: level = sign(c) floor(|c| / step + rounding).
double quantize_level(double c, double step, double rounding) {
  const double level = std::floor(std::fabs(c) / step + rounding);
  return std::copysign(level, c) * step;
}

// Intra rounding 1/2 bounds the reconstruction error by step/2 per
// coefficient; the inter dead zone (1/6) then maps such residuals to zero.
constexpr double kIntraRounding = 0.5;
constexpr double kInterRounding = 1.0 / 6.0;

void code_plane(const Plane& source, Plane& recon, double step, bool intra) {
  for (int by = 0; by < source.height; by += 8) {
    for (int bx = 0; bx < source.width; bx += 8) {
      Block8 target = read_block(source, by, bx, 0.0);
      if (!intra) {
        const Block8 prev = read_block(recon, by, bx, 0.0);
        for (std::size_t i = 0; i < 64; ++i) target[i] -= prev[i];
      }
      Block8 coeffs = forward_dct(target);
      bool any = false;
      for (double& c : coeffs) {
        c = quantize_level(c, step, intra ? kIntraRounding : kInterRounding);
        any = any || c != 0.0;
      }
      if (intra) {
        write_block(recon, by, bx, inverse_dct(coeffs), 0.0);
      } else if (any) {
        const Block8 update = inverse_dct(coeffs);
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) recon.at(by + y, bx + x) += update[static_cast<std::size_t>(y * 8 + x)];
        }
      }
    }
  }
}

Clip builtin_compress(const Clip& clip, const VideoCodecSpec& spec) {
  if (spec.qp < kMinQp || spec.qp > kMaxQp) throw ArgumentError("qp must lie in [8, 51]");
  const double step = quantizer_step(spec.qp);
  const int h = clip.height();
  const int w = clip.width();
  std::vector<Frame> out;
  out.reserve(clip.length());
  YccPlanes recon;
  for (std::size_t i = 0; i < clip.length(); ++i) {
    YccPlanes src = to_ycc(clip[i]);
    src.y = pad_plane(src.y, 8);
    src.cb = pad_plane(src.cb, 8);
    src.cr = pad_plane(src.cr, 8);
    if (i == 0) recon = src;
    code_plane(src.y, recon.y, step, i == 0);
    code_plane(src.cb, recon.cb, step, i == 0);
    code_plane(src.cr, recon.cr, step, i == 0);
    out.push_back(from_ycc(recon.y, recon.cb, recon.cr, h, w));
  }
  return Clip(std::move(out), clip.frame_rate_hint());
}

// --- external encoder --------------------------------------------------------

std::string join_command(const std::vector<std::string>& argv) {
  std::string s;
  for (const auto& a : argv) {
    if (!s.empty()) s += ' ';
    s += a.find_first_of(" \t'\"") == std::string::npos ? a : "'" + a + "'";
  }
  return s;
}

void run_process(const std::vector<std::string>& argv) {
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, args[0], nullptr, nullptr, args.data(), environ);
  if (rc != 0) throw EnvironmentError("failed to launch encoder '" + argv[0] + "': " + std::strerror(rc));
  int status = 0;
  if (waitpid(pid, &status, 0) < 0) throw EnvironmentError("failed waiting for encoder process");
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw EnvironmentError("encoder command failed: " + join_command(argv));
  }
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "vdegrade-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) throw EnvironmentError("cannot create temporary directory");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

VideoCompressResult external_compress(const Clip& clip, const VideoCodecSpec& spec,
                                      const std::vector<std::string>& allowed) {
  if (std::find(allowed.begin(), allowed.end(), spec.codec_name) == allowed.end()) {
    throw ConfigError("codec '" + spec.codec_name + "' is not in the configured codec list");
  }
  const char* encoder = std::getenv(kEncoderEnvVar);
  if (encoder == nullptr || *encoder == '\0') {
    throw EnvironmentError(std::string("external video backend requested but ") + kEncoderEnvVar + " is not set");
  }
  if (access(encoder, X_OK) != 0) {
    throw EnvironmentError(std::string(kEncoderEnvVar) + " does not name an executable: " + encoder);
  }

  const int h = clip.height();
  const int w = clip.width();
  const int ph = round_up(h, 2);
  const int pw = round_up(w, 2);
  const std::size_t luma = static_cast<std::size_t>(ph) * pw;
  const std::size_t frame_bytes = luma + 2 * (luma / 4);

  TempDir tmp;
  const auto raw_in = tmp.path() / "input.yuv";
  const auto encoded = tmp.path() / "encoded.mp4";
  const auto raw_out = tmp.path() / "decoded.yuv";
  {
    std::ofstream f(raw_in, std::ios::binary);
    for (const Frame& frame : clip.frames()) {
      YccPlanes p = to_ycc(frame);
      const Plane y = pad_plane(p.y, 2);
      const Plane cb = decimate_2x2(pad_plane(p.cb, 2));
      const Plane cr = decimate_2x2(pad_plane(p.cr, 2));
      std::vector<char> bytes;
      bytes.reserve(frame_bytes);
      for (const Plane* q : {&y, &cb, &cr}) {
        for (double v : q->v) bytes.push_back(static_cast<char>(static_cast<std::uint8_t>(std::nearbyint(std::clamp(v, 0.0, 255.0)))));
      }
      f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    if (!f) throw EnvironmentError("cannot write encoder input");
  }

  std::ostringstream size;
  size << pw << 'x' << ph;
  std::ostringstream rate;
  rate << static_cast<long long>(std::llround(spec.bitrate));
  const std::vector<std::string> encode = {encoder, "-hide_banner", "-loglevel", "error", "-y",
                                           "-f", "rawvideo", "-pix_fmt", "yuv420p", "-s", size.str(),
                                           "-r", "24", "-i", raw_in.string(), "-c:v", spec.codec_name,
                                           "-b:v", rate.str(), encoded.string()};
  const std::vector<std::string> decode = {encoder, "-hide_banner", "-loglevel", "error", "-y", "-i",
                                           encoded.string(), "-f", "rawvideo", "-pix_fmt", "yuv420p",
                                           raw_out.string()};
  run_process(encode);
  run_process(decode);

  std::ifstream in(raw_out, std::ios::binary);
  if (!in) throw IntegrityError("encoder produced no decoded output");
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() != frame_bytes * clip.length()) {
    throw IntegrityError("decoded stream has " + std::to_string(data.size()) + " bytes, expected " +
                         std::to_string(frame_bytes * clip.length()) + " (dimension or length changed)");
  }

  std::vector<Frame> frames;
  const int ch = ph / 2;
  const int cw = pw / 2;
  for (std::size_t i = 0; i < clip.length(); ++i) {
    const auto* base = reinterpret_cast<const std::uint8_t*>(data.data() + i * frame_bytes);
    Plane y{ph, pw, {}};
    Plane cb{ch, cw, {}};
    Plane cr{ch, cw, {}};
    y.v.assign(base, base + luma);
    cb.v.assign(base + luma, base + luma + luma / 4);
    cr.v.assign(base + luma + luma / 4, base + frame_bytes);
    frames.push_back(from_ycc(y, upsample_2x(cb, ph, pw), upsample_2x(cr, ph, pw), h, w));
  }
  return {Clip(std::move(frames), clip.frame_rate_hint()), {join_command(encode), join_command(decode)}};
}

}  // namespace

Block8 forward_dct(const Block8& block) noexcept {
  const auto& c = basis().c;
  Block8 tmp{};
  Block8 out{};
  for (int u = 0; u < 8; ++u) {  // rows: tmp = C X
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += c[u][y] * block[static_cast<std::size_t>(y * 8 + x)];
      tmp[static_cast<std::size_t>(u * 8 + x)] = s;
    }
  }
  for (int u = 0; u < 8; ++u) {  // columns: out = tmp C^T
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += tmp[static_cast<std::size_t>(u * 8 + x)] * c[v][x];
      out[static_cast<std::size_t>(u * 8 + v)] = s;
    }
  }
  return out;
}

Block8 inverse_dct(const Block8& coeffs) noexcept {
  const auto& c = basis().c;
  Block8 tmp{};
  Block8 out{};
  for (int y = 0; y < 8; ++y) {  // tmp = C^T F
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += c[u][y] * coeffs[static_cast<std::size_t>(u * 8 + v)];
      tmp[static_cast<std::size_t>(y * 8 + v)] = s;
    }
  }
  for (int y = 0; y < 8; ++y) {  // out = tmp C
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += tmp[static_cast<std::size_t>(y * 8 + v)] * c[v][x];
      out[static_cast<std::size_t>(y * 8 + x)] = s;
    }
  }
  return out;
}

std::string_view to_string(ChromaSubsampling mode) noexcept { return mode == ChromaSubsampling::k444 ? "4:4:4" : "4:2:0"; }

ChromaSubsampling chroma_subsampling_from_string(std::string_view name) {
  if (name == "4:4:4") return ChromaSubsampling::k444;
  if (name == "4:2:0") return ChromaSubsampling::k420;
  throw ArgumentError("unknown chroma subsampling '" + std::string(name) + "'");
}

const QuantTable kBaseLumaTable = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                   14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                   18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                   49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

const QuantTable kBaseChromaTable = {17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
                                     24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
                                     99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
                                     99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

QuantTables derive_quant_tables(int quality) {
  if (quality < 1 || quality > 100) throw ArgumentError("jpeg quality must lie in [1, 100]");
  const long scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  auto scaled = [scale](const QuantTable& base) {
    QuantTable t;
    for (std::size_t i = 0; i < 64; ++i) t[i] = static_cast<int>(std::clamp((base[i] * scale + 50) / 100, 1L, 255L));
    return t;
  };
  return {scaled(kBaseLumaTable), scaled(kBaseChromaTable)};
}

Frame jpeg_roundtrip(const Frame& frame, const JpegSpec& spec) {
  const QuantTables tables = derive_quant_tables(spec.quality);
  const int h = frame.height();
  const int w = frame.width();
  YccPlanes p = to_ycc(frame);
  Plane y = pad_plane(p.y, 8);
  jpeg_quantize_plane(y, tables.luma);
  Plane cb, cr;
  if (spec.chroma_subsampling == ChromaSubsampling::k420) {
    Plane small_cb = decimate_2x2(p.cb);
    Plane small_cr = decimate_2x2(p.cr);
    const int sh = small_cb.height;
    const int sw = small_cb.width;
    small_cb = pad_plane(small_cb, 8);
    small_cr = pad_plane(small_cr, 8);
    jpeg_quantize_plane(small_cb, tables.chroma);
    jpeg_quantize_plane(small_cr, tables.chroma);
    cb = upsample_2x(crop(small_cb, sh, sw), h, w);
    cr = upsample_2x(crop(small_cr, sh, sw), h, w);
  } else {
    cb = pad_plane(p.cb, 8);
    cr = pad_plane(p.cr, 8);
    jpeg_quantize_plane(cb, tables.chroma);
    jpeg_quantize_plane(cr, tables.chroma);
  }
  return from_ycc(y, cb, cr, h, w);
}

std::string_view to_string(VideoBackend backend) noexcept {
  return backend == VideoBackend::kBuiltin ? "builtin" : "external";
}

VideoBackend video_backend_from_string(std::string_view name) {
  if (name == "builtin") return VideoBackend::kBuiltin;
  if (name == "external") return VideoBackend::kExternal;
  throw ArgumentError("unknown video backend '" + std::string(name) + "'");
}

int qp_from_bitrate(double bitrate) {
  if (!(bitrate > 0.0) || !std::isfinite(bitrate)) throw ArgumentError("bitrate must be positive");
  const double qp = std::round(51.0 - 8.0 * std::log2(bitrate / 1e4));
  return static_cast<int>(std::clamp(qp, static_cast<double>(kMinQp), static_cast<double>(kMaxQp)));
}

double quantizer_step(int qp) { return std::exp2((qp - kMinQp) / 6.0); }

VideoCompressResult video_compress(const Clip& clip, const VideoCodecSpec& spec, SeededRng& /*rng*/,
                                   const std::vector<std::string>& allowed_codecs) {
  if (clip.length() == 0) throw ArgumentError("video_compress: empty clip");
  if (spec.backend == VideoBackend::kExternal) return external_compress(clip, spec, allowed_codecs);
  return {builtin_compress(clip, spec), {}};
}

JpegSpec sample_jpeg_spec(SeededRng& rng, const CodecSampling& sampling) {
  const auto& q = sampling.jpeg_quality;
  if (q[0] < 1 || q[1] > 100 || q[0] > q[1]) throw ArgumentError("invalid jpeg quality range");
  return {static_cast<int>(rng.uniform_int(q[0], q[1])), sampling.jpeg_chroma};
}

VideoCodecSpec sample_video_spec(SeededRng& rng, const CodecSampling& sampling) {
  if (sampling.video_codecs.empty()) throw ArgumentError("video sampling needs at least one codec");
  const auto& b = sampling.video_bitrate;
  if (!(b[0] > 0.0) || !(b[0] <= b[1])) throw ArgumentError("invalid video bitrate range");
  VideoCodecSpec spec;
  spec.backend = sampling.video_backend;
  std::vector<double> uniform(sampling.video_codecs.size(), 1.0);
  spec.codec_name = sampling.video_codecs[rng.categorical(uniform)];
  spec.bitrate = rng.uniform(b[0], b[1]);
  spec.qp = qp_from_bitrate(spec.bitrate);
  return spec;
}

std::uint8_t to_u8(double unit_sample) noexcept {
  return static_cast<std::uint8_t>(std::nearbyint(std::clamp(unit_sample, 0.0, 1.0) * 255.0));
}

Frame quantize_8bit(const Frame& frame) {
  Frame out = frame;
  for (double& v : out.samples()) v = to_u8(v) / 255.0;
  return out;
}

}  // namespace vdegrade
