#include "vdegrade/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "vdegrade/codec.hpp"
#include "vdegrade/error.hpp"

namespace fs = std::filesystem;

namespace vdegrade {

namespace {

double clamp_u8(double v) { return std::clamp(v, 0.0, 255.0); }

// Full-range BT.601, matching the codec module.
void rgb_to_ycc(double r, double g, double b, double& y, double& cb, double& cr) {
  y = 0.299 * r + 0.587 * g + 0.114 * b;
  cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
  cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
}

void ycc_to_rgb(double y, double cb, double cr, double& r, double& g, double& b) {
  r = y + 1.402 * (cr - 128.0);
  g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0);
  b = y + 1.772 * (cb - 128.0);
}

std::uint8_t round_u8(double v) { return static_cast<std::uint8_t>(std::nearbyint(clamp_u8(v))); }

}  // namespace

Frame read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError(path.string() + ": " + image.message);
  }
  struct Guard {
    png_image* img;
    ~Guard() { png_image_free(img); }
  } guard{&image};
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    throw IoError(path.string() + ": 16-bit PNG is not supported (8-bit required)");
  }
  image.format = PNG_FORMAT_RGB;
  const int width = static_cast<int>(image.width);
  const int height = static_cast<int>(image.height);
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    throw IoError(path.string() + ": " + image.message);
  }
  std::vector<double> samples(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) samples[i] = buffer[i] / 255.0;
  return Frame(height, width, std::move(samples));
}

void write_png(const fs::path& path, const Frame& frame) {
  if (frame.empty()) throw ShapeError("write_png: empty frame");
  std::vector<png_byte> buffer(frame.size());
  const auto s = frame.samples();
  for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i] = to_u8(s[i]);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw IoError("cannot write " + path.string() + ": " + message);
  }
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> frames;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") frames.push_back(entry.path());
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

Clip read_frame_dir(const fs::path& dir) {
  const auto paths = list_frames(dir);
  if (paths.empty()) throw IoError(dir.string() + " contains no PNG frames");
  std::vector<Frame> frames;
  frames.reserve(paths.size());
  for (const auto& p : paths) frames.push_back(read_png(p));
  try {
    return Clip(std::move(frames));
  } catch (const ShapeError& e) {
    throw IoError(dir.string() + ": " + e.what());
  }
}

void write_frame_dir(const fs::path& dir, const Clip& clip, const std::vector<std::string>& names) {
  if (!names.empty() && names.size() != clip.length()) throw ArgumentError("write_frame_dir: one name per frame required");
  fs::create_directories(dir);
  for (std::size_t i = 0; i < clip.length(); ++i) {
    std::string name;
    if (names.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "frame_%06zu.png", i);
      name = buf;
    } else {
      name = names[i];
    }
    write_png(dir / name, clip[i]);
  }
}

Clip read_y4m(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string token;
  hs >> token;
  if (token != "YUV4MPEG2") throw IoError(path.string() + ": not a YUV4MPEG2 stream");
  int width = 0, height = 0;
  bool is420 = true;
  std::optional<double> fps;
  while (hs >> token) {
    const char tag = token[0];
    const std::string value = token.substr(1);
    if (tag == 'W') {
      width = std::stoi(value);
    } else if (tag == 'H') {
      height = std::stoi(value);
    } else if (tag == 'F') {
      const auto colon = value.find(':');
      const double num = std::stod(value.substr(0, colon));
      const double den = colon == std::string::npos ? 1.0 : std::stod(value.substr(colon + 1));
      if (num > 0 && den > 0) fps = num / den;
    } else if (tag == 'C') {
      if (value == "444") {
        is420 = false;
      } else if (value.rfind("420", 0) != 0) {
        throw IoError(path.string() + ": unsupported chroma '" + value + "' (8-bit 4:2:0 or 4:4:4 required)");
      }
    }
  }
  if (width <= 0 || height <= 0) throw IoError(path.string() + ": missing frame dimensions");
  const int cw = is420 ? (width + 1) / 2 : width;
  const int ch = is420 ? (height + 1) / 2 : height;
  const std::size_t luma = static_cast<std::size_t>(width) * height;
  const std::size_t chroma = static_cast<std::size_t>(cw) * ch;
  std::vector<Frame> frames;
  std::vector<unsigned char> buf(luma + 2 * chroma);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("FRAME", 0) != 0) throw IoError(path.string() + ": malformed frame header");
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw IoError(path.string() + ": truncated frame " + std::to_string(frames.size()));
    }
    Frame f(height, width);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t ci = is420 ? static_cast<std::size_t>(y / 2) * cw + x / 2 : static_cast<std::size_t>(y) * cw + x;
        double r, g, b;
        ycc_to_rgb(buf[static_cast<std::size_t>(y) * width + x], buf[luma + ci], buf[luma + chroma + ci], r, g, b);
        f.at(y, x, 0) = clamp_u8(r) / 255.0;
        f.at(y, x, 1) = clamp_u8(g) / 255.0;
        f.at(y, x, 2) = clamp_u8(b) / 255.0;
      }
    }
    frames.push_back(std::move(f));
  }
  if (frames.empty()) throw IoError(path.string() + " contains no frames");
  return Clip(std::move(frames), fps);
}

void write_y4m(const fs::path& path, const Clip& clip) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const int width = clip.width();
  const int height = clip.height();
  const int cw = (width + 1) / 2;
  const int ch = (height + 1) / 2;
  const double fps = clip.frame_rate_hint().value_or(25.0);
  const long fps_num = std::lround(fps * 1000.0);
  out << "YUV4MPEG2 W" << width << " H" << height << " F" << fps_num << ":1000 Ip A1:1 C420jpeg\n";
  std::vector<unsigned char> y_plane(static_cast<std::size_t>(width) * height);
  std::vector<unsigned char> cb_plane(static_cast<std::size_t>(cw) * ch), cr_plane(cb_plane.size());
  std::vector<double> cb_full(y_plane.size()), cr_full(y_plane.size());
  for (const Frame& f : clip.frames()) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double yy, cb, cr;
        rgb_to_ycc(to_u8(f.at(y, x, 0)), to_u8(f.at(y, x, 1)), to_u8(f.at(y, x, 2)), yy, cb, cr);
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        y_plane[i] = round_u8(yy);
        cb_full[i] = cb;
        cr_full[i] = cr;
      }
    }
    for (int y = 0; y < ch; ++y) {
      for (int x = 0; x < cw; ++x) {
        double sb = 0, sr = 0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int yy = std::min(2 * y + dy, height - 1);
            const int xx = std::min(2 * x + dx, width - 1);
            sb += cb_full[static_cast<std::size_t>(yy) * width + xx];
            sr += cr_full[static_cast<std::size_t>(yy) * width + xx];
          }
        }
        cb_plane[static_cast<std::size_t>(y) * cw + x] = round_u8(sb / 4.0);
        cr_plane[static_cast<std::size_t>(y) * cw + x] = round_u8(sr / 4.0);
      }
    }
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(y_plane.data()), static_cast<std::streamsize>(y_plane.size()));
    out.write(reinterpret_cast<const char*>(cb_plane.data()), static_cast<std::streamsize>(cb_plane.size()));
    out.write(reinterpret_cast<const char*>(cr_plane.data()), static_cast<std::streamsize>(cr_plane.size()));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ClipSource> list_clip_sources(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError(root.string() + " is not a directory");
  std::vector<ClipSource> sources;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) {
      sources.push_back({entry.path().filename().string(), entry.path(), ClipSourceKind::kFrameDirectory});
    } else if (entry.is_regular_file() && entry.path().extension() == ".y4m") {
      sources.push_back({entry.path().stem().string(), entry.path(), ClipSourceKind::kY4m});
    }
  }
  std::sort(sources.begin(), sources.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return sources;
}

Clip load_clip(const ClipSource& source) {
  return source.kind == ClipSourceKind::kY4m ? read_y4m(source.path) : read_frame_dir(source.path);
}

void store_clip(const ClipSource& source, const fs::path& output_root, const Clip& clip) {
  if (source.kind == ClipSourceKind::kY4m) {
    fs::create_directories(output_root);
    write_y4m(output_root / source.path.filename(), clip);
    return;
  }
  std::vector<std::string> names;
  for (const auto& p : list_frames(source.path)) names.push_back(p.filename().string());
  if (names.size() != clip.length()) names.clear();
  write_frame_dir(output_root / source.path.filename(), clip, names);
}

}  // namespace vdegrade
