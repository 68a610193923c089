#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "vdegrade/frame.hpp"
#include "vdegrade/io.hpp"

namespace testing {

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names = {"astronaut", "camera", "chelsea",
                                                 "coffee",    "immunohistochemistry", "rocket"};
  return names;
}

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(VDEGRADE_FIXTURE_DIR) / (name + ".png");
}

inline vdegrade::Frame fixture(const std::string& name = "astronaut") {
  return vdegrade::read_png(fixture_path(name));
}

/// Short clip built from one fixture with small per-frame shifts.
inline vdegrade::Clip fixture_clip(const std::string& name = "astronaut", int frames = 3) {
  const vdegrade::Frame base = fixture(name);
  std::vector<vdegrade::Frame> out;
  for (int f = 0; f < frames; ++f) {
    vdegrade::Frame shifted(base.height(), base.width());
    for (int y = 0; y < base.height(); ++y) {
      for (int x = 0; x < base.width(); ++x) {
        const int sx = std::min(base.width() - 1, x + f);
        for (int c = 0; c < vdegrade::kChannels; ++c) shifted.at(y, x, c) = base.at(y, sx, c);
      }
    }
    out.push_back(std::move(shifted));
  }
  return vdegrade::Clip(std::move(out));
}

inline vdegrade::Clip constant_clip(int h, int w, double value, int frames = 1) {
  return vdegrade::Clip(std::vector<vdegrade::Frame>(static_cast<std::size_t>(frames), vdegrade::Frame(h, w, value)));
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& leaf) {
  const auto dir = std::filesystem::path(VDEGRADE_TEST_TMP) / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

}  // namespace testing
