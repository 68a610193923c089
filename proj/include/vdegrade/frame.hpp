#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace vdegrade {

inline constexpr int kChannels = 3;

/// Interleaved RGB raster, row-major, samples nominally in [0, 1].
///
/// Samples are not clamped on construction: intermediate results of additive
/// degradations and residual rasters legitimately leave the unit range.
class Frame {
 public:
  Frame() = default;
  Frame(int height, int width, double fill = 0.0);
  Frame(int height, int width, std::vector<double> samples);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  double& at(int y, int x, int c) noexcept { return samples_[index(y, x, c)]; }
  double at(int y, int x, int c) const noexcept { return samples_[index(y, x, c)]; }

  std::span<double> samples() & noexcept { return samples_; }
  std::span<const double> samples() const& noexcept { return samples_; }
  // A span into a temporary would dangle.
  std::span<const double> samples() && = delete;

  bool same_shape(const Frame& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const noexcept;

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * kChannels + static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> samples_;
};

/// Ordered frame sequence with uniform dimensions; the unit of degradation.
class Clip {
 public:
  Clip() = default;
  explicit Clip(std::vector<Frame> frames, std::optional<double> frame_rate_hint = std::nullopt);

  std::size_t length() const noexcept { return frames_.size(); }
  int height() const noexcept { return frames_.empty() ? 0 : frames_.front().height(); }
  int width() const noexcept { return frames_.empty() ? 0 : frames_.front().width(); }

  const Frame& operator[](std::size_t i) const noexcept { return frames_[i]; }
  Frame& operator[](std::size_t i) noexcept { return frames_[i]; }
  const std::vector<Frame>& frames() const& noexcept { return frames_; }
  std::vector<Frame>& frames() & noexcept { return frames_; }
  std::vector<Frame>& frames() && = delete;  // would dangle in range-for

  std::optional<double> frame_rate_hint() const noexcept { return frame_rate_hint_; }
  bool same_shape(const Clip& other) const noexcept;

  friend bool operator==(const Clip&, const Clip&) = default;

 private:
  std::vector<Frame> frames_;
  std::optional<double> frame_rate_hint_;
};

}  // namespace vdegrade
