#include "vdegrade/frame.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vdegrade/error.hpp"

namespace vdegrade {

namespace {

void check_dims(int height, int width) {
  if (height <= 0 || width <= 0) {
    throw ArgumentError("frame dimensions must be positive, got " + std::to_string(height) + "x" +
                        std::to_string(width));
  }
}

}  // namespace

Frame::Frame(int height, int width, double fill) : height_(height), width_(width) {
  check_dims(height, width);
  samples_.assign(pixel_count() * kChannels, fill);
}

Frame::Frame(int height, int width, std::vector<double> samples)
    : height_(height), width_(width), samples_(std::move(samples)) {
  check_dims(height, width);
  if (samples_.size() != pixel_count() * kChannels) {
    throw ShapeError("frame sample count " + std::to_string(samples_.size()) + " does not match " +
                     std::to_string(height) + "x" + std::to_string(width) + "x3");
  }
}

bool Frame::all_finite() const noexcept {
  return std::all_of(samples_.begin(), samples_.end(), [](double v) { return std::isfinite(v); });
}

Clip::Clip(std::vector<Frame> frames, std::optional<double> frame_rate_hint)
    : frames_(std::move(frames)), frame_rate_hint_(frame_rate_hint) {
  if (frames_.empty()) throw ArgumentError("clip must contain at least one frame");
  for (const auto& f : frames_) {
    if (!f.same_shape(frames_.front())) throw ShapeError("clip frames differ in dimensions");
  }
  if (frame_rate_hint_ && !(*frame_rate_hint_ > 0.0)) {
    throw ArgumentError("frame rate hint must be positive");
  }
}

bool Clip::same_shape(const Clip& other) const noexcept {
  return length() == other.length() && (frames_.empty() || frames_.front().same_shape(other.frames_.front()));
}

}  // namespace vdegrade
