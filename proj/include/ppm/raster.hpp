#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ppm {

using RowArrayXXf = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense float image, channels interleaved, rows stored top-to-bottom.
class FloatRaster {
 public:
  FloatRaster() = default;
  FloatRaster(int width, int height, int channels = 1, float fill = 0.0f);
  FloatRaster(int width, int height, int channels, std::vector<float> data);

  /// Single-channel raster from a (height x width) array.
  static FloatRaster from_plane(const RowArrayXXf& plane);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  /// Channel c as a (height x width) array.
  RowArrayXXf plane(int c = 0) const;
  /// Per-pixel mean over channels.
  RowArrayXXf intensity() const;

  bool same_shape(const FloatRaster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }
  bool all_finite() const noexcept;

  friend bool operator==(const FloatRaster&, const FloatRaster&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<float> data_;
};

struct StereoFrame {
  FloatRaster left;
  FloatRaster right;
};

/// T rectified stereo pairs with optional per-frame ground-truth disparity.
struct StereoVideoSequence {
  std::vector<StereoFrame> frames;
  std::optional<std::vector<FloatRaster>> gt_disparity;

  int length() const noexcept { return static_cast<int>(frames.size()); }
  int width() const noexcept { return frames.empty() ? 0 : frames.front().left.width(); }
  int height() const noexcept { return frames.empty() ? 0 : frames.front().left.height(); }

  /// Throws ShapeError if the sequence invariants do not hold.
  void validate() const;
};

}  // namespace ppm
