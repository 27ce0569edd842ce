#include "ppm/raster.hpp"

#include <cmath>
#include <string>

#include "ppm/error.hpp"

namespace ppm {

FloatRaster::FloatRaster(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || (channels != 1 && channels != 3))
    throw ShapeError("raster: invalid shape " + std::to_string(width) + "x" + std::to_string(height) + "x" +
                     std::to_string(channels));
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

FloatRaster::FloatRaster(int width, int height, int channels, std::vector<float> data)
    : FloatRaster(width, height, channels) {
  if (data.size() != data_.size())
    throw ShapeError("raster: data length " + std::to_string(data.size()) + " does not match " +
                     std::to_string(data_.size()));
  data_ = std::move(data);
}

FloatRaster FloatRaster::from_plane(const RowArrayXXf& plane) {
  FloatRaster r(static_cast<int>(plane.cols()), static_cast<int>(plane.rows()), 1);
  Eigen::Map<RowArrayXXf>(r.data_.data(), plane.rows(), plane.cols()) = plane;
  return r;
}

RowArrayXXf FloatRaster::plane(int c) const {
  RowArrayXXf out(height_, width_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) out(y, x) = at(x, y, c);
  return out;
}

RowArrayXXf FloatRaster::intensity() const {
  if (channels_ == 1) return plane(0);
  RowArrayXXf out = RowArrayXXf::Zero(height_, width_);
  for (int c = 0; c < channels_; ++c) out += plane(c);
  return out / static_cast<float>(channels_);
}

bool FloatRaster::all_finite() const noexcept {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void StereoVideoSequence::validate() const {
  if (frames.empty()) throw ShapeError("sequence: no frames");
  const FloatRaster& ref = frames.front().left;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (!frames[t].left.same_shape(ref) || !frames[t].right.same_shape(ref))
      throw ShapeError("sequence: frame " + std::to_string(t) + " shape differs from frame 0");
  }
  if (gt_disparity) {
    if (gt_disparity->size() != frames.size())
      throw ShapeError("sequence: " + std::to_string(gt_disparity->size()) + " gt rasters for " +
                       std::to_string(frames.size()) + " frames");
    for (std::size_t t = 0; t < gt_disparity->size(); ++t) {
      const FloatRaster& g = (*gt_disparity)[t];
      if (g.width() != ref.width() || g.height() != ref.height() || g.channels() != 1)
        throw ShapeError("sequence: gt " + std::to_string(t) + " shape mismatch");
    }
  }
}

}  // namespace ppm
