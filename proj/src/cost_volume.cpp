#include "ppm/cost_volume.hpp"

#include <cmath>
#include <string>

namespace ppm {

CorrelationVolume build_correlation(const TokenGridf& left, const TokenGridf& right, int max_disparity) {
  require_same_shape(left, right, "build_correlation");
  if (max_disparity < 1 || max_disparity > left.width)
    throw ShapeError("build_correlation: max disparity " + std::to_string(max_disparity) + " outside [1, " +
                     std::to_string(left.width) + "]");
  const int H = left.height, W = left.width;
  CorrelationVolume vol{H, W, left.stride, RowMatrix<float>::Zero(static_cast<Eigen::Index>(H) * W, max_disparity)};
  const float inv_sqrt_c = 1.0f / std::sqrt(static_cast<float>(left.channels()));
  for (int y = 0; y < H; ++y) {
    const auto l = left.tokens.middleRows(static_cast<Eigen::Index>(y) * W, W);
    const auto r = right.tokens.middleRows(static_cast<Eigen::Index>(y) * W, W);
    const RowMatrix<float> dots = l * r.transpose();  // dots(x, x') = <f_L(x), f_R(x')>
    for (int x = 0; x < W; ++x)
      for (int d = 0; d < max_disparity && d <= x; ++d)
        vol.data(static_cast<Eigen::Index>(y) * W + x, d) = dots(x, x - d) * inv_sqrt_c;
  }
  return vol;
}

TokenGridf lookup(const CorrelationVolume& volume, const FloatRaster& disparity, int radius) {
  if (disparity.width() != volume.width || disparity.height() != volume.height || disparity.channels() != 1)
    throw ShapeError("lookup: disparity raster does not match the volume grid");
  if (radius < 0) throw ShapeError("lookup: negative radius");
  const int D = volume.max_disparity();
  TokenGridf out(volume.height, volume.width, 2 * radius + 1, volume.stride);
  auto sample = [&](Eigen::Index row, int d) { return d >= 0 && d < D ? volume.data(row, d) : 0.0f; };
  for (int y = 0; y < volume.height; ++y) {
    for (int x = 0; x < volume.width; ++x) {
      const Eigen::Index row = static_cast<Eigen::Index>(y) * volume.width + x;
      const float disp = disparity.at(x, y);
      for (int o = -radius; o <= radius; ++o) {
        const float d = disp + static_cast<float>(o);
        const float base = std::floor(d);
        const float frac = d - base;
        const int d0 = static_cast<int>(base);
        float v = sample(row, d0);
        if (frac != 0.0f) v = (1.0f - frac) * v + frac * sample(row, d0 + 1);
        out.tokens(row, o + radius) = v;
      }
    }
  }
  return out;
}

FloatRaster winner_take_all(const CorrelationVolume& volume) {
  FloatRaster out(volume.width, volume.height, 1);
  for (int y = 0; y < volume.height; ++y) {
    for (int x = 0; x < volume.width; ++x) {
      Eigen::Index best = 0;
      // Only d <= x has a valid match.
      const int valid = std::min(volume.max_disparity(), x + 1);
      volume.data.row(static_cast<Eigen::Index>(y) * volume.width + x).head(valid).maxCoeff(&best);
      out.at(x, y) = static_cast<float>(best);
    }
  }
  return out;
}

CostFeature encode_cost(const CorrelationVolume& volume, const LinearMap& cost_map, const LinearMap& value_map) {
  if (cost_map.in_channels() != volume.max_disparity())
    throw ShapeError("encode_cost: cost map expects " + std::to_string(cost_map.in_channels()) + " disparities, volume has " +
                     std::to_string(volume.max_disparity()));
  TokenGridf raw(volume.height, volume.width, volume.data, volume.stride);
  TokenGridf cost = cost_map(raw);
  TokenGridf value = value_map(cost);
  return {std::move(cost), std::move(value)};
}

}  // namespace ppm
