#pragma once

#include "ppm/features.hpp"
#include "ppm/raster.hpp"
#include "ppm/token_grid.hpp"

namespace ppm {

/// corr(x, y, d) = <f_L(x, y), f_R(x - d, y)> / sqrt(C) for d in [0, D);
/// entries with x - d < 0 are zero. Row y*width+x of `data` holds all d.
struct CorrelationVolume {
  int height = 0;
  int width = 0;
  int stride = 1;
  RowMatrix<float> data;

  int max_disparity() const noexcept { return static_cast<int>(data.cols()); }
  float at(int x, int y, int d) const { return data(static_cast<Eigen::Index>(y) * width + x, d); }
};

CorrelationVolume build_correlation(const TokenGridf& left, const TokenGridf& right, int max_disparity);

/// Samples the volume at d in [disp - radius, disp + radius] (unit steps,
/// linear interpolation along d, zero outside [0, D)). `disparity` is a
/// single-channel raster at the volume's resolution. Output has 2r+1 channels.
TokenGridf lookup(const CorrelationVolume& volume, const FloatRaster& disparity, int radius);

/// Per-token argmax over d, lowest d on ties.
FloatRaster winner_take_all(const CorrelationVolume& volume);

struct CostFeature {
  TokenGridf cost;   // F_cost
  TokenGridf value;  // v_t
};

/// F_cost = cost_map(volume), v_t = value_map(F_cost).
CostFeature encode_cost(const CorrelationVolume& volume, const LinearMap& cost_map, const LinearMap& value_map);

}  // namespace ppm
