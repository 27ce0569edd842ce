#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppm/raster.hpp"

namespace ppm {

// A pixel is valid where the ground truth is finite.

/// Mean |d - gt| over valid pixels.
double epe(const FloatRaster& pred, const FloatRaster& gt);
/// Fraction of valid pixels with |d - gt| > n.
double delta_npx(const FloatRaster& pred, const FloatRaster& gt, double n);

/// How per-pixel temporal errors are thresholded for delta^t.
enum class TemporalAggregation {
  kPixelMean,     // temporal mean per pixel, then threshold
  kPerTransition  // threshold every (pixel, t) pair
};

/// Mean over t in [0, T-1) and valid pixels of |(d_{t+1} - d_t) - (gt_{t+1} - gt_t)|.
double tepe(std::span<const FloatRaster> pred, std::span<const FloatRaster> gt);
double delta_t_npx(std::span<const FloatRaster> pred, std::span<const FloatRaster> gt, double n,
                   TemporalAggregation aggregation = TemporalAggregation::kPixelMean);

struct MetricsReport {
  int frames = 0;
  double epe = 0.0;
  std::map<double, double> delta_npx;
  double tepe = 0.0;
  std::map<double, double> delta_t_npx;
  std::size_t valid_pixels = 0;
  std::size_t valid_temporal_pixels = 0;
};

/// Pools EPE and delta over every frame; temporal metrics need T >= 2 and
/// are left at zero otherwise.
MetricsReport evaluate_sequence(std::span<const FloatRaster> pred, std::span<const FloatRaster> gt,
                                const std::vector<double>& thresholds = {1.0, 3.0},
                                TemporalAggregation aggregation = TemporalAggregation::kPixelMean);

nlohmann::json report_to_json(const MetricsReport& report);
/// Aligned two-column text table.
std::string report_table(const MetricsReport& report);

}  // namespace ppm
