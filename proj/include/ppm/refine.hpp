#pragma once

#include <cstdint>
#include <vector>

#include "ppm/raster.hpp"
#include "ppm/token_grid.hpp"

namespace ppm {

/// Convolutional GRU over [hidden, input] with 3x3 gates, followed by a
/// two-layer 3x3 head that emits the residual disparity.
struct GruCell {
  RowMatrix<float> wz, wr, wq;  // 9*(C_h + C_in) x C_h
  Vector<float> bz, br, bq;
  RowMatrix<float> wd1;  // 9*C_h x C_d
  Vector<float> bd1;
  RowMatrix<float> wd2;  // 9*C_d x 1
  Vector<float> bd2;

  int hidden_channels() const noexcept { return static_cast<int>(wz.cols()); }
  int input_channels() const noexcept { return static_cast<int>(wz.rows() / 9) - hidden_channels(); }

  static GruCell zeros(int input_channels, int hidden_channels = 32, int head_channels = 16);
  static GruCell seeded(int input_channels, int hidden_channels, int head_channels, std::uint64_t seed);
};

struct GruOutput {
  TokenGridf hidden;
  FloatRaster delta;  // residual disparity at grid resolution
};

/// z = sig(conv[h, x]), r = sig(conv[h, x]), q = tanh(conv[r*h, x]),
/// h' = (1 - z) h + z q, delta = conv(relu(conv h')).
GruOutput gru_step(const GruCell& cell, const TokenGridf& hidden, const TokenGridf& inputs);

/// Bilinear upsampling (pixel-centre aligned, edge clamped) to width x height;
/// values are multiplied by the horizontal upsampling factor.
FloatRaster upsample_disparity(const FloatRaster& disparity, int width, int height);

/// sum_t sum_n gamma^(N-n) mean|d_t^n - gt_t|, predictions indexed [t][n].
double disparity_loss(const std::vector<std::vector<FloatRaster>>& predictions, const std::vector<FloatRaster>& truth,
                      double gamma = 0.9);

inline double total_loss(double disparity, double confidence) { return disparity + confidence; }

}  // namespace ppm
