#pragma once

#include <algorithm>

#include "ppm/token_grid.hpp"

namespace ppm {

// 3x3 convolutions over token grids with edge-replication padding, written as
// im2col followed by a dense product. Column layout of the patch matrix and
// row layout of the weight matrix: (ky * 3 + kx) * C + c.

template <typename Scalar>
RowMatrix<Scalar> im2col3x3(const TokenGrid<Scalar>& grid) {
  const int C = grid.channels();
  RowMatrix<Scalar> cols(grid.count(), 9 * C);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const Eigen::Index row = static_cast<Eigen::Index>(y) * grid.width + x;
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = std::clamp(y + ky - 1, 0, grid.height - 1);
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = std::clamp(x + kx - 1, 0, grid.width - 1);
          cols.row(row).segment((ky * 3 + kx) * C, C) =
              grid.tokens.row(static_cast<Eigen::Index>(sy) * grid.width + sx);
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col3x3: scatters patch-matrix gradients back onto the grid.
template <typename Scalar>
TokenGrid<Scalar> col2im3x3(const RowMatrix<Scalar>& cols, int height, int width, int channels) {
  TokenGrid<Scalar> grid(height, width, channels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Index row = static_cast<Eigen::Index>(y) * width + x;
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = std::clamp(y + ky - 1, 0, height - 1);
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = std::clamp(x + kx - 1, 0, width - 1);
          grid.tokens.row(static_cast<Eigen::Index>(sy) * width + sx) +=
              cols.row(row).segment((ky * 3 + kx) * channels, channels);
        }
      }
    }
  }
  return grid;
}

/// Weights are (9*C_in) x C_out, bias has C_out entries.
template <typename Scalar>
TokenGrid<Scalar> conv3x3(const TokenGrid<Scalar>& input, const RowMatrix<Scalar>& weights, const Vector<Scalar>& bias) {
  if (weights.rows() != 9 * input.channels() || weights.cols() != bias.size())
    throw ShapeError("conv3x3: weight shape does not match input channels");
  RowMatrix<Scalar> out = im2col3x3(input) * weights;
  out.rowwise() += bias.transpose();
  return TokenGrid<Scalar>(input.height, input.width, std::move(out), input.stride);
}

}  // namespace ppm
