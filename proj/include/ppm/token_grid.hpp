#pragma once

#include <Eigen/Core>

#include <string>

#include "ppm/error.hpp"

namespace ppm {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A height x width grid of C-channel feature vectors stored token-major:
/// row y*width+x of `tokens` holds the features at (x, y).
template <typename Scalar>
struct TokenGrid {
  using Matrix = RowMatrix<Scalar>;

  int height = 0;
  int width = 0;
  int stride = 1;  // downsampling factor relative to the input image
  Matrix tokens;

  TokenGrid() = default;
  TokenGrid(int h, int w, int channels, int grid_stride = 1)
      : height(h), width(w), stride(grid_stride), tokens(Matrix::Zero(static_cast<Eigen::Index>(h) * w, channels)) {}
  TokenGrid(int h, int w, Matrix data, int grid_stride = 1)
      : height(h), width(w), stride(grid_stride), tokens(std::move(data)) {
    if (tokens.rows() != static_cast<Eigen::Index>(h) * w) throw ShapeError("token grid: row count does not match h*w");
  }

  int channels() const noexcept { return static_cast<int>(tokens.cols()); }
  int count() const noexcept { return height * width; }

  Scalar& at(int x, int y, int c) { return tokens(static_cast<Eigen::Index>(y) * width + x, c); }
  Scalar at(int x, int y, int c) const { return tokens(static_cast<Eigen::Index>(y) * width + x, c); }

  bool same_shape(const TokenGrid& other) const noexcept {
    return height == other.height && width == other.width && channels() == other.channels();
  }

  bool all_finite() const { return tokens.allFinite(); }

  template <typename Other>
  TokenGrid<Other> cast() const {
    return TokenGrid<Other>(height, width, tokens.template cast<Other>(), stride);
  }
};

using TokenGridf = TokenGrid<float>;

template <typename Scalar>
void require_same_shape(const TokenGrid<Scalar>& a, const TokenGrid<Scalar>& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": grid shapes differ (" + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + "x" + std::to_string(a.channels()) + " vs " + std::to_string(b.height) +
                     "x" + std::to_string(b.width) + "x" + std::to_string(b.channels()) + ")");
}

/// Concatenates channels of grids with equal spatial shape.
template <typename Scalar, typename... Grids>
TokenGrid<Scalar> concat_channels(const TokenGrid<Scalar>& first, const Grids&... rest) {
  const int total = first.channels() + (rest.channels() + ... + 0);
  TokenGrid<Scalar> out(first.height, first.width, total, first.stride);
  int offset = 0;
  auto place = [&](const TokenGrid<Scalar>& g) {
    if (g.height != first.height || g.width != first.width) throw ShapeError("concat_channels: spatial shapes differ");
    out.tokens.middleCols(offset, g.channels()) = g.tokens;
    offset += g.channels();
  };
  place(first);
  (place(rest), ...);
  return out;
}

}  // namespace ppm
