#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

#include "ppm/raster.hpp"
#include "ppm/token_grid.hpp"

namespace ppm {

/// Downsampling factors of the three pyramid levels (scales 1/16, 1/8, 1/4).
inline constexpr std::array<int, 3> kPyramidStrides = {16, 8, 4};

/// Grid extent at downsampling factor `stride`: round(extent / stride).
inline int scaled_extent(int extent, int stride) {
  return static_cast<int>(std::lround(static_cast<double>(extent) / stride));
}

struct FeaturePyramid {
  std::array<TokenGridf, 3> levels;  // ordered as kPyramidStrides

  const TokenGridf& at_stride(int stride) const;
  TokenGridf& at_stride(int stride);
};

/// Fixed feature extractor. Channel 0 is box-downsampled intensity, 1 and 2
/// the horizontal and vertical gradients of that intensity, and the rest are
/// zero-mean seeded projections of its 3x3 neighbourhood.
class FeatureExtractor {
 public:
  FeatureExtractor(int channels, std::uint64_t seed);

  int channels() const noexcept { return channels_; }
  /// Throws ShapeError for images smaller than 16x16.
  FeaturePyramid build_pyramid(const FloatRaster& image) const;
  TokenGridf extract(const FloatRaster& image, int stride) const;

 private:
  int channels_;
  RowMatrix<float> patch_weights_;  // 9 x (channels - 3)
};

/// Area-average downsampling of a (height x width) array to round(h/s) x round(w/s).
RowArrayXXf box_downsample(const RowArrayXXf& plane, int stride);

/// Per-token C -> C linear map, out = in * W^T.
class LinearMap {
 public:
  explicit LinearMap(RowMatrix<float> weights) : weights_(std::move(weights)) {}
  static LinearMap identity(int channels);
  static LinearMap zeros(int in, int out);
  /// Uniform weights scaled by sqrt(3 / in) so unit-variance inputs stay unit variance.
  static LinearMap seeded(int in, int out, std::uint64_t seed);

  int in_channels() const noexcept { return static_cast<int>(weights_.cols()); }
  int out_channels() const noexcept { return static_cast<int>(weights_.rows()); }
  const RowMatrix<float>& weights() const noexcept { return weights_; }

  TokenGridf operator()(const TokenGridf& grid) const;

 private:
  RowMatrix<float> weights_;  // out x in
};

/// Stand-in for the learned context encoder: one fixed linear map per level.
FeaturePyramid encode_context(const FeaturePyramid& left, const LinearMap& map);

/// Query, key and value projections shared by every frame and iteration.
struct ProjectionWeights {
  std::uint64_t seed = 0;
  LinearMap query;
  LinearMap key;
  LinearMap value;

  /// With `tie_query_key` the key map equals the query map, so untrained
  /// query-key products are a positive semi-definite kernel on features.
  static ProjectionWeights seeded(int channels, std::uint64_t seed, bool tie_query_key = true);
  static ProjectionWeights identity(int channels);
};

std::pair<TokenGridf, TokenGridf> project_qk(const TokenGridf& context, const ProjectionWeights& weights);

/// phi(x): average-pooled, flattened, L2-normalized grid. `is_zero` is set
/// when the pooled vector vanishes and the normalization is undefined.
template <typename Scalar>
struct PooledDescriptor {
  int pooled_height = 0;
  int pooled_width = 0;
  Vector<Scalar> vector;
  bool is_zero = false;

  int dim() const noexcept { return static_cast<int>(vector.size()); }
};

/// Grids whose sides are not multiples of `pool_factor` are edge-replicated
/// up to the next multiple. Flattening order is (y', x', c).
template <typename Scalar>
PooledDescriptor<Scalar> pooled_phi(const TokenGrid<Scalar>& grid, int pool_factor) {
  if (pool_factor < 1) throw ShapeError("pooled_phi: pool factor must be >= 1");
  PooledDescriptor<Scalar> d;
  d.pooled_height = (grid.height + pool_factor - 1) / pool_factor;
  d.pooled_width = (grid.width + pool_factor - 1) / pool_factor;
  const int C = grid.channels();
  d.vector = Vector<Scalar>::Zero(static_cast<Eigen::Index>(d.pooled_height) * d.pooled_width * C);
  const Scalar inv_area = Scalar(1) / Scalar(pool_factor * pool_factor);
  for (int py = 0; py < d.pooled_height; ++py) {
    for (int px = 0; px < d.pooled_width; ++px) {
      auto cell = d.vector.segment((static_cast<Eigen::Index>(py) * d.pooled_width + px) * C, C);
      for (int dy = 0; dy < pool_factor; ++dy) {
        const int y = std::min(py * pool_factor + dy, grid.height - 1);
        for (int dx = 0; dx < pool_factor; ++dx) {
          const int x = std::min(px * pool_factor + dx, grid.width - 1);
          cell += grid.tokens.row(static_cast<Eigen::Index>(y) * grid.width + x).transpose();
        }
      }
      cell *= inv_area;
    }
  }
  const Scalar norm = d.vector.norm();
  if (norm == Scalar(0)) {
    d.is_zero = true;
  } else {
    d.vector /= norm;
  }
  return d;
}

}  // namespace ppm
