#include "ppm/features.hpp"

#include <string>

#include "ppm/conv.hpp"
#include "ppm/random.hpp"

namespace ppm {

const TokenGridf& FeaturePyramid::at_stride(int stride) const {
  for (std::size_t i = 0; i < kPyramidStrides.size(); ++i)
    if (kPyramidStrides[i] == stride) return levels[i];
  throw ShapeError("pyramid: no level with stride " + std::to_string(stride));
}

TokenGridf& FeaturePyramid::at_stride(int stride) {
  return const_cast<TokenGridf&>(std::as_const(*this).at_stride(stride));
}

RowArrayXXf box_downsample(const RowArrayXXf& plane, int stride) {
  const int h = static_cast<int>(plane.rows()), w = static_cast<int>(plane.cols());
  const int oh = scaled_extent(h, stride), ow = scaled_extent(w, stride);
  RowArrayXXf out(oh, ow);
  for (int oy = 0; oy < oh; ++oy) {
    const int y0 = static_cast<int>(static_cast<long>(oy) * h / oh);
    const int y1 = static_cast<int>(static_cast<long>(oy + 1) * h / oh);
    for (int ox = 0; ox < ow; ++ox) {
      const int x0 = static_cast<int>(static_cast<long>(ox) * w / ow);
      const int x1 = static_cast<int>(static_cast<long>(ox + 1) * w / ow);
      out(oy, ox) = plane.block(y0, x0, y1 - y0, x1 - x0).mean();
    }
  }
  return out;
}

FeatureExtractor::FeatureExtractor(int channels, std::uint64_t seed) : channels_(channels) {
  if (channels < 4) throw ShapeError("features: need at least 4 channels");
  Rng rng(derive_seed(seed, {0xfea7ULL}));
  patch_weights_.resize(9, channels - 3);
  for (int j = 0; j < channels - 3; ++j) {
    for (int i = 0; i < 9; ++i) patch_weights_(i, j) = static_cast<float>(rng.uniform(-1.0, 1.0));
    patch_weights_.col(j).array() -= patch_weights_.col(j).mean();
  }
}

TokenGridf FeatureExtractor::extract(const FloatRaster& image, int stride) const {
  if (image.width() < 16 || image.height() < 16)
    throw ShapeError("features: image " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                     " is smaller than 16x16");
  const RowArrayXXf small = box_downsample(image.intensity(), stride);
  const int h = static_cast<int>(small.rows()), w = static_cast<int>(small.cols());

  TokenGridf intensity(h, w, 1, stride);
  Eigen::Map<RowArrayXXf>(intensity.tokens.data(), h, w) = small;

  TokenGridf grid(h, w, channels_, stride);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
      grid.at(x, y, 0) = small(y, x);
      grid.at(x, y, 1) = xr > xl ? (small(y, xr) - small(y, xl)) / static_cast<float>(xr - xl) : 0.0f;
      grid.at(x, y, 2) = yd > yu ? (small(yd, x) - small(yu, x)) / static_cast<float>(yd - yu) : 0.0f;
    }
  }
  grid.tokens.rightCols(channels_ - 3) = im2col3x3(intensity) * patch_weights_;
  return grid;
}

FeaturePyramid FeatureExtractor::build_pyramid(const FloatRaster& image) const {
  FeaturePyramid p;
  for (std::size_t i = 0; i < kPyramidStrides.size(); ++i) p.levels[i] = extract(image, kPyramidStrides[i]);
  return p;
}

LinearMap LinearMap::identity(int channels) { return LinearMap(RowMatrix<float>::Identity(channels, channels)); }

LinearMap LinearMap::zeros(int in, int out) { return LinearMap(RowMatrix<float>::Zero(out, in)); }

LinearMap LinearMap::seeded(int in, int out, std::uint64_t seed) {
  Rng rng(seed);
  const double bound = std::sqrt(3.0 / in);
  RowMatrix<float> w(out, in);
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<float>(rng.uniform(-bound, bound));
  return LinearMap(std::move(w));
}

TokenGridf LinearMap::operator()(const TokenGridf& grid) const {
  if (grid.channels() != in_channels())
    throw ShapeError("linear map: expected " + std::to_string(in_channels()) + " channels, got " +
                     std::to_string(grid.channels()));
  return TokenGridf(grid.height, grid.width, grid.tokens * weights_.transpose(), grid.stride);
}

FeaturePyramid encode_context(const FeaturePyramid& left, const LinearMap& map) {
  FeaturePyramid out;
  for (std::size_t i = 0; i < left.levels.size(); ++i) out.levels[i] = map(left.levels[i]);
  return out;
}

ProjectionWeights ProjectionWeights::seeded(int channels, std::uint64_t seed, bool tie_query_key) {
  LinearMap query = LinearMap::seeded(channels, channels, derive_seed(seed, {0x9ULL}));
  LinearMap key = tie_query_key ? query : LinearMap::seeded(channels, channels, derive_seed(seed, {0xbULL}));
  return {seed, std::move(query), std::move(key), LinearMap::seeded(channels, channels, derive_seed(seed, {0x5ULL}))};
}

ProjectionWeights ProjectionWeights::identity(int channels) {
  return {0, LinearMap::identity(channels), LinearMap::identity(channels), LinearMap::identity(channels)};
}

std::pair<TokenGridf, TokenGridf> project_qk(const TokenGridf& context, const ProjectionWeights& weights) {
  return {weights.query(context), weights.key(context)};
}

}  // namespace ppm
