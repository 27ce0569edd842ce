#include "ppm/refine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ppm/confidence.hpp"
#include "ppm/conv.hpp"
#include "ppm/error.hpp"
#include "ppm/random.hpp"

namespace ppm {
namespace {

RowMatrix<float> uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  RowMatrix<float> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.uniform(-bound, bound));
  return m;
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  return 1.0f / (1.0f + (-x).exp());
}

}  // namespace

GruCell GruCell::zeros(int input_channels, int hidden_channels, int head_channels) {
  const int gate_in = 9 * (hidden_channels + input_channels);
  GruCell c;
  c.wz = c.wr = c.wq = RowMatrix<float>::Zero(gate_in, hidden_channels);
  c.bz = c.br = c.bq = Vector<float>::Zero(hidden_channels);
  c.wd1 = RowMatrix<float>::Zero(9 * hidden_channels, head_channels);
  c.bd1 = Vector<float>::Zero(head_channels);
  c.wd2 = RowMatrix<float>::Zero(9 * head_channels, 1);
  c.bd2 = Vector<float>::Zero(1);
  return c;
}

GruCell GruCell::seeded(int input_channels, int hidden_channels, int head_channels, std::uint64_t seed) {
  GruCell c = zeros(input_channels, hidden_channels, head_channels);
  Rng rng(derive_seed(seed, {0x6a0ULL}));
  const int gate_in = 9 * (hidden_channels + input_channels);
  const double gate_bound = std::sqrt(3.0 / gate_in);
  c.wz = uniform_matrix(rng, gate_in, hidden_channels, gate_bound);
  c.wr = uniform_matrix(rng, gate_in, hidden_channels, gate_bound);
  c.wq = uniform_matrix(rng, gate_in, hidden_channels, gate_bound);
  c.wd1 = uniform_matrix(rng, 9 * hidden_channels, head_channels, std::sqrt(3.0 / (9.0 * hidden_channels)));
  // Small output layer keeps untrained residuals to a fraction of a pixel.
  c.wd2 = uniform_matrix(rng, 9 * head_channels, 1, 0.1 * std::sqrt(3.0 / (9.0 * head_channels)));
  return c;
}

GruOutput gru_step(const GruCell& cell, const TokenGridf& hidden, const TokenGridf& inputs) {
  if (hidden.channels() != cell.hidden_channels() || inputs.channels() != cell.input_channels())
    throw ShapeError("gru_step: expected " + std::to_string(cell.hidden_channels()) + " hidden and " +
                     std::to_string(cell.input_channels()) + " input channels, got " +
                     std::to_string(hidden.channels()) + " and " + std::to_string(inputs.channels()));
  if (hidden.height != inputs.height || hidden.width != inputs.width) throw ShapeError("gru_step: grid mismatch");

  const TokenGridf hx = concat_channels(hidden, inputs);
  const RowMatrix<float> hx_cols = im2col3x3(hx);
  RowMatrix<float> z_pre = hx_cols * cell.wz;
  z_pre.rowwise() += cell.bz.transpose();
  RowMatrix<float> r_pre = hx_cols * cell.wr;
  r_pre.rowwise() += cell.br.transpose();
  const auto z = sigmoid(z_pre.array()).eval();
  const auto r = sigmoid(r_pre.array()).eval();

  TokenGridf rh = hidden;
  rh.tokens = (r * hidden.tokens.array()).matrix();
  const TokenGridf q_in = concat_channels(rh, inputs);
  RowMatrix<float> q_pre = im2col3x3(q_in) * cell.wq;
  q_pre.rowwise() += cell.bq.transpose();
  const auto q = q_pre.array().tanh().eval();

  TokenGridf next = hidden;
  next.tokens = ((1.0f - z) * hidden.tokens.array() + z * q).matrix();

  TokenGridf mid = conv3x3(next, cell.wd1, cell.bd1);
  mid.tokens = mid.tokens.cwiseMax(0.0f);
  const TokenGridf delta = conv3x3(mid, cell.wd2, cell.bd2);

  FloatRaster d(hidden.width, hidden.height, 1);
  std::copy(delta.tokens.data(), delta.tokens.data() + delta.tokens.size(), d.data().begin());
  return {std::move(next), std::move(d)};
}

FloatRaster upsample_disparity(const FloatRaster& disparity, int width, int height) {
  const int sw = disparity.width(), sh = disparity.height();
  if (sw < 1 || sh < 1 || disparity.channels() != 1) throw ShapeError("upsample_disparity: invalid input raster");
  const double fx = static_cast<double>(width) / sw, fy = static_cast<double>(height) / sh;
  FloatRaster out(width, height, 1);
  for (int y = 0; y < height; ++y) {
    const double sy = std::clamp((y + 0.5) / fy - 0.5, 0.0, static_cast<double>(sh - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, sh - 1);
    const double wy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = std::clamp((x + 0.5) / fx - 0.5, 0.0, static_cast<double>(sw - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, sw - 1);
      const double wx = sx - x0;
      const double top = (1.0 - wx) * disparity.at(x0, y0) + wx * disparity.at(x1, y0);
      const double bottom = (1.0 - wx) * disparity.at(x0, y1) + wx * disparity.at(x1, y1);
      out.at(x, y) = static_cast<float>(fx * ((1.0 - wy) * top + wy * bottom));
    }
  }
  return out;
}

double disparity_loss(const std::vector<std::vector<FloatRaster>>& predictions, const std::vector<FloatRaster>& truth,
                      double gamma) {
  if (truth.size() != predictions.size())
    throw DataError("disparity_loss: ground truth missing for " + std::to_string(predictions.size() - truth.size()) +
                    " frames");
  double total = 0.0;
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    const auto weights = sequence_weights(static_cast<int>(predictions[t].size()), gamma);
    for (std::size_t n = 0; n < predictions[t].size(); ++n) {
      const FloatRaster& d = predictions[t][n];
      if (!d.same_shape(truth[t])) throw ShapeError("disparity_loss: prediction and gt shapes differ");
      double sum = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) sum += std::abs(static_cast<double>(d.data()[i]) - truth[t].data()[i]);
      total += weights[n] * sum / static_cast<double>(d.size());
    }
  }
  return total;
}

}  // namespace ppm
