#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ppm/conv.hpp"
#include "ppm/error.hpp"
#include "ppm/random.hpp"
#include "ppm/raster.hpp"
#include "ppm/token_grid.hpp"

namespace ppm {

/// conv3x3(C -> C_h) -> tanh -> conv3x3(C_h -> 1) -> sigmoid, with
/// edge-replication padding. Templated so gradients can be checked in double.
template <typename Scalar>
struct ConfidenceHead {
  RowMatrix<Scalar> w1;  // 9*C x C_h
  Vector<Scalar> b1;     // C_h
  RowMatrix<Scalar> w2;  // 9*C_h x 1
  Vector<Scalar> b2;     // 1

  int in_channels() const noexcept { return static_cast<int>(w1.rows() / 9); }
  int hidden_channels() const noexcept { return static_cast<int>(w1.cols()); }

  static ConfidenceHead zeros(int channels, int hidden = 16) {
    return {RowMatrix<Scalar>::Zero(9 * channels, hidden), Vector<Scalar>::Zero(hidden),
            RowMatrix<Scalar>::Zero(9 * hidden, 1), Vector<Scalar>::Zero(1)};
  }

  static ConfidenceHead seeded(int channels, int hidden, std::uint64_t seed) {
    ConfidenceHead h = zeros(channels, hidden);
    Rng rng(derive_seed(seed, {0xc0ffULL}));
    const double b1 = std::sqrt(3.0 / (9.0 * channels)), b2 = std::sqrt(3.0 / (9.0 * hidden));
    for (Eigen::Index i = 0; i < h.w1.size(); ++i) h.w1.data()[i] = static_cast<Scalar>(rng.uniform(-b1, b1));
    for (Eigen::Index i = 0; i < h.w2.size(); ++i) h.w2.data()[i] = static_cast<Scalar>(rng.uniform(-b2, b2));
    return h;
  }

  template <typename Other>
  ConfidenceHead<Other> cast() const {
    return {w1.template cast<Other>(), b1.template cast<Other>(), w2.template cast<Other>(), b2.template cast<Other>()};
  }

  /// Number of scalar parameters.
  Eigen::Index size() const noexcept { return w1.size() + b1.size() + w2.size() + b2.size(); }

  /// Parameter by flat index in the order w1, b1, w2, b2.
  Scalar& parameter(Eigen::Index i) {
    if (i < w1.size()) return w1.data()[i];
    i -= w1.size();
    if (i < b1.size()) return b1.data()[i];
    i -= b1.size();
    if (i < w2.size()) return w2.data()[i];
    i -= w2.size();
    if (i < b2.size()) return b2.data()[i];
    throw ShapeError("confidence head: parameter index out of range");
  }
};

/// Parameter gradients share the head's layout.
template <typename Scalar>
using ConfidenceGradients = ConfidenceHead<Scalar>;

template <typename Scalar>
struct ConfidenceActivations {
  RowMatrix<Scalar> input_cols;  // im2col of v
  TokenGrid<Scalar> hidden;      // tanh output
  RowMatrix<Scalar> hidden_cols;
  TokenGrid<Scalar> confidence;  // u, one channel
};

template <typename Scalar>
ConfidenceActivations<Scalar> confidence_activations(const ConfidenceHead<Scalar>& head, const TokenGrid<Scalar>& v) {
  if (v.channels() != head.in_channels())
    throw ShapeError("confidence head: expected " + std::to_string(head.in_channels()) + " channels, got " +
                     std::to_string(v.channels()));
  ConfidenceActivations<Scalar> a;
  a.input_cols = im2col3x3(v);
  RowMatrix<Scalar> pre = a.input_cols * head.w1;
  pre.rowwise() += head.b1.transpose();
  a.hidden = TokenGrid<Scalar>(v.height, v.width, RowMatrix<Scalar>(pre.array().tanh().matrix()), v.stride);
  a.hidden_cols = im2col3x3(a.hidden);
  RowMatrix<Scalar> out = a.hidden_cols * head.w2;
  out.array() += head.b2(0);
  out = (Scalar(1) / (Scalar(1) + (-out.array()).exp())).matrix();
  a.confidence = TokenGrid<Scalar>(v.height, v.width, std::move(out), v.stride);
  return a;
}

/// Confidence map u for value embedding v (one channel, same grid).
template <typename Scalar>
TokenGrid<Scalar> confidence_forward(const ConfidenceHead<Scalar>& head, const TokenGrid<Scalar>& v) {
  return confidence_activations(head, v).confidence;
}

template <typename Scalar>
Scalar l1_mean(const TokenGrid<Scalar>& u, const FloatRaster& target) {
  if (target.width() != u.width || target.height() != u.height || target.channels() != 1)
    throw ShapeError("confidence: target raster does not match the grid");
  Scalar total = 0;
  for (int y = 0; y < u.height; ++y)
    for (int x = 0; x < u.width; ++x) total += std::abs(u.at(x, y, 0) - static_cast<Scalar>(target.at(x, y)));
  return total / static_cast<Scalar>(u.count());
}

template <typename Scalar>
struct ConfidenceLossGrad {
  Scalar loss = 0;
  ConfidenceGradients<Scalar> grad;
};

/// Analytic gradient of mean|u - target| with respect to every parameter.
/// The L1 subgradient at zero is zero.
template <typename Scalar>
ConfidenceLossGrad<Scalar> confidence_grad(const ConfidenceHead<Scalar>& head, const TokenGrid<Scalar>& v,
                                           const FloatRaster& target) {
  const auto a = confidence_activations(head, v);
  const Scalar loss = l1_mean(a.confidence, target);
  const Eigen::Index P = v.count();

  RowMatrix<Scalar> d_out(P, 1);
  for (Eigen::Index p = 0; p < P; ++p) {
    const Scalar u = a.confidence.tokens(p, 0);
    const Scalar diff = u - static_cast<Scalar>(target.data()[p]);
    const Scalar sign = diff > 0 ? Scalar(1) : (diff < 0 ? Scalar(-1) : Scalar(0));
    d_out(p, 0) = sign / static_cast<Scalar>(P) * u * (Scalar(1) - u);
  }

  ConfidenceGradients<Scalar> g;
  g.b2 = d_out.colwise().sum().transpose();
  g.w2 = a.hidden_cols.transpose() * d_out;
  const RowMatrix<Scalar> d_hidden_cols = d_out * head.w2.transpose();
  TokenGrid<Scalar> d_hidden = col2im3x3(d_hidden_cols, v.height, v.width, head.hidden_channels());
  const RowMatrix<Scalar> d_pre =
      (d_hidden.tokens.array() * (Scalar(1) - a.hidden.tokens.array().square())).matrix();
  g.b1 = d_pre.colwise().sum().transpose();
  g.w1 = a.input_cols.transpose() * d_pre;
  return {loss, std::move(g)};
}

/// u_hat = exp(-|d - d_hat| / sigma).
FloatRaster gt_confidence(const FloatRaster& predicted, const FloatRaster& truth, double sigma = 5.0);

/// sum_t sum_n gamma^(N-n) mean|u_t^n - u_hat_t^n|; indexed [t][n], n = 1..N
/// stored at position n-1.
double confidence_loss(const std::vector<std::vector<FloatRaster>>& maps,
                       const std::vector<std::vector<FloatRaster>>& targets, double gamma = 0.9);

/// gamma^(N-n) for n = 1..N.
std::vector<double> sequence_weights(int iterations, double gamma);

struct ConfidenceSample {
  TokenGridf value;
  FloatRaster target;
};

struct TrainResult {
  ConfidenceHead<float> head;
  std::vector<double> losses;  // loss before each step, then the final loss
};

/// Full-batch gradient descent on the mean per-sample L1 loss.
TrainResult train_head(ConfidenceHead<float> head, const std::vector<ConfidenceSample>& data, int steps, double lr);

/// exp(-|I_L(x, y) - I_R(x - d, y)| / sigma_p) with linear sampling along x;
/// zero where x - d falls outside the image.
FloatRaster proxy_confidence(const FloatRaster& disparity, const FloatRaster& left, const FloatRaster& right,
                             double sigma_p);

/// Flat little-endian file: "PPMC", version, C, C_h as uint32, then the
/// float parameters w1, b1, w2, b2.
void save_head(const std::filesystem::path& path, const ConfidenceHead<float>& head);
ConfidenceHead<float> load_head(const std::filesystem::path& path);

}  // namespace ppm
