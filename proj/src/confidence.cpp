#include "ppm/confidence.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ppm {

FloatRaster gt_confidence(const FloatRaster& predicted, const FloatRaster& truth, double sigma) {
  if (!predicted.same_shape(truth)) throw ShapeError("gt_confidence: raster shapes differ");
  FloatRaster out(predicted.width(), predicted.height(), predicted.channels());
  auto p = predicted.data();
  auto t = truth.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i)
    o[i] = static_cast<float>(std::exp(-std::abs(static_cast<double>(p[i]) - t[i]) / sigma));
  return out;
}

std::vector<double> sequence_weights(int iterations, double gamma) {
  std::vector<double> w(iterations);
  for (int n = 1; n <= iterations; ++n) w[n - 1] = std::pow(gamma, iterations - n);
  return w;
}

double confidence_loss(const std::vector<std::vector<FloatRaster>>& maps,
                       const std::vector<std::vector<FloatRaster>>& targets, double gamma) {
  if (maps.size() != targets.size()) throw ShapeError("confidence_loss: frame count mismatch");
  double total = 0.0;
  for (std::size_t t = 0; t < maps.size(); ++t) {
    if (maps[t].size() != targets[t].size()) throw ShapeError("confidence_loss: iteration count mismatch");
    const auto weights = sequence_weights(static_cast<int>(maps[t].size()), gamma);
    for (std::size_t n = 0; n < maps[t].size(); ++n) {
      if (!maps[t][n].same_shape(targets[t][n])) throw ShapeError("confidence_loss: raster shapes differ");
      const auto u = maps[t][n].data();
      const auto g = targets[t][n].data();
      double sum = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) sum += std::abs(static_cast<double>(u[i]) - g[i]);
      total += weights[n] * sum / static_cast<double>(u.size());
    }
  }
  return total;
}

TrainResult train_head(ConfidenceHead<float> head, const std::vector<ConfidenceSample>& data, int steps, double lr) {
  if (data.empty()) throw ShapeError("train_head: empty dataset");
  TrainResult result{std::move(head), {}};
  const float scale = static_cast<float>(lr / static_cast<double>(data.size()));
  auto evaluate = [&](bool apply, int step) {
    ConfidenceGradients<float> total = ConfidenceHead<float>::zeros(result.head.in_channels(), result.head.hidden_channels());
    double loss = 0.0;
    for (const auto& sample : data) {
      auto lg = confidence_grad(result.head, sample.value, sample.target);
      loss += lg.loss;
      total.w1 += lg.grad.w1;
      total.b1 += lg.grad.b1;
      total.w2 += lg.grad.w2;
      total.b2 += lg.grad.b2;
    }
    loss /= static_cast<double>(data.size());
    if (!std::isfinite(loss)) throw NumericError("train_head: non-finite loss at step " + std::to_string(step));
    result.losses.push_back(loss);
    if (apply) {
      result.head.w1 -= scale * total.w1;
      result.head.b1 -= scale * total.b1;
      result.head.w2 -= scale * total.w2;
      result.head.b2 -= scale * total.b2;
    }
  };
  for (int step = 0; step < steps; ++step) evaluate(true, step);
  evaluate(false, steps);
  return result;
}

FloatRaster proxy_confidence(const FloatRaster& disparity, const FloatRaster& left, const FloatRaster& right,
                             double sigma_p) {
  if (!left.same_shape(right) || disparity.width() != left.width() || disparity.height() != left.height() ||
      disparity.channels() != 1)
    throw ShapeError("proxy_confidence: raster shapes differ");
  const int W = left.width(), C = left.channels();
  FloatRaster out(W, left.height(), 1);
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < W; ++x) {
      const double xs = x - static_cast<double>(disparity.at(x, y));
      if (!(xs >= 0.0) || xs > W - 1) continue;
      const int x0 = static_cast<int>(std::floor(xs));
      const double frac = xs - x0;
      double err = 0.0;
      for (int c = 0; c < C; ++c) {
        double sample = right.at(x0, y, c);
        if (frac != 0.0) sample = (1.0 - frac) * sample + frac * right.at(x0 + 1, y, c);
        err += std::abs(left.at(x, y, c) - sample);
      }
      out.at(x, y) = static_cast<float>(std::exp(-err / C / sigma_p));
    }
  }
  return out;
}

namespace {

constexpr char kHeadMagic[4] = {'P', 'P', 'M', 'C'};
constexpr std::uint32_t kHeadVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void save_head(const std::filesystem::path& path, const ConfidenceHead<float>& head) {
  std::vector<std::uint8_t> bytes(kHeadMagic, kHeadMagic + 4);
  put_u32(bytes, kHeadVersion);
  put_u32(bytes, static_cast<std::uint32_t>(head.in_channels()));
  put_u32(bytes, static_cast<std::uint32_t>(head.hidden_channels()));
  ConfidenceHead<float> copy = head;
  for (Eigen::Index i = 0; i < copy.size(); ++i) put_u32(bytes, std::bit_cast<std::uint32_t>(copy.parameter(i)));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ConfidenceHead<float> load_head(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kHeadMagic, 4) != 0)
    throw DataError(path.string() + ": not a confidence head file");
  if (get_u32(bytes.data() + 4) != kHeadVersion) throw DataError(path.string() + ": unsupported head version");
  const int channels = static_cast<int>(get_u32(bytes.data() + 8));
  const int hidden = static_cast<int>(get_u32(bytes.data() + 12));
  if (channels < 1 || hidden < 1 || channels > 4096 || hidden > 4096)
    throw DataError(path.string() + ": implausible head dimensions");
  auto head = ConfidenceHead<float>::zeros(channels, hidden);
  if (bytes.size() != 16 + 4 * static_cast<std::size_t>(head.size()))
    throw DataError(path.string() + ": parameter payload has the wrong length");
  for (Eigen::Index i = 0; i < head.size(); ++i) head.parameter(i) = std::bit_cast<float>(get_u32(bytes.data() + 16 + 4 * i));
  return head;
}

}  // namespace ppm
