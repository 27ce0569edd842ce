#pragma once

// Straight-loop reference implementations. Plain nested loops over
// std::vector<double>; nothing here calls into the library's math.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

// grid[y][x][c]
using Grid = std::vector<std::vector<std::vector<double>>>;

inline Grid make_grid(int h, int w, int c, double fill = 0.0) {
  return Grid(h, std::vector<std::vector<double>>(w, std::vector<double>(c, fill)));
}

// Average pool with edge replication, flatten (y', x', c), L2-normalize.
inline std::vector<double> phi(const Grid& g, int pool) {
  const int h = static_cast<int>(g.size()), w = static_cast<int>(g[0].size()), c = static_cast<int>(g[0][0].size());
  const int ph = (h + pool - 1) / pool, pw = (w + pool - 1) / pool;
  std::vector<double> out;
  for (int py = 0; py < ph; ++py)
    for (int px = 0; px < pw; ++px)
      for (int k = 0; k < c; ++k) {
        double s = 0.0;
        for (int dy = 0; dy < pool; ++dy)
          for (int dx = 0; dx < pool; ++dx) s += g[std::min(py * pool + dy, h - 1)][std::min(px * pool + dx, w - 1)][k];
        out.push_back(s / (pool * pool));
      }
  double n = 0.0;
  for (double v : out) n += v * v;
  n = std::sqrt(n);
  if (n > 0)
    for (double& v : out) v /= n;
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Dense attention: out[i] = sum_j softmax_j(q_i . k_j / sqrt(d)) v_j.
// Rows are tokens.
inline std::vector<std::vector<double>> attention(const std::vector<std::vector<double>>& q,
                                                  const std::vector<std::vector<double>>& k,
                                                  const std::vector<std::vector<double>>& v) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(k[0].size()));
  std::vector<std::vector<double>> out(q.size(), std::vector<double>(v[0].size(), 0.0));
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<double> logits(k.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k.size(); ++j) {
      logits[j] = dot(q[i], k[j]) * scale;
      mx = std::max(mx, logits[j]);
    }
    double z = 0.0;
    for (double& l : logits) z += (l = std::exp(l - mx));
    for (std::size_t j = 0; j < k.size(); ++j)
      for (std::size_t c = 0; c < v[0].size(); ++c) out[i][c] += logits[j] / z * v[j][c];
  }
  return out;
}

// 3x3 convolution with replicated edges; weights[o][ky][kx][c].
using Kernel = std::vector<std::vector<std::vector<std::vector<double>>>>;

inline Grid conv3x3(const Grid& in, const Kernel& w, const std::vector<double>& bias) {
  const int h = static_cast<int>(in.size()), wd = static_cast<int>(in[0].size()), c = static_cast<int>(in[0][0].size());
  Grid out = make_grid(h, wd, static_cast<int>(w.size()));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      for (std::size_t o = 0; o < w.size(); ++o) {
        double s = bias[o];
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const int sy = std::clamp(y + ky - 1, 0, h - 1), sx = std::clamp(x + kx - 1, 0, wd - 1);
            for (int k = 0; k < c; ++k) s += w[o][ky][kx][k] * in[sy][sx][k];
          }
        out[y][x][o] = s;
      }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Image rows: img[y][x] (single channel).
using Image = std::vector<std::vector<double>>;

// exp(-|L(x) - R(x - d)| / sigma) with linear interpolation; 0 out of range.
inline Image warp_confidence(const Image& d, const Image& left, const Image& right, double sigma) {
  const int h = static_cast<int>(left.size()), w = static_cast<int>(left[0].size());
  Image out(h, std::vector<double>(w, 0.0));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double xs = x - d[y][x];
      if (xs < 0 || xs > w - 1) continue;
      const int x0 = static_cast<int>(std::floor(xs));
      const int x1 = std::min(x0 + 1, w - 1);
      const double f = xs - x0;
      const double r = (1 - f) * right[y][x0] + f * right[y][x1];
      out[y][x] = std::exp(-std::abs(left[y][x] - r) / sigma);
    }
  return out;
}

// exp(-|p - g| / sigma), elementwise.
inline std::vector<double> gt_confidence(const std::vector<double>& p, const std::vector<double>& g, double sigma) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::exp(-std::abs(p[i] - g[i]) / sigma);
  return out;
}

// R[k] = exp(-t_k / T) and S^r = R * sim.
inline std::vector<double> relevance(const std::vector<int>& counters, const std::vector<double>& sim, int frames,
                                     std::vector<double>* redundancy = nullptr) {
  std::vector<double> r(counters.size()), out(counters.size());
  for (std::size_t k = 0; k < counters.size(); ++k) {
    r[k] = std::exp(-static_cast<double>(counters[k]) / frames);
    out[k] = r[k] * sim[k];
  }
  if (redundancy) *redundancy = r;
  return out;
}

// Normalized scores of the picked frames, each floored at eps.
inline std::vector<double> play_weights(const std::vector<double>& scores, const std::vector<int>& picked, double eps) {
  double z = 0;
  for (int i : picked) z += std::max(scores[i], eps);
  std::vector<double> out;
  for (int i : picked) out.push_back(std::max(scores[i], eps) / z);
  return out;
}

// Keys of picked frame j, token rows: w_j * k + pe[frame_j].
inline std::vector<std::vector<double>> modulate_keys(const std::vector<std::vector<std::vector<double>>>& keys,
                                                      const std::vector<int>& picked, const std::vector<double>& w,
                                                      const std::vector<std::vector<double>>& pe) {
  std::vector<std::vector<double>> out;
  for (std::size_t j = 0; j < picked.size(); ++j)
    for (const auto& row : keys[picked[j]]) {
      std::vector<double> r(row.size());
      for (std::size_t c = 0; c < row.size(); ++c) r[c] = w[j] * row[c] + pe[picked[j]][c];
      out.push_back(r);
    }
  return out;
}

// Flat per-frame pixel vectors.
using Seq = std::vector<std::vector<double>>;

inline double epe(const std::vector<double>& p, const std::vector<double>& g) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - g[i]);
  return s / p.size();
}

inline double bad_rate(const std::vector<double>& p, const std::vector<double>& g, double n) {
  int bad = 0;
  for (std::size_t i = 0; i < p.size(); ++i) bad += std::abs(p[i] - g[i]) > n;
  return static_cast<double>(bad) / p.size();
}

inline double tepe(const Seq& p, const Seq& g) {
  double s = 0;
  int count = 0;
  for (std::size_t t = 0; t + 1 < p.size(); ++t)
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      s += std::abs((p[t + 1][i] - p[t][i]) - (g[t + 1][i] - g[t][i]));
      ++count;
    }
  return s / count;
}

inline double temporal_bad_rate(const Seq& p, const Seq& g, double n) {
  int bad = 0;
  const std::size_t pixels = p[0].size();
  for (std::size_t i = 0; i < pixels; ++i) {
    double s = 0;
    for (std::size_t t = 0; t + 1 < p.size(); ++t) s += std::abs((p[t + 1][i] - p[t][i]) - (g[t + 1][i] - g[t][i]));
    bad += s / (p.size() - 1) > n;
  }
  return static_cast<double>(bad) / pixels;
}

}  // namespace oracle
