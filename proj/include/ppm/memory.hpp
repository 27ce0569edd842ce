#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ppm/error.hpp"
#include "ppm/features.hpp"
#include "ppm/token_grid.hpp"

namespace ppm {

/// Keys and values of every frame in the clip; L = T * sH * sW tokens.
template <typename Scalar>
struct VanillaMemory {
  std::vector<TokenGrid<Scalar>> keys;
  std::vector<TokenGrid<Scalar>> values;

  int frames() const noexcept { return static_cast<int>(keys.size()); }
  int tokens_per_frame() const noexcept { return keys.empty() ? 0 : keys.front().count(); }
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(frames()) * tokens_per_frame(); }
};

template <typename Scalar>
VanillaMemory<Scalar> init_vanilla_memory(std::vector<TokenGrid<Scalar>> keys, std::vector<TokenGrid<Scalar>> values) {
  if (keys.empty()) throw ShapeError("vanilla memory: no frames");
  if (keys.size() != values.size()) throw ShapeError("vanilla memory: key and value counts differ");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    require_same_shape(keys[i], keys.front(), "vanilla memory keys");
    if (values[i].height != keys[i].height || values[i].width != keys[i].width ||
        values[i].channels() != values.front().channels())
      throw ShapeError("vanilla memory: value grid " + std::to_string(i) + " has a different shape");
  }
  return {std::move(keys), std::move(values)};
}

/// The K picked frames. Keys/values are the frame grids concatenated in
/// ascending frame order, L' = K * sH * sW rows. `weights` are the play
/// weights over `indices` (empty until set).
template <typename Scalar>
struct DynamicMemory {
  std::vector<int> indices;
  RowMatrix<Scalar> keys;
  RowMatrix<Scalar> values;
  std::vector<double> weights;
  int tokens_per_frame = 0;

  int frames() const noexcept { return static_cast<int>(indices.size()); }
  Eigen::Index size() const noexcept { return keys.rows(); }
};

/// Concatenates the listed frames (already sorted ascending).
template <typename Scalar>
DynamicMemory<Scalar> gather_frames(const VanillaMemory<Scalar>& memory, std::vector<int> indices) {
  DynamicMemory<Scalar> dyn;
  dyn.tokens_per_frame = memory.tokens_per_frame();
  const Eigen::Index n = dyn.tokens_per_frame;
  dyn.keys.resize(n * static_cast<Eigen::Index>(indices.size()), memory.keys.front().channels());
  dyn.values.resize(n * static_cast<Eigen::Index>(indices.size()), memory.values.front().channels());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const int i = indices[j];
    if (i < 0 || i >= memory.frames()) throw ShapeError("gather_frames: index " + std::to_string(i) + " out of range");
    dyn.keys.middleRows(static_cast<Eigen::Index>(j) * n, n) = memory.keys[i].tokens;
    dyn.values.middleRows(static_cast<Eigen::Index>(j) * n, n) = memory.values[i].tokens;
  }
  dyn.indices = std::move(indices);
  return dyn;
}

/// sim[i] = <phi(q), phi(k_i)>; 0 when either descriptor is all-zero.
template <typename Scalar>
std::vector<double> similarity_score(const TokenGrid<Scalar>& query, const VanillaMemory<Scalar>& memory, int pool_factor) {
  if (memory.frames() == 0) throw ShapeError("similarity_score: empty memory");
  require_same_shape(query, memory.keys.front(), "similarity_score");
  const auto q = pooled_phi(query, pool_factor);
  std::vector<double> sim(memory.frames(), 0.0);
  if (q.is_zero) return sim;
  for (int i = 0; i < memory.frames(); ++i) {
    const auto k = pooled_phi(memory.keys[i], pool_factor);
    if (!k.is_zero) sim[i] = std::clamp(static_cast<double>(q.vector.dot(k.vector)), -1.0, 1.0);
  }
  return sim;
}

/// R[k] = exp(-t_k / T).
std::vector<double> redundancy_regularizer(std::span<const int> counters, int frames);
/// S^r = R * sim, elementwise.
std::vector<double> relevance_score(std::span<const double> similarity, std::span<const double> redundancy);
/// S = S^c + S^r, elementwise.
std::vector<double> quality_scores(std::span<const double> confidence, std::span<const double> relevance);

/// Indices of the K largest scores among `candidates` (all frames when
/// empty), ties to the lower index, returned ascending.
std::vector<int> select_top_k(std::span<const double> scores, int k, std::span<const int> candidates = {});

/// Top-K pick: selects, increments the picked frames' counters and gathers
/// their keys/values. Play weights are left unset.
template <typename Scalar>
DynamicMemory<Scalar> pick_topk(const VanillaMemory<Scalar>& memory, std::span<const double> scores, int k,
                                std::vector<int>& counters) {
  if (memory.frames() == 0) throw ShapeError("pick_topk: empty memory");
  if (static_cast<int>(scores.size()) != memory.frames() || static_cast<int>(counters.size()) != memory.frames())
    throw ShapeError("pick_topk: score/counter length does not match the memory");
  auto indices = select_top_k(scores, k);
  for (int i : indices) ++counters[i];
  return gather_frames(memory, std::move(indices));
}

inline constexpr double kPlayEpsilon = 1e-6;

/// S_bar[i] = max(S[i], eps) / sum_j max(S[j], eps) over the picked frames.
std::vector<double> play_weights(std::span<const double> scores, std::span<const int> indices);

/// Sinusoidal encodings for frame positions 0..frames-1, one row per frame.
RowMatrix<double> positional_encoding(int frames, int channels);

/// Query plus its frame's encoding; each picked key block scaled by its play
/// weight, then shifted by the encoding of its original frame index.
template <typename Scalar>
std::pair<TokenGrid<Scalar>, DynamicMemory<Scalar>> modulate(const TokenGrid<Scalar>& query, int frame,
                                                             const DynamicMemory<Scalar>& dyn,
                                                             const RowMatrix<double>& encodings) {
  const int C = query.channels();
  if (encodings.cols() != C || dyn.keys.cols() != C) throw ShapeError("modulate: channel mismatch");
  if (dyn.weights.size() != dyn.indices.size()) throw ShapeError("modulate: play weights not set");
  auto check = [&](int i) {
    if (i < 0 || i >= encodings.rows())
      throw ShapeError("modulate: frame " + std::to_string(i) + " outside the encoding table of " +
                       std::to_string(encodings.rows()));
  };
  check(frame);
  TokenGrid<Scalar> q = query;
  q.tokens.rowwise() += encodings.row(frame).template cast<Scalar>();
  DynamicMemory<Scalar> out = dyn;
  const Eigen::Index n = dyn.tokens_per_frame;
  for (std::size_t j = 0; j < dyn.indices.size(); ++j) {
    check(dyn.indices[j]);
    auto block = out.keys.middleRows(static_cast<Eigen::Index>(j) * n, n);
    block *= static_cast<Scalar>(dyn.weights[j]);
    block.rowwise() += encodings.row(dyn.indices[j]).template cast<Scalar>();
  }
  return {std::move(q), std::move(out)};
}

/// Row-wise softmax(q k^T / sqrt(D_k)) with max subtraction.
template <typename Scalar>
RowMatrix<Scalar> attention_weights(const RowMatrix<Scalar>& queries, const RowMatrix<Scalar>& keys) {
  RowMatrix<Scalar> logits = (queries * keys.transpose()) / std::sqrt(static_cast<Scalar>(keys.cols()));
  if (!logits.allFinite()) throw NumericError("read_out: non-finite attention logits");
  logits.colwise() -= logits.rowwise().maxCoeff();
  logits = logits.array().exp().matrix();
  logits.array().colwise() /= logits.rowwise().sum().array();
  return logits;
}

/// F_agg = F_cost + alpha * softmax(q k'^T / sqrt(D_k)) v'. Exactly F_cost
/// when alpha is zero.
template <typename Scalar>
TokenGrid<Scalar> read_out(const TokenGrid<Scalar>& query, const DynamicMemory<Scalar>& dyn,
                           const TokenGrid<Scalar>& cost, Scalar alpha) {
  if (alpha == Scalar(0)) return cost;
  if (query.channels() != dyn.keys.cols()) throw ShapeError("read_out: query/key channel mismatch");
  if (dyn.values.cols() != cost.channels() || query.count() != cost.count())
    throw ShapeError("read_out: value/cost shape mismatch");
  if (dyn.size() == 0) throw ShapeError("read_out: empty dynamic memory");
  TokenGrid<Scalar> out = cost;
  out.tokens.noalias() += alpha * (attention_weights(query.tokens, dyn.keys) * dyn.values);
  return out;
}

/// Frame-selection rule for the dynamic buffer.
enum class MemoryPolicy { kPpm, kFull, kLatest, kRandom };

std::string to_string(MemoryPolicy policy);
MemoryPolicy parse_policy(const std::string& name);

/// Per-frame QAM scores for one (t, n) step.
struct QualityState {
  std::vector<double> confidence;  // S^c
  std::vector<double> similarity;  // sim
  std::vector<double> redundancy;  // R
  std::vector<double> relevance;   // S^r
  std::vector<double> quality;     // S
  std::vector<int> counters;       // t_k after this step's pick
};

struct QamConfig {
  int k = 5;
  int pool_factor = 4;
  MemoryPolicy policy = MemoryPolicy::kPpm;
  bool play = true;  // false: no weighting or encodings on the picked entries
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct QamResult {
  QualityState state;
  TokenGrid<Scalar> query;       // modulated
  DynamicMemory<Scalar> memory;  // keys modulated, weights set
};

/// Frames picked by a non-scoring policy for target `frame` at iteration `iteration`.
std::vector<int> select_by_policy(MemoryPolicy policy, std::span<const double> scores, int k, int frame,
                                  int iteration, int available, std::uint64_t seed);

/// One memory pick-and-play step for target frame `frame`: scores every
/// frame, picks among the first `available` frames, updates `counters`,
/// derives play weights and modulates query and keys.
template <typename Scalar>
QamResult<Scalar> qam_step(const TokenGrid<Scalar>& query, int frame, int iteration, const VanillaMemory<Scalar>& memory,
                           std::span<const double> confidence, std::vector<int>& counters, int available,
                           const RowMatrix<double>& encodings, const QamConfig& config) {
  const int T = memory.frames();
  if (static_cast<int>(confidence.size()) != T || static_cast<int>(counters.size()) != T)
    throw ShapeError("qam_step: confidence/counter length does not match the memory");
  if (available < 1 || available > T) throw ShapeError("qam_step: available frame count out of range");

  QualityState s;
  s.confidence.assign(confidence.begin(), confidence.end());
  s.similarity = similarity_score(query, memory, config.pool_factor);
  s.redundancy = redundancy_regularizer(counters, T);
  s.relevance = relevance_score(s.similarity, s.redundancy);
  s.quality = quality_scores(s.confidence, s.relevance);

  auto indices = select_by_policy(config.policy, s.quality, config.k, frame, iteration, available, config.seed);
  for (int i : indices) ++counters[i];
  s.counters = counters;

  DynamicMemory<Scalar> dyn = gather_frames(memory, std::move(indices));
  if (!config.play) {
    dyn.weights.assign(dyn.indices.size(), 1.0 / static_cast<double>(dyn.indices.size()));
    return {std::move(s), query, std::move(dyn)};
  }
  dyn.weights = play_weights(s.quality, dyn.indices);
  auto [q, modulated] = modulate(query, frame, dyn, encodings);
  return {std::move(s), std::move(q), std::move(modulated)};
}

}  // namespace ppm
