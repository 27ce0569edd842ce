#include "ppm/memory.hpp"

#include "ppm/random.hpp"

namespace ppm {

std::vector<double> redundancy_regularizer(std::span<const int> counters, int frames) {
  if (frames < 1) throw ShapeError("redundancy_regularizer: frame count must be positive");
  std::vector<double> r(counters.size());
  for (std::size_t k = 0; k < counters.size(); ++k) {
    if (counters[k] < 0) throw ShapeError("redundancy_regularizer: negative counter");
    r[k] = std::exp(-static_cast<double>(counters[k]) / frames);
  }
  return r;
}

std::vector<double> relevance_score(std::span<const double> similarity, std::span<const double> redundancy) {
  if (similarity.size() != redundancy.size()) throw ShapeError("relevance_score: length mismatch");
  std::vector<double> out(similarity.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = redundancy[i] * similarity[i];
  return out;
}

std::vector<double> quality_scores(std::span<const double> confidence, std::span<const double> relevance) {
  if (confidence.size() != relevance.size()) throw ShapeError("quality_scores: length mismatch");
  std::vector<double> out(confidence.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = confidence[i] + relevance[i];
  return out;
}

std::vector<int> select_top_k(std::span<const double> scores, int k, std::span<const int> candidates) {
  if (k < 1) throw ShapeError("select_top_k: K must be >= 1");
  std::vector<int> order;
  if (candidates.empty()) {
    order.resize(scores.size());
    std::iota(order.begin(), order.end(), 0);
  } else {
    order.assign(candidates.begin(), candidates.end());
  }
  if (order.empty()) throw ShapeError("select_top_k: no candidates");
  std::sort(order.begin(), order.end());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(k)));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<double> play_weights(std::span<const double> scores, std::span<const int> indices) {
  std::vector<double> w(indices.size());
  double total = 0.0;
  for (std::size_t j = 0; j < indices.size(); ++j) {
    w[j] = std::max(scores[indices[j]], kPlayEpsilon);
    total += w[j];
  }
  for (double& v : w) v /= total;
  return w;
}

RowMatrix<double> positional_encoding(int frames, int channels) {
  RowMatrix<double> pe(frames, channels);
  for (int t = 0; t < frames; ++t) {
    for (int c = 0; c < channels; ++c) {
      const double freq = std::pow(10000.0, -static_cast<double>(c - c % 2) / channels);
      pe(t, c) = c % 2 == 0 ? std::sin(t * freq) : std::cos(t * freq);
    }
  }
  return pe;
}

std::string to_string(MemoryPolicy policy) {
  switch (policy) {
    case MemoryPolicy::kPpm: return "ppm";
    case MemoryPolicy::kFull: return "full";
    case MemoryPolicy::kLatest: return "latest";
    case MemoryPolicy::kRandom: return "random";
  }
  return "unknown";
}

MemoryPolicy parse_policy(const std::string& name) {
  for (auto p : {MemoryPolicy::kPpm, MemoryPolicy::kFull, MemoryPolicy::kLatest, MemoryPolicy::kRandom})
    if (to_string(p) == name) return p;
  throw DataError("unknown memory policy '" + name + "' (expected ppm, full, latest or random)");
}

std::vector<int> select_by_policy(MemoryPolicy policy, std::span<const double> scores, int k, int frame, int iteration,
                                  int available, std::uint64_t seed) {
  if (k < 1) throw ShapeError("select_by_policy: K must be >= 1");
  const int count = std::min(k, available);
  std::vector<int> candidates(available);
  std::iota(candidates.begin(), candidates.end(), 0);
  switch (policy) {
    case MemoryPolicy::kPpm:
      return select_top_k(scores, k, candidates);
    case MemoryPolicy::kFull:
      return candidates;
    case MemoryPolicy::kLatest: {
      // Nearest frames at or before the target first, then the ones after it.
      std::vector<int> picked;
      for (int i = std::min(frame, available - 1); i >= 0 && static_cast<int>(picked.size()) < count; --i)
        picked.push_back(i);
      for (int i = frame + 1; i < available && static_cast<int>(picked.size()) < count; ++i) picked.push_back(i);
      std::sort(picked.begin(), picked.end());
      return picked;
    }
    case MemoryPolicy::kRandom: {
      Rng rng(derive_seed(seed, {0x4a4dULL, static_cast<std::uint64_t>(frame), static_cast<std::uint64_t>(iteration)}));
      // Partial Fisher-Yates.
      for (int i = 0; i < count; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(available - i)));
        std::swap(candidates[i], candidates[j]);
      }
      candidates.resize(count);
      std::sort(candidates.begin(), candidates.end());
      return candidates;
    }
  }
  throw DataError("select_by_policy: unknown policy");
}

}  // namespace ppm
