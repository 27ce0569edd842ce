#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ppm/confidence.hpp"
#include "ppm/cost_volume.hpp"
#include "ppm/features.hpp"
#include "ppm/memory.hpp"
#include "ppm/raster.hpp"
#include "ppm/refine.hpp"

namespace ppm {

enum class CounterMode { kReset, kPersist };
enum class MemoryMode { kOffline, kCausal };
enum class ConfidenceSource { kProxy, kHead };

struct PipelineConfig {
  int channels = 32;
  int gru_hidden = 32;
  int gru_head = 16;
  int confidence_hidden = 16;
  int stride = 4;          // memory and refinement run at scale 1/stride
  int max_disparity = 0;   // at grid resolution; 0 selects half the grid width
  int radius = 4;
  int k = 5;
  int clip_length = 20;    // T; longer sequences are processed in clips, 0 = whole sequence
  int iterations = 10;     // N
  float alpha = 1.0f;
  double sigma = 5.0;      // ground-truth confidence
  double sigma_p = 0.1;    // proxy confidence
  double gamma = 0.9;
  int pool_factor = 4;
  MemoryPolicy policy = MemoryPolicy::kPpm;
  bool play = true;
  bool positional_encoding = true;
  bool memory = true;
  CounterMode counter_mode = CounterMode::kReset;
  MemoryMode memory_mode = MemoryMode::kOffline;
  ConfidenceSource confidence = ConfidenceSource::kProxy;
  std::optional<ConfidenceHead<float>> head;  // seeded when absent
  std::uint64_t seed = 0;
};

/// Reads flat keys (K, T, N, alpha, sigma, gamma, scale, policy,
/// counter_mode, memory_mode, ...) over `base`. Unknown keys are errors.
PipelineConfig config_from_json(const nlohmann::json& doc, PipelineConfig base = {});
nlohmann::json config_to_json(const PipelineConfig& config);

/// Every fixed map of the untrained network, regenerated from the seed.
struct Network {
  FeatureExtractor extractor;
  LinearMap context;
  ProjectionWeights projections;
  LinearMap cost;
  GruCell gru;
  ConfidenceHead<float> head;

  static Network build(const PipelineConfig& config, int max_disparity);
};

/// Per-frame quantities that do not change across iterations.
struct FrameFeatures {
  TokenGridf context;  // F_c
  TokenGridf query;
  TokenGridf key;
  CorrelationVolume volume;
  CostFeature cost;          // F_cost, v_t
  FloatRaster confidence;    // u_t at grid resolution
  double confidence_score;   // S^c, spatial mean of u_t
};

FrameFeatures compute_frame_features(const Network& net, const PipelineConfig& config, const StereoFrame& frame);

struct TraceRecord {
  int frame = 0;      // global frame index t
  int iteration = 0;  // n, 1-based
  int clip_start = 0;
  QualityState state;
  std::vector<int> picked;  // global frame indices, ascending
  std::vector<double> weights;
  Eigen::Index buffer_tokens = 0;
};

nlohmann::json trace_to_json(const TraceRecord& record);
TraceRecord trace_from_json(const nlohmann::json& doc);

struct FrameResult {
  std::vector<FloatRaster> iterations;  // d_t^n at grid resolution, n = 1..N
  std::vector<FloatRaster> deltas;      // residuals per iteration
  FloatRaster disparity;                // d_t^N upsampled to the input size
};

struct RunResult {
  std::vector<FrameResult> frames;
  std::vector<TraceRecord> traces;
};

/// Memory-augmented iterative refinement over every frame of the video.
RunResult run_sequence(const StereoVideoSequence& video, const PipelineConfig& config);

/// (v_t, u_hat_t) pairs where u_hat compares the winner-take-all disparity of
/// each frame's cost volume with its ground truth.
std::vector<ConfidenceSample> build_confidence_dataset(const StereoVideoSequence& video, const PipelineConfig& config);

}  // namespace ppm
