#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppm/pipeline.hpp"

namespace ppm {

/// One row of the memory-buffer ablation.
struct PolicyVariant {
  std::string name;
  MemoryPolicy policy = MemoryPolicy::kPpm;
  bool play = true;
};

/// full, latest, random, ppm, plus pick-only (ppm without play) and
/// play-only (all frames with play).
std::vector<PolicyVariant> default_variants();
PolicyVariant find_variant(const std::string& name);

struct SuiteScene {
  std::string name;
  StereoVideoSequence video;
  std::vector<int> corrupted;  // frame indices with a noisy right view
};

/// Seeded scenes, each with `corrupted` noise-corrupted frames.
std::vector<SuiteScene> make_suite(int scenes, std::uint64_t seed, int width, int height, int frames, int corrupted,
                                   float amplitude);

struct PolicyStats {
  std::string name;
  int scenes = 0;
  double epe = 0.0;   // means over scenes
  double delta_3px = 0.0;
  double tepe = 0.0;
  double delta_t_3px = 0.0;
  std::size_t selections = 0;            // picked entries over every trace record
  std::size_t corrupted_selections = 0;  // of which point at corrupted frames
  double readout_tokens = 0.0;           // mean dynamic buffer size

  double corrupted_rate() const {
    return selections ? static_cast<double>(corrupted_selections) / static_cast<double>(selections) : 0.0;
  }
};

/// Counts picks of corrupted frames in a run's traces.
void accumulate_selections(const RunResult& run, const std::vector<int>& corrupted, PolicyStats& stats);

/// Runs every variant over every scene with identical seeds.
std::vector<PolicyStats> compare_policies(const std::vector<SuiteScene>& suite, const PipelineConfig& base,
                                          const std::vector<PolicyVariant>& variants);

nlohmann::json stats_to_json(const std::vector<PolicyStats>& stats);
std::string stats_table(const std::vector<PolicyStats>& stats);
std::string stats_csv(const std::vector<PolicyStats>& stats);

}  // namespace ppm
