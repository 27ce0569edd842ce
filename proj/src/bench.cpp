#include "ppm/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "ppm/metrics.hpp"
#include "ppm/random.hpp"
#include "ppm/scene.hpp"

namespace ppm {

std::vector<PolicyVariant> default_variants() {
  return {{"full", MemoryPolicy::kFull, true},     {"latest", MemoryPolicy::kLatest, true},
          {"random", MemoryPolicy::kRandom, true}, {"ppm", MemoryPolicy::kPpm, true},
          {"pick-only", MemoryPolicy::kPpm, false}, {"play-only", MemoryPolicy::kFull, true}};
}

PolicyVariant find_variant(const std::string& name) {
  for (auto& v : default_variants())
    if (v.name == name) return v;
  throw DataError("unknown policy variant '" + name + "'");
}

std::vector<SuiteScene> make_suite(int scenes, std::uint64_t seed, int width, int height, int frames, int corrupted,
                                   float amplitude) {
  std::vector<SuiteScene> suite;
  for (int s = 0; s < scenes; ++s) {
    const std::uint64_t scene_seed = derive_seed(seed, {0x5017eULL, static_cast<std::uint64_t>(s)});
    const SceneSpec spec = random_scene_spec(scene_seed, width, height, frames, corrupted, amplitude);
    SuiteScene scene{"scene_" + std::to_string(s), generate_scene(spec, scene_seed), {}};
    for (const auto& c : spec.corruptions) scene.corrupted.push_back(c.frame);
    suite.push_back(std::move(scene));
  }
  return suite;
}

void accumulate_selections(const RunResult& run, const std::vector<int>& corrupted, PolicyStats& stats) {
  for (const auto& rec : run.traces) {
    stats.selections += rec.picked.size();
    for (int i : rec.picked)
      stats.corrupted_selections += std::find(corrupted.begin(), corrupted.end(), i) != corrupted.end();
  }
}

std::vector<PolicyStats> compare_policies(const std::vector<SuiteScene>& suite, const PipelineConfig& base,
                                          const std::vector<PolicyVariant>& variants) {
  std::vector<PolicyStats> out;
  for (const auto& variant : variants) {
    PolicyStats stats;
    stats.name = variant.name;
    PipelineConfig config = base;
    config.policy = variant.policy;
    config.play = variant.play;
    std::size_t records = 0;
    for (const auto& scene : suite) {
      const RunResult run = run_sequence(scene.video, config);
      accumulate_selections(run, scene.corrupted, stats);
      for (const auto& rec : run.traces) stats.readout_tokens += static_cast<double>(rec.buffer_tokens);
      records += run.traces.size();
      if (scene.video.gt_disparity && scene.video.length() >= 2) {
        std::vector<FloatRaster> pred;
        for (const auto& f : run.frames) pred.push_back(f.disparity);
        const MetricsReport r = evaluate_sequence(pred, *scene.video.gt_disparity, {3.0});
        stats.epe += r.epe;
        stats.delta_3px += r.delta_npx.at(3.0);
        stats.tepe += r.tepe;
        stats.delta_t_3px += r.delta_t_npx.at(3.0);
        ++stats.scenes;
      }
    }
    if (stats.scenes > 0) {
      const double n = stats.scenes;
      stats.epe /= n;
      stats.delta_3px /= n;
      stats.tepe /= n;
      stats.delta_t_3px /= n;
    }
    if (records > 0) stats.readout_tokens /= static_cast<double>(records);
    out.push_back(std::move(stats));
  }
  return out;
}

nlohmann::json stats_to_json(const std::vector<PolicyStats>& stats) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : stats)
    rows.push_back({{"policy", s.name},
                    {"scenes", s.scenes},
                    {"epe", s.epe},
                    {"delta_3px", s.delta_3px},
                    {"tepe", s.tepe},
                    {"delta_t_3px", s.delta_t_3px},
                    {"selections", s.selections},
                    {"corrupted_selections", s.corrupted_selections},
                    {"corrupted_rate", s.corrupted_rate()},
                    {"readout_tokens", s.readout_tokens}});
  return rows;
}

std::string stats_table(const std::vector<PolicyStats>& stats) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s %8s %10s %9s\n", "policy", "EPE", "d3px", "TEPE", "dt3px",
                "corrupt%", "tokens");
  out << line;
  for (const auto& s : stats) {
    std::snprintf(line, sizeof(line), "%-10s %8.4f %8.4f %8.4f %8.4f %10.4f %9.1f\n", s.name.c_str(), s.epe,
                  s.delta_3px, s.tepe, s.delta_t_3px, 100.0 * s.corrupted_rate(), s.readout_tokens);
    out << line;
  }
  return out.str();
}

std::string stats_csv(const std::vector<PolicyStats>& stats) {
  std::ostringstream out;
  out << "policy,scenes,epe,delta_3px,tepe,delta_t_3px,selections,corrupted_selections,corrupted_rate,readout_tokens\n";
  for (const auto& s : stats)
    out << s.name << ',' << s.scenes << ',' << s.epe << ',' << s.delta_3px << ',' << s.tepe << ',' << s.delta_t_3px
        << ',' << s.selections << ',' << s.corrupted_selections << ',' << s.corrupted_rate() << ','
        << s.readout_tokens << '\n';
  return out.str();
}

}  // namespace ppm
