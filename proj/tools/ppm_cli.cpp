// Command-line front end: generate | run | eval | compare-policies | trace-dump.
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric error.

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ppm/bench.hpp"
#include "ppm/manifest.hpp"
#include "ppm/metrics.hpp"
#include "ppm/pfm.hpp"
#include "ppm/pipeline.hpp"
#include "ppm/scene.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string disparity_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "disp_%04d.pfm", t);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ppm::DataError("cannot write " + path.string());
  out << text;
}

// Flags that override config-file keys; unset optionals leave the file value.
struct ConfigFlags {
  std::string config_file;
  std::optional<int> k, t, n, radius, channels, max_disparity, pool_factor;
  std::optional<float> alpha;
  std::optional<double> sigma_p;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy, mode, counter_mode, confidence, head;
  bool no_memory = false;
  bool no_play = false;
  bool no_pe = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "Config file (JSON)")->check(CLI::ExistingFile);
    app->add_option("--K", k, "Frames kept in the dynamic memory");
    app->add_option("--T", t, "Clip length (0: whole sequence)");
    app->add_option("--N", n, "Refinement iterations");
    app->add_option("--alpha", alpha, "Read-out residual weight");
    app->add_option("--radius", radius, "Correlation lookup radius");
    app->add_option("--C", channels, "Feature channels");
    app->add_option("--D", max_disparity, "Disparity range at grid resolution");
    app->add_option("--pool-factor", pool_factor, "Pooling factor of the similarity descriptor");
    app->add_option("--sigma-p", sigma_p, "Proxy confidence photometric scale");
    app->add_option("--seed", seed, "Network seed");
    app->add_option("--policy", policy, "ppm | full | latest | random")
        ->check(CLI::IsMember({"ppm", "full", "latest", "random"}));
    app->add_option("--mode", mode, "offline | causal")->check(CLI::IsMember({"offline", "causal"}));
    app->add_option("--counter-mode", counter_mode, "reset | persist")->check(CLI::IsMember({"reset", "persist"}));
    app->add_option("--confidence", confidence, "proxy | head")->check(CLI::IsMember({"proxy", "head"}));
    app->add_option("--head", head, "Trained confidence head file")->check(CLI::ExistingFile);
    app->add_flag("--no-memory", no_memory, "Disable the memory read-out");
    app->add_flag("--no-play", no_play, "Skip play weighting and positional encodings");
    app->add_flag("--no-pe", no_pe, "Disable positional encodings");
  }

  ppm::PipelineConfig resolve() const {
    json doc = config_file.empty() ? json::object() : ppm::read_json_file(config_file);
    if (k) doc["K"] = *k;
    if (t) doc["T"] = *t;
    if (n) doc["N"] = *n;
    if (alpha) doc["alpha"] = *alpha;
    if (radius) doc["radius"] = *radius;
    if (channels) doc["C"] = *channels;
    if (max_disparity) doc["D"] = *max_disparity;
    if (pool_factor) doc["pool_factor"] = *pool_factor;
    if (sigma_p) doc["sigma_p"] = *sigma_p;
    if (seed) doc["seed"] = *seed;
    if (policy) doc["policy"] = *policy;
    if (mode) doc["memory_mode"] = *mode;
    if (counter_mode) doc["counter_mode"] = *counter_mode;
    if (confidence) doc["confidence"] = *confidence;
    if (head) doc["head"] = *head;
    if (no_memory) doc["memory"] = false;
    if (no_play) doc["play"] = false;
    if (no_pe) doc["positional_encoding"] = false;
    return ppm::config_from_json(doc);
  }
};

int cmd_generate(const fs::path& spec_file, std::uint64_t seed, const fs::path& out_dir) {
  const ppm::SceneSpec spec = ppm::scene_spec_from_json(ppm::read_json_file(spec_file));
  const ppm::StereoVideoSequence seq = ppm::generate_scene(spec, seed);
  ppm::save_sequence(out_dir, seq);
  json scene = ppm::scene_spec_to_json(spec);
  scene["seed"] = seed;
  write_text(out_dir / "scene.json", scene.dump(2) + "\n");
  spdlog::info("wrote {} frames to {}", seq.length(), out_dir.string());
  return 0;
}

int cmd_run(const fs::path& manifest_file, const ConfigFlags& flags, const fs::path& out_dir) {
  const ppm::PipelineConfig config = flags.resolve();
  const ppm::Manifest manifest = ppm::read_manifest(manifest_file);
  const ppm::StereoVideoSequence video = ppm::load_sequence(manifest);
  const ppm::RunResult result = ppm::run_sequence(video, config);

  fs::create_directories(out_dir);
  json frames = json::array();
  for (int t = 0; t < static_cast<int>(result.frames.size()); ++t) {
    ppm::save_pfm(out_dir / disparity_name(t), result.frames[t].disparity);
    frames.push_back(disparity_name(t));
  }
  std::string trace;
  for (const auto& rec : result.traces) trace += ppm::trace_to_json(rec).dump() + "\n";
  write_text(out_dir / "trace.jsonl", trace);
  const json run = {{"manifest", fs::absolute(manifest_file).lexically_normal().generic_string()},
                    {"config", ppm::config_to_json(config)},
                    {"disparities", frames},
                    {"trace", "trace.jsonl"}};
  write_text(out_dir / "run.json", run.dump(2) + "\n");
  spdlog::info("processed {} frames, {} trace records", result.frames.size(), result.traces.size());
  return 0;
}

int cmd_eval(const fs::path& pred_dir, const fs::path& manifest_file, const std::string& json_out,
             const std::string& aggregation, const std::vector<double>& thresholds) {
  const ppm::Manifest manifest = ppm::read_manifest(manifest_file);
  std::vector<ppm::FloatRaster> pred, gt;
  for (int t = 0; t < static_cast<int>(manifest.frames.size()); ++t) {
    const fs::path p = pred_dir / disparity_name(t);
    if (!fs::exists(p)) throw ppm::DataError("missing prediction " + p.string());
    if (!manifest.frames[t].gt) throw ppm::DataError("manifest frame " + std::to_string(t) + " has no ground truth");
    if (!fs::exists(*manifest.frames[t].gt)) throw ppm::DataError("missing ground truth " + manifest.frames[t].gt->string());
    pred.push_back(ppm::load_pfm(p));
    gt.push_back(ppm::load_pfm(*manifest.frames[t].gt));
  }
  const auto agg = aggregation == "per-transition" ? ppm::TemporalAggregation::kPerTransition
                                                   : ppm::TemporalAggregation::kPixelMean;
  const ppm::MetricsReport report = ppm::evaluate_sequence(pred, gt, thresholds, agg);
  std::cout << ppm::report_table(report);
  if (!json_out.empty()) write_text(json_out, ppm::report_to_json(report).dump(2) + "\n");
  return 0;
}

struct SuiteFlags {
  std::vector<std::string> manifests;
  int scenes = 30;
  std::uint64_t seed = 0;
  int width = 64, height = 64, frames = 20, corrupted = 3;
  float amplitude = 0.5f;
  std::vector<std::string> policies = {"full", "latest", "random", "ppm"};
  std::string out_dir;
};

int cmd_compare(const SuiteFlags& suite_flags, const ConfigFlags& flags) {
  const ppm::PipelineConfig config = flags.resolve();
  std::vector<ppm::SuiteScene> suite;
  if (suite_flags.manifests.empty()) {
    suite = ppm::make_suite(suite_flags.scenes, suite_flags.seed, suite_flags.width, suite_flags.height,
                            suite_flags.frames, suite_flags.corrupted, suite_flags.amplitude);
  } else {
    for (const auto& m : suite_flags.manifests) {
      ppm::SuiteScene scene{m, ppm::load_sequence(ppm::read_manifest(m)), {}};
      // Corruption labels come from the scene.json written by `generate`.
      const fs::path scene_file = fs::path(m).parent_path() / "scene.json";
      if (fs::exists(scene_file))
        for (const auto& c : ppm::scene_spec_from_json(ppm::read_json_file(scene_file)).corruptions)
          scene.corrupted.push_back(c.frame);
      suite.push_back(std::move(scene));
    }
  }
  std::vector<ppm::PolicyVariant> variants;
  for (const auto& name : suite_flags.policies) variants.push_back(ppm::find_variant(name));
  const auto stats = ppm::compare_policies(suite, config, variants);
  std::cout << ppm::stats_table(stats);
  if (!suite_flags.out_dir.empty()) {
    fs::create_directories(suite_flags.out_dir);
    write_text(fs::path(suite_flags.out_dir) / "comparison.json", ppm::stats_to_json(stats).dump(2) + "\n");
    write_text(fs::path(suite_flags.out_dir) / "comparison.csv", ppm::stats_csv(stats));
  }
  return 0;
}

int cmd_trace_dump(const fs::path& trace_file, std::optional<int> frame, bool as_json) {
  std::ifstream in(trace_file);
  if (!in) throw ppm::DataError("cannot open " + trace_file.string());
  std::string line;
  std::printf("%5s %4s %8s  %s\n", "t", "n", "tokens", "picked (weight)");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw ppm::DataError(trace_file.string() + ": " + e.what());
    }
    const ppm::TraceRecord rec = ppm::trace_from_json(doc);
    if (frame && rec.frame != *frame) continue;
    if (as_json) {
      std::cout << line << "\n";
      continue;
    }
    std::string picks;
    for (std::size_t j = 0; j < rec.picked.size(); ++j) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%s%d(%.3f)", j ? " " : "", rec.picked[j],
                    j < rec.weights.size() ? rec.weights[j] : 0.0);
      picks += buf;
    }
    std::printf("%5d %4d %8lld  %s\n", rec.frame, rec.iteration, static_cast<long long>(rec.buffer_tokens),
                picks.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("ppm");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();

  CLI::App app{"Pick-and-play memory stereo video toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Render a synthetic stereo video from a scene spec");
  std::string spec_file, gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--spec", spec_file, "Scene spec (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", gen_seed, "Texture and noise seed");
  gen->add_option("--out", gen_out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Estimate disparity for every frame of a manifest");
  std::string run_manifest, run_out;
  ConfigFlags run_flags;
  run->add_option("--manifest", run_manifest, "Sequence manifest")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory")->required();
  run_flags.attach(run);

  auto* eval = app.add_subcommand("eval", "Score predicted disparities against ground truth");
  std::string eval_pred, eval_manifest, eval_json, eval_agg = "pixel-mean";
  std::vector<double> thresholds = {1.0, 3.0};
  eval->add_option("--pred", eval_pred, "Directory with disp_NNNN.pfm")->required();
  eval->add_option("--manifest", eval_manifest, "Sequence manifest")->required()->check(CLI::ExistingFile);
  eval->add_option("--json", eval_json, "Also write the report as JSON");
  eval->add_option("--aggregation", eval_agg, "delta^t aggregation: pixel-mean | per-transition")
      ->check(CLI::IsMember({"pixel-mean", "per-transition"}));
  eval->add_option("--thresholds", thresholds, "Pixel thresholds n")->delimiter(',');

  auto* cmp = app.add_subcommand("compare-policies", "Compare memory policies over a scene suite");
  SuiteFlags suite;
  ConfigFlags cmp_flags;
  cmp->add_option("--manifest", suite.manifests, "Manifests to use instead of a generated suite");
  cmp->add_option("--scenes", suite.scenes, "Generated scenes");
  cmp->add_option("--suite-seed", suite.seed, "Suite generation seed");
  cmp->add_option("--width", suite.width);
  cmp->add_option("--height", suite.height);
  cmp->add_option("--frames", suite.frames);
  cmp->add_option("--corrupted", suite.corrupted, "Corrupted frames per scene");
  cmp->add_option("--amplitude", suite.amplitude, "Corruption noise amplitude");
  cmp->add_option("--policies", suite.policies, "full,latest,random,ppm,pick-only,play-only")->delimiter(',');
  cmp->add_option("--out", suite.out_dir, "Directory for comparison.json and comparison.csv");
  cmp_flags.attach(cmp);

  auto* dump = app.add_subcommand("trace-dump", "Print the frames picked at each step of a run");
  std::string trace_file;
  std::optional<int> trace_frame;
  bool trace_json = false;
  dump->add_option("--trace", trace_file, "trace.jsonl from `run`")->required()->check(CLI::ExistingFile);
  dump->add_option("--frame", trace_frame, "Only this target frame");
  dump->add_flag("--json", trace_json, "Echo raw records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(spec_file, gen_seed, gen_out);
    if (*run) return cmd_run(run_manifest, run_flags, run_out);
    if (*eval) return cmd_eval(eval_pred, eval_manifest, eval_json, eval_agg, thresholds);
    if (*cmp) return cmd_compare(suite, cmp_flags);
    if (*dump) return cmd_trace_dump(trace_file, trace_frame, trace_json);
  } catch (const ppm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
