#include "ppm/pipeline.hpp"

#include <cmath>
#include <set>
#include <string>

#include "ppm/random.hpp"

namespace ppm {
using nlohmann::json;

namespace {

int resolve_max_disparity(const PipelineConfig& config, int grid_width) {
  return config.max_disparity > 0 ? config.max_disparity : std::max(1, grid_width / 2);
}

std::string at_step(int t, int n) { return "frame " + std::to_string(t) + " iteration " + std::to_string(n) + ": "; }

}  // namespace

PipelineConfig config_from_json(const json& doc, PipelineConfig c) {
  static const std::set<std::string> known = {
      "K",      "T",         "N",           "alpha", "sigma",      "sigma_p", "gamma",   "scale", "policy",
      "counter_mode", "memory_mode", "seed", "C",     "gru_hidden", "confidence_hidden", "pool_factor",
      "radius", "D",         "confidence",  "head",  "play",       "positional_encoding", "memory"};
  if (!doc.is_object()) throw DataError("config: expected a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!known.contains(key)) throw DataError("config: unknown key '" + key + "'");
  try {
    c.k = doc.value("K", c.k);
    c.clip_length = doc.value("T", c.clip_length);
    c.iterations = doc.value("N", c.iterations);
    c.alpha = doc.value("alpha", c.alpha);
    c.sigma = doc.value("sigma", c.sigma);
    c.sigma_p = doc.value("sigma_p", c.sigma_p);
    c.gamma = doc.value("gamma", c.gamma);
    if (doc.contains("scale")) {
      const double scale = doc.at("scale").get<double>();
      const int stride = static_cast<int>(std::lround(1.0 / scale));
      if (stride != 4 && stride != 8 && stride != 16) throw DataError("config: scale must be 1/4, 1/8 or 1/16");
      c.stride = stride;
    }
    if (doc.contains("policy")) c.policy = parse_policy(doc.at("policy").get<std::string>());
    if (doc.contains("counter_mode")) {
      const auto m = doc.at("counter_mode").get<std::string>();
      if (m != "reset" && m != "persist") throw DataError("config: counter_mode must be reset or persist");
      c.counter_mode = m == "reset" ? CounterMode::kReset : CounterMode::kPersist;
    }
    if (doc.contains("memory_mode")) {
      const auto m = doc.at("memory_mode").get<std::string>();
      if (m != "offline" && m != "causal") throw DataError("config: memory_mode must be offline or causal");
      c.memory_mode = m == "offline" ? MemoryMode::kOffline : MemoryMode::kCausal;
    }
    c.seed = doc.value("seed", c.seed);
    c.channels = doc.value("C", c.channels);
    c.gru_hidden = doc.value("gru_hidden", c.gru_hidden);
    c.confidence_hidden = doc.value("confidence_hidden", c.confidence_hidden);
    c.pool_factor = doc.value("pool_factor", c.pool_factor);
    c.radius = doc.value("radius", c.radius);
    c.max_disparity = doc.value("D", c.max_disparity);
    if (doc.contains("confidence")) {
      const auto s = doc.at("confidence").get<std::string>();
      if (s != "proxy" && s != "head") throw DataError("config: confidence must be proxy or head");
      c.confidence = s == "proxy" ? ConfidenceSource::kProxy : ConfidenceSource::kHead;
    }
    if (doc.contains("head")) {
      c.head = load_head(doc.at("head").get<std::string>());
      c.confidence = ConfidenceSource::kHead;
    }
    c.play = doc.value("play", c.play);
    c.positional_encoding = doc.value("positional_encoding", c.positional_encoding);
    c.memory = doc.value("memory", c.memory);
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  if (c.k < 1 || c.iterations < 1 || c.clip_length < 0 || c.channels < 4 || c.radius < 0 || c.pool_factor < 1)
    throw DataError("config: K, N, C, radius or pool_factor out of range");
  return c;
}

json config_to_json(const PipelineConfig& c) {
  return {{"K", c.k},
          {"T", c.clip_length},
          {"N", c.iterations},
          {"alpha", c.alpha},
          {"sigma", c.sigma},
          {"sigma_p", c.sigma_p},
          {"gamma", c.gamma},
          {"scale", 1.0 / c.stride},
          {"policy", to_string(c.policy)},
          {"counter_mode", c.counter_mode == CounterMode::kReset ? "reset" : "persist"},
          {"memory_mode", c.memory_mode == MemoryMode::kOffline ? "offline" : "causal"},
          {"seed", c.seed},
          {"C", c.channels},
          {"gru_hidden", c.gru_hidden},
          {"confidence_hidden", c.confidence_hidden},
          {"pool_factor", c.pool_factor},
          {"radius", c.radius},
          {"D", c.max_disparity},
          {"confidence", c.confidence == ConfidenceSource::kProxy ? "proxy" : "head"},
          {"play", c.play},
          {"positional_encoding", c.positional_encoding},
          {"memory", c.memory}};
}

Network Network::build(const PipelineConfig& config, int max_disparity) {
  const int C = config.channels;
  return {FeatureExtractor(C, derive_seed(config.seed, {1})),
          LinearMap::seeded(C, C, derive_seed(config.seed, {2})),
          ProjectionWeights::seeded(C, derive_seed(config.seed, {3})),
          LinearMap::seeded(max_disparity, C, derive_seed(config.seed, {4})),
          GruCell::seeded(2 * config.radius + 1 + 2 * C, config.gru_hidden, config.gru_head, derive_seed(config.seed, {5})),
          config.head ? *config.head : ConfidenceHead<float>::seeded(C, config.confidence_hidden, derive_seed(config.seed, {6}))};
}

FrameFeatures compute_frame_features(const Network& net, const PipelineConfig& config, const StereoFrame& frame) {
  const TokenGridf left = net.extractor.extract(frame.left, config.stride);
  const TokenGridf right = net.extractor.extract(frame.right, config.stride);
  FrameFeatures f;
  f.context = net.context(left);
  std::tie(f.query, f.key) = project_qk(f.context, net.projections);
  f.volume = build_correlation(left, right, net.cost.in_channels());
  f.cost = encode_cost(f.volume, net.cost, net.projections.value);

  if (config.confidence == ConfidenceSource::kProxy) {
    const FloatRaster wta = upsample_disparity(winner_take_all(f.volume), frame.left.width(), frame.left.height());
    const FloatRaster full = proxy_confidence(wta, frame.left, frame.right, config.sigma_p);
    f.confidence = FloatRaster::from_plane(box_downsample(full.plane(), config.stride));
  } else {
    const TokenGridf u = confidence_forward(net.head, f.cost.value);
    f.confidence = FloatRaster(u.width, u.height, 1, std::vector<float>(u.tokens.data(), u.tokens.data() + u.tokens.size()));
  }
  double sum = 0.0;
  for (float v : f.confidence.data()) sum += v;
  f.confidence_score = sum / static_cast<double>(f.confidence.size());
  return f;
}

RunResult run_sequence(const StereoVideoSequence& video, const PipelineConfig& config) {
  video.validate();
  if (config.confidence == ConfidenceSource::kHead && config.head && config.head->in_channels() != config.channels)
    throw DataError("run: confidence head expects " + std::to_string(config.head->in_channels()) + " channels");
  const int total = video.length();
  const int grid_w = scaled_extent(video.width(), config.stride);
  const int grid_h = scaled_extent(video.height(), config.stride);
  const int D = resolve_max_disparity(config, grid_w);
  const Network net = Network::build(config, D);
  const int clip = config.clip_length > 0 ? config.clip_length : total;

  RunResult result;
  result.frames.resize(total);
  for (int start = 0; start < total; start += clip) {
    const int T = std::min(clip, total - start);
    std::vector<FrameFeatures> feats;
    feats.reserve(T);
    for (int i = 0; i < T; ++i) feats.push_back(compute_frame_features(net, config, video.frames[start + i]));

    std::vector<TokenGridf> keys, values;
    std::vector<double> confidence;
    for (const auto& f : feats) {
      keys.push_back(f.key);
      values.push_back(f.cost.value);
      confidence.push_back(f.confidence_score);
    }
    const VanillaMemory<float> memory = init_vanilla_memory(std::move(keys), std::move(values));
    const RowMatrix<double> encodings = config.positional_encoding
                                            ? positional_encoding(T, config.channels)
                                            : RowMatrix<double>::Zero(T, config.channels);
    const QamConfig qam{config.k, config.pool_factor, config.policy, config.play, derive_seed(config.seed, {7})};
    std::vector<int> counters(T, 0);

    for (int t = 0; t < T; ++t) {
      const FrameFeatures& f = feats[t];
      FrameResult& out = result.frames[start + t];
      if (config.counter_mode == CounterMode::kReset) std::fill(counters.begin(), counters.end(), 0);
      const int available = config.memory_mode == MemoryMode::kCausal ? t + 1 : T;

      TokenGridf hidden(grid_h, grid_w, config.gru_hidden, config.stride);
      FloatRaster disparity(grid_w, grid_h, 1);
      for (int n = 1; n <= config.iterations; ++n) {
        try {
          TokenGridf aggregated;
          if (config.memory) {
            auto step = qam_step(f.query, t, n, memory, confidence, counters, available, encodings, qam);
            aggregated = read_out(step.query, step.memory, f.cost.cost, config.alpha);
            TraceRecord rec{start + t, n, start, std::move(step.state), step.memory.indices, step.memory.weights,
                            step.memory.size()};
            for (int& i : rec.picked) i += start;
            result.traces.push_back(std::move(rec));
          } else {
            aggregated = f.cost.cost;
          }
          const TokenGridf looked = lookup(f.volume, disparity, config.radius);
          GruOutput g = gru_step(net.gru, hidden, concat_channels(looked, aggregated, f.context));
          hidden = std::move(g.hidden);
          auto d = disparity.data();
          auto delta = g.delta.data();
          for (std::size_t i = 0; i < d.size(); ++i) d[i] += delta[i];
          if (!disparity.all_finite()) throw NumericError("non-finite disparity");
          out.iterations.push_back(disparity);
          out.deltas.push_back(std::move(g.delta));
        } catch (const NumericError& e) {
          throw NumericError(at_step(start + t, n) + e.what());
        } catch (const DataError& e) {
          throw DataError(at_step(start + t, n) + e.what());
        }
      }
      out.disparity = upsample_disparity(disparity, video.width(), video.height());
    }
  }
  return result;
}

std::vector<ConfidenceSample> build_confidence_dataset(const StereoVideoSequence& video, const PipelineConfig& config) {
  video.validate();
  if (!video.gt_disparity) throw DataError("confidence dataset: sequence has no ground truth");
  const int grid_w = scaled_extent(video.width(), config.stride);
  const Network net = Network::build(config, resolve_max_disparity(config, grid_w));
  std::vector<ConfidenceSample> data;
  for (int t = 0; t < video.length(); ++t) {
    const FrameFeatures f = compute_frame_features(net, config, video.frames[t]);
    FloatRaster predicted = winner_take_all(f.volume);
    for (float& v : predicted.data()) v *= static_cast<float>(config.stride);
    const FloatRaster truth = FloatRaster::from_plane(box_downsample((*video.gt_disparity)[t].plane(), config.stride));
    data.push_back({f.cost.value, gt_confidence(predicted, truth, config.sigma)});
  }
  return data;
}

json trace_to_json(const TraceRecord& r) {
  return {{"t", r.frame},
          {"n", r.iteration},
          {"clip_start", r.clip_start},
          {"S_c", r.state.confidence},
          {"sim", r.state.similarity},
          {"R", r.state.redundancy},
          {"S_r", r.state.relevance},
          {"S", r.state.quality},
          {"I", r.picked},
          {"S_bar", r.weights},
          {"t_k", r.state.counters},
          {"tokens", r.buffer_tokens}};
}

TraceRecord trace_from_json(const json& doc) {
  try {
    TraceRecord r;
    r.frame = doc.at("t").get<int>();
    r.iteration = doc.at("n").get<int>();
    r.clip_start = doc.value("clip_start", 0);
    r.state.confidence = doc.at("S_c").get<std::vector<double>>();
    r.state.similarity = doc.at("sim").get<std::vector<double>>();
    r.state.redundancy = doc.at("R").get<std::vector<double>>();
    r.state.relevance = doc.at("S_r").get<std::vector<double>>();
    r.state.quality = doc.at("S").get<std::vector<double>>();
    r.picked = doc.at("I").get<std::vector<int>>();
    r.weights = doc.at("S_bar").get<std::vector<double>>();
    r.state.counters = doc.at("t_k").get<std::vector<int>>();
    r.buffer_tokens = doc.value("tokens", Eigen::Index{0});
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("trace record: ") + e.what());
  }
}

}  // namespace ppm
