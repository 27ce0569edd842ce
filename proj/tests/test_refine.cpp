#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ppm/pipeline.hpp"
#include "ppm/refine.hpp"
#include "ppm/scene.hpp"

using namespace ppm;

namespace {

oracle::Grid concat(const oracle::Grid& a, const oracle::Grid& b) {
  oracle::Grid out = a;
  for (std::size_t y = 0; y < a.size(); ++y)
    for (std::size_t x = 0; x < a[0].size(); ++x) out[y][x].insert(out[y][x].end(), b[y][x].begin(), b[y][x].end());
  return out;
}

template <typename F>
oracle::Grid map(oracle::Grid g, F f) {
  for (auto& row : g)
    for (auto& cell : row)
      for (double& v : cell) v = f(v);
  return g;
}

// Straight-loop ConvGRU step; returns hidden' and delta as a 1-channel grid.
std::pair<oracle::Grid, oracle::Grid> gru_oracle(const GruCell& cell, const TokenGridf& hidden, const TokenGridf& input) {
  const int Ch = cell.hidden_channels(), Cin = cell.input_channels();
  const auto h = testing::to_oracle(hidden), x = testing::to_oracle(input);
  const auto hx = concat(h, x);
  auto conv = [&](const oracle::Grid& in, const RowMatrix<float>& w, const Vector<float>& b, int channels) {
    return oracle::conv3x3(in, testing::to_kernel(w, channels), testing::to_std(b));
  };
  const auto z = map(conv(hx, cell.wz, cell.bz, Ch + Cin), oracle::sigmoid);
  const auto r = map(conv(hx, cell.wr, cell.br, Ch + Cin), oracle::sigmoid);
  oracle::Grid rh = h;
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < h[0].size(); ++j)
      for (int c = 0; c < Ch; ++c) rh[i][j][c] = r[i][j][c] * h[i][j][c];
  const auto q = map(conv(concat(rh, x), cell.wq, cell.bq, Ch + Cin), [](double v) { return std::tanh(v); });
  oracle::Grid next = h;
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < h[0].size(); ++j)
      for (int c = 0; c < Ch; ++c) next[i][j][c] = (1 - z[i][j][c]) * h[i][j][c] + z[i][j][c] * q[i][j][c];
  const auto mid = map(conv(next, cell.wd1, cell.bd1, Ch), [](double v) { return std::max(v, 0.0); });
  return {next, conv(mid, cell.wd2, cell.bd2, static_cast<int>(cell.wd1.cols()))};
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.channels = 16;
  c.gru_hidden = 16;
  c.gru_head = 8;
  c.iterations = 3;
  c.k = 2;
  c.radius = 2;
  c.seed = 5;
  return c;
}

std::vector<std::vector<FloatRaster>> constant_predictions(int n, float value) {
  return {std::vector<FloatRaster>(n, FloatRaster(3, 2, 1, value))};
}

}  // namespace

TEST_SUITE("refine") {
  TEST_CASE("zero-weight GRU halves the hidden state") {
    const auto cell = GruCell::zeros(5, 4, 3);
    const auto h = testing::random_grid(3, 4, 4, 1);
    const auto out = gru_step(cell, h, testing::random_grid(3, 4, 5, 2));
    CHECK((out.hidden.tokens - 0.5f * h.tokens).cwiseAbs().maxCoeff() == 0.0f);
    for (float d : out.delta.data()) CHECK(d == 0.0f);
  }

  TEST_CASE("zero everything gives zero hidden and the head bias") {
    auto cell = GruCell::zeros(5, 4, 3);
    cell.bd2(0) = 0.75f;
    const auto out = gru_step(cell, TokenGridf(3, 4, 4), TokenGridf(3, 4, 5));
    CHECK(out.hidden.tokens.isZero(0));
    for (float d : out.delta.data()) CHECK(d == 0.75f);
  }

  TEST_CASE("seeded GRU step matches the loop oracle") {
    for (std::uint64_t s = 0; s < 3; ++s) {
      auto cell = GruCell::seeded(6, 5, 4, s);
      cell.bz.setConstant(0.1f);
      cell.bd1.setConstant(0.05f);
      cell.bd2.setConstant(-0.02f);
      const auto h = testing::random_grid(4, 5, 5, 10 + s), x = testing::random_grid(4, 5, 6, 20 + s);
      const auto out = gru_step(cell, h, x);
      const auto [want_h, want_d] = gru_oracle(cell, h, x);
      for (int y = 0; y < 4; ++y)
        for (int xx = 0; xx < 5; ++xx) {
          for (int c = 0; c < 5; ++c) CHECK(std::abs(out.hidden.at(xx, y, c) - want_h[y][xx][c]) <= 1e-6);
          CHECK(std::abs(out.delta.at(xx, y) - want_d[y][xx][0]) <= 1e-6);
        }
    }
    CHECK(GruCell::seeded(6, 5, 4, 1).wq == GruCell::seeded(6, 5, 4, 1).wq);
    CHECK_THROWS_AS(gru_step(GruCell::zeros(6, 5, 4), TokenGridf(2, 2, 5), TokenGridf(2, 2, 5)), ShapeError);
    CHECK_THROWS_AS(gru_step(GruCell::zeros(6, 5, 4), TokenGridf(2, 2, 5), TokenGridf(2, 3, 6)), ShapeError);
  }

  TEST_CASE("upsampling scales values with the width") {
    const auto up = upsample_disparity(FloatRaster(4, 3, 1, 2.0f), 16, 12);
    CHECK(up.width() == 16);
    for (float v : up.data()) CHECK(v == 8.0f);
    const auto zero = upsample_disparity(FloatRaster(4, 3), 16, 12);
    for (float v : zero.data()) CHECK(v == 0.0f);
  }

  TEST_CASE("upsampling preserves a linear ramp") {
    const int sw = 10, sh = 6, f = 4;
    FloatRaster d(sw, sh);
    for (int y = 0; y < sh; ++y)
      for (int x = 0; x < sw; ++x) d.at(x, y) = static_cast<float>(0.1 * x + 0.05 * y + 0.2);
    const auto up = upsample_disparity(d, sw * f, sh * f);
    double worst = 0.0;
    for (int y = 0; y < sh * f; ++y)
      for (int x = 0; x < sw * f; ++x) {
        const double sx = std::clamp((x + 0.5) / f - 0.5, 0.0, sw - 1.0);
        const double sy = std::clamp((y + 0.5) / f - 0.5, 0.0, sh - 1.0);
        worst = std::max(worst, std::abs(up.at(x, y) - f * (0.1 * sx + 0.05 * sy + 0.2)));
      }
    CHECK(worst < 1e-5);
  }

  TEST_CASE("disparity and total losses") {
    std::vector<FloatRaster> truth = {FloatRaster(3, 2, 1, 0.0f)};
    CHECK(disparity_loss(constant_predictions(10, 0.0f), truth) == 0.0);
    CHECK(std::abs(disparity_loss(constant_predictions(10, 1.0f), truth) - 6.513216) <= 1e-6);
    CHECK(disparity_loss(constant_predictions(10, -2.0f), truth) ==
          doctest::Approx(2.0 * disparity_loss(constant_predictions(10, 1.0f), truth)));
    CHECK_THROWS_AS(disparity_loss(constant_predictions(2, 1.0f), {}), DataError);

    // A unit error at iteration n alone contributes gamma^(N-n), increasing in n.
    double last = 0.0;
    for (int n = 0; n < 10; ++n) {
      auto preds = constant_predictions(10, 0.0f);
      preds[0][n] = FloatRaster(3, 2, 1, 1.0f);
      const double l = disparity_loss(preds, truth);
      CHECK(l > last);
      last = l;
    }
    CHECK(total_loss(0, 0) == 0.0);
    CHECK(total_loss(2.5, 0) == 2.5);
    CHECK(total_loss(1.5, 2.5) == 4.0);
  }

  TEST_CASE("single frame with K = 1 picks frame 0 at every iteration") {
    auto cfg = small_config();
    cfg.k = 1;
    const auto video = generate_scene(random_scene_spec(1, 32, 32, 1, 0, 0.0f), 1);
    const auto run = run_sequence(video, cfg);
    REQUIRE(run.traces.size() == 3);
    for (const auto& r : run.traces) CHECK(r.picked == std::vector<int>{0});
    CHECK(run.frames[0].iterations.size() == 3);
    CHECK(run.frames[0].disparity.width() == 32);
  }

  TEST_CASE("alpha 0 equals the memory-free pipeline bit for bit") {
    auto cfg = small_config();
    cfg.alpha = 0.0f;
    const auto video = generate_scene(random_scene_spec(2, 32, 32, 4, 1, 0.5f), 2);
    const auto with = run_sequence(video, cfg);
    cfg.memory = false;
    const auto without = run_sequence(video, cfg);
    CHECK(without.traces.empty());
    for (int t = 0; t < 4; ++t) {
      for (int n = 0; n < 3; ++n) CHECK(with.frames[t].iterations[n] == without.frames[t].iterations[n]);
      CHECK(with.frames[t].disparity == without.frames[t].disparity);
    }
  }

  TEST_CASE("static scene gives identical outputs for every frame") {
    auto cfg = small_config();
    cfg.positional_encoding = false;
    SceneSpec spec;
    spec.width = spec.height = 32;
    spec.frames = 4;
    spec.background_disparity = 2;
    spec.rectangles.push_back({8, 8, 12, 10, 6.0f, 0.0f, 0.0f});
    const auto run = run_sequence(generate_scene(spec, 3), cfg);
    for (int t = 1; t < 4; ++t) {
      double worst = 0.0;
      for (std::size_t i = 0; i < run.frames[0].disparity.size(); ++i)
        worst = std::max(worst, std::abs(static_cast<double>(run.frames[t].disparity.data()[i]) -
                                         run.frames[0].disparity.data()[i]));
      CHECK(worst <= 1e-6);
    }
  }

  TEST_CASE("iterations telescope and runs are deterministic") {
    const auto cfg = small_config();
    const auto video = generate_scene(random_scene_spec(4, 32, 32, 3, 1, 0.5f), 4);
    const auto a = run_sequence(video, cfg), b = run_sequence(video, cfg);
    for (int t = 0; t < 3; ++t) {
      FloatRaster sum(8, 8);
      for (const auto& delta : a.frames[t].deltas)
        for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] += delta.data()[i];
      CHECK(sum == a.frames[t].iterations.back());
      CHECK(a.frames[t].disparity == b.frames[t].disparity);
    }
    REQUIRE(a.traces.size() == b.traces.size());
    for (std::size_t i = 0; i < a.traces.size(); ++i) CHECK(trace_to_json(a.traces[i]) == trace_to_json(b.traces[i]));
  }

  TEST_CASE("trace records: buffer size, counters and clips") {
    auto cfg = small_config();
    cfg.clip_length = 3;
    cfg.counter_mode = CounterMode::kPersist;
    const auto video = generate_scene(random_scene_spec(6, 32, 32, 5, 0, 0.0f), 6);
    const auto run = run_sequence(video, cfg);
    REQUIRE(run.traces.size() == 15);
    std::vector<int> tally(3, 0);
    for (const auto& r : run.traces) {
      CHECK(r.clip_start == (r.frame < 3 ? 0 : 3));
      CHECK(r.picked.size() == 2);
      CHECK(r.buffer_tokens == 2 * 64);
      if (r.frame == 3 && r.iteration == 1) tally.assign(r.state.counters.size(), 0);
      for (int i : r.picked) ++tally[i - r.clip_start];
      CHECK(r.state.counters == tally);
      CHECK(trace_from_json(trace_to_json(r)).picked == r.picked);
    }
  }

  TEST_CASE("causal mode only sees frames up to the target") {
    auto cfg = small_config();
    cfg.memory_mode = MemoryMode::kCausal;
    const auto run = run_sequence(generate_scene(random_scene_spec(7, 32, 32, 4, 0, 0.0f), 7), cfg);
    for (const auto& r : run.traces) {
      CHECK(r.picked.back() <= r.frame);
      CHECK(static_cast<int>(r.picked.size()) == std::min(2, r.frame + 1));
    }
  }

  TEST_CASE("numeric failures carry the frame and iteration") {
    auto cfg = small_config();
    cfg.alpha = std::numeric_limits<float>::quiet_NaN();
    try {
      run_sequence(generate_scene(random_scene_spec(8, 32, 32, 2, 0, 0.0f), 8), cfg);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("frame 0 iteration 1") != std::string::npos);
    }
  }

  TEST_CASE("config json round trip and unknown keys") {
    auto cfg = small_config();
    cfg.policy = MemoryPolicy::kRandom;
    cfg.counter_mode = CounterMode::kPersist;
    const auto back = config_from_json(config_to_json(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));
    CHECK(config_from_json(nlohmann::json::parse(R"({"K": 7, "alpha": 0})")).k == 7);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"kappa": 1})")), DataError);
  }
}
