#include "ppm/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "ppm/random.hpp"

namespace ppm {
namespace {

// Smooth procedural texture: a few oriented sinusoids with wavelengths of
// 8-32 px, bounded to [0.05, 0.95].
class Texture {
 public:
  Texture(std::uint64_t seed, int channels) : channels_(channels) {
    Rng rng(seed);
    for (auto& w : waves_) {
      const double wavelength = rng.uniform(8.0, 32.0);
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      w.fx = std::cos(angle) / wavelength;
      w.fy = std::sin(angle) / wavelength;
      w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      w.amplitude = rng.uniform(0.05, 0.1125);
    }
    for (auto& o : channel_offset_) o = rng.uniform(-0.3, 0.3);
  }

  float sample(double u, double v, int c) const {
    double value = 0.5;
    for (const auto& w : waves_)
      value += w.amplitude * std::sin(2.0 * std::numbers::pi * (w.fx * u + w.fy * v) + w.phase + channel_offset_[c]);
    return static_cast<float>(value);
  }

  int channels() const { return channels_; }

 private:
  struct Wave {
    double fx, fy, phase, amplitude;
  };
  std::array<Wave, 4> waves_{};
  std::array<double, 3> channel_offset_{};
  int channels_;
};

struct Layer {
  int x0, y0, x1, y1;  // left-view footprint, half-open; background spans everything
  bool background;
  float disparity;
  int shift;
  int tex_u0, tex_v0;  // texture origin in left-view coordinates
  const Texture* texture;

  bool covers(int x, int y) const { return background || (x >= x0 && x < x1 && y >= y0 && y < y1); }
};

}  // namespace

std::pair<int, int> rectangle_origin(const RectangleSpec& rect, int t) {
  return {static_cast<int>(std::lround(rect.x + t * static_cast<double>(rect.velocity_x))),
          static_cast<int>(std::lround(rect.y + t * static_cast<double>(rect.velocity_y)))};
}

void SceneSpec::validate() const {
  if (width < 16 || height < 16) throw SceneSpecError("scene: canvas must be at least 16x16");
  if (frames < 1) throw SceneSpecError("scene: frames must be >= 1");
  if (channels != 1 && channels != 3) throw SceneSpecError("scene: channels must be 1 or 3");
  if (!(background_disparity >= 0.0f) || !std::isfinite(background_disparity))
    throw SceneSpecError("scene: background disparity must be finite and non-negative");
  for (std::size_t i = 0; i < rectangles.size(); ++i) {
    const auto& r = rectangles[i];
    const std::string tag = "scene: rectangle " + std::to_string(i);
    if (!(r.disparity >= 0.0f) || !std::isfinite(r.disparity)) throw SceneSpecError(tag + " has negative disparity");
    if (r.width < 1 || r.height < 1) throw SceneSpecError(tag + " has empty extent");
    for (int t = 0; t < frames; ++t) {
      const auto [x, y] = rectangle_origin(r, t);
      if (x < 0 || y < 0 || x + r.width > width || y + r.height > height)
        throw SceneSpecError(tag + " leaves the canvas at frame " + std::to_string(t));
    }
  }
  for (const auto& c : corruptions) {
    if (c.frame < 0 || c.frame >= frames)
      throw SceneSpecError("scene: corruption frame " + std::to_string(c.frame) + " out of range");
    if (!(c.amplitude >= 0.0f)) throw SceneSpecError("scene: corruption amplitude must be non-negative");
  }
}

StereoVideoSequence generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();

  const Texture background_tex(derive_seed(seed, {0x7e4ULL, 0}), spec.channels);
  std::vector<Texture> rect_tex;
  rect_tex.reserve(spec.rectangles.size());
  for (std::size_t i = 0; i < spec.rectangles.size(); ++i)
    rect_tex.emplace_back(derive_seed(seed, {0x7e4ULL, i + 1}), spec.channels);

  StereoVideoSequence seq;
  seq.gt_disparity.emplace();
  const int W = spec.width, H = spec.height, C = spec.channels;

  for (int t = 0; t < spec.frames; ++t) {
    // Back-to-front; stable so later rectangles win ties.
    std::vector<Layer> layers;
    layers.push_back({0, 0, W, H, true, spec.background_disparity,
                      static_cast<int>(std::lround(spec.background_disparity)), 0, 0, &background_tex});
    for (std::size_t i = 0; i < spec.rectangles.size(); ++i) {
      const auto& r = spec.rectangles[i];
      const auto [x, y] = rectangle_origin(r, t);
      layers.push_back({x, y, x + r.width, y + r.height, false, r.disparity, static_cast<int>(std::lround(r.disparity)), x,
                        y, &rect_tex[i]});
    }
    std::stable_sort(layers.begin(), layers.end(),
                     [](const Layer& a, const Layer& b) { return a.disparity < b.disparity; });

    FloatRaster left(W, H, C), right(W, H, C), gt(W, H, 1);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const Layer* front_left = nullptr;
        const Layer* front_right = nullptr;
        for (const auto& layer : layers) {
          if (layer.covers(x, y)) front_left = &layer;
          if (layer.covers(x + layer.shift, y)) front_right = &layer;
        }
        gt.at(x, y) = front_left->disparity;
        for (int c = 0; c < C; ++c) {
          left.at(x, y, c) = front_left->texture->sample(x - front_left->tex_u0, y - front_left->tex_v0, c);
          right.at(x, y, c) =
              front_right->texture->sample(x + front_right->shift - front_right->tex_u0, y - front_right->tex_v0, c);
        }
      }
    }

    for (const auto& corruption : spec.corruptions) {
      if (corruption.frame != t) continue;
      Rng rng(derive_seed(seed, {0xc022ULL, static_cast<std::uint64_t>(t)}));
      for (float& v : right.data()) v += static_cast<float>(rng.uniform(-corruption.amplitude, corruption.amplitude));
    }

    seq.frames.push_back({std::move(left), std::move(right)});
    seq.gt_disparity->push_back(std::move(gt));
  }
  return seq;
}

SceneSpec random_scene_spec(std::uint64_t seed, int width, int height, int frames, int corrupted, float amplitude) {
  Rng rng(derive_seed(seed, {0x5ce7eULL}));
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.frames = frames;
  spec.background_disparity = static_cast<float>(1 + rng.below(4));
  const int count = 1 + static_cast<int>(rng.below(3));
  for (int i = 0; i < count; ++i) {
    RectangleSpec r;
    r.width = width / 5 + static_cast<int>(rng.below(width / 4));
    r.height = height / 5 + static_cast<int>(rng.below(height / 4));
    r.disparity = spec.background_disparity + static_cast<float>(2 + rng.below(8));
    r.velocity_x = static_cast<float>(static_cast<int>(rng.below(3)) - 1);
    r.velocity_y = static_cast<float>(static_cast<int>(rng.below(3)) - 1);
    // Keep the whole trajectory on the canvas.
    const int travel = frames - 1;
    auto range = [travel](int extent, int size, float velocity) {
      return std::pair{velocity < 0 ? travel : 0, extent - size - (velocity > 0 ? travel : 0)};
    };
    if (auto [lo, hi] = range(width, r.width, r.velocity_x); hi < lo) r.velocity_x = 0;
    if (auto [lo, hi] = range(height, r.height, r.velocity_y); hi < lo) r.velocity_y = 0;
    const auto [xa, xb] = range(width, r.width, r.velocity_x);
    const auto [ya, yb] = range(height, r.height, r.velocity_y);
    r.x = xa + static_cast<int>(rng.below(static_cast<std::uint64_t>(xb - xa + 1)));
    r.y = ya + static_cast<int>(rng.below(static_cast<std::uint64_t>(yb - ya + 1)));
    spec.rectangles.push_back(r);
  }
  // Distinct corrupted frames.
  std::vector<int> order(frames);
  for (int i = 0; i < frames; ++i) order[i] = i;
  for (int i = frames - 1; i > 0; --i) std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i + 1))]);
  for (int i = 0; i < std::min(corrupted, frames); ++i) spec.corruptions.push_back({order[i], amplitude});
  std::sort(spec.corruptions.begin(), spec.corruptions.end(),
            [](const CorruptionSpec& a, const CorruptionSpec& b) { return a.frame < b.frame; });
  return spec;
}

}  // namespace ppm
