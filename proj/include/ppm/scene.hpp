#pragma once

#include <cstdint>
#include <vector>

#include "ppm/error.hpp"
#include "ppm/raster.hpp"

namespace ppm {

class SceneSpecError : public DataError {
 public:
  using DataError::DataError;
};

/// Fronto-parallel textured rectangle. Position is given for frame 0 in
/// left-view pixels and advances by `velocity_*` pixels per frame.
struct RectangleSpec {
  int x = 0;
  int y = 0;
  int width = 1;
  int height = 1;
  float disparity = 0.0f;
  float velocity_x = 0.0f;
  float velocity_y = 0.0f;
};

/// Additive uniform noise in [-amplitude, amplitude] on one frame's right view.
struct CorruptionSpec {
  int frame = 0;
  float amplitude = 0.0f;
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  int frames = 1;
  int channels = 1;
  float background_disparity = 0.0f;
  std::vector<RectangleSpec> rectangles;
  std::vector<CorruptionSpec> corruptions;

  /// Throws SceneSpecError when a rectangle leaves the canvas in any frame,
  /// a disparity is negative, or a corruption names a missing frame.
  void validate() const;
};

/// Renders a layered stereo video. Layers are composited front-most-wins
/// (larger disparity is nearer); the right view samples each layer shifted
/// left by its rounded disparity, so gt disparity is exact.
StereoVideoSequence generate_scene(const SceneSpec& spec, std::uint64_t seed);

/// Left-rectangle position in frame t, rounded to the nearest pixel.
std::pair<int, int> rectangle_origin(const RectangleSpec& rect, int t);

/// Random scene with `corrupted` noisy frames; used by the policy suite and
/// the acceptance tests.
SceneSpec random_scene_spec(std::uint64_t seed, int width, int height, int frames, int corrupted, float amplitude);

}  // namespace ppm
