#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ppm/raster.hpp"
#include "ppm/scene.hpp"

namespace ppm {

struct ManifestFrame {
  std::filesystem::path left;
  std::filesystem::path right;
  std::optional<std::filesystem::path> gt;
};

/// {"frames":[{"left":p,"right":p,"gt":p|null}], "width":W, "height":H}.
/// Relative paths are resolved against the manifest's directory on read.
struct Manifest {
  std::vector<ManifestFrame> frames;
  int width = 0;
  int height = 0;
};

Manifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Manifest read_manifest(const std::filesystem::path& path);
/// Paths inside the manifest directory are written relative to it.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Loads every raster named in the manifest and validates the result.
StereoVideoSequence load_sequence(const Manifest& manifest);

/// Writes left_/right_/gt_NNNN.pfm plus manifest.json into `dir`.
Manifest save_sequence(const std::filesystem::path& dir, const StereoVideoSequence& seq);

SceneSpec scene_spec_from_json(const nlohmann::json& doc);
nlohmann::json scene_spec_to_json(const SceneSpec& spec);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ppm
