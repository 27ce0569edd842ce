#include "ppm/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "ppm/error.hpp"
#include "ppm/pfm.hpp"

namespace ppm {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string relative_to(const fs::path& base, const fs::path& p) {
  const fs::path rel = p.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

std::string frame_name(const char* prefix, int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d.pfm", prefix, t);
  return buf;
}

}  // namespace

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Manifest parse_manifest(const json& doc, const fs::path& base_dir) {
  try {
    Manifest m;
    m.width = doc.at("width").get<int>();
    m.height = doc.at("height").get<int>();
    for (const auto& f : doc.at("frames")) {
      ManifestFrame frame{resolve(base_dir, f.at("left").get<std::string>()),
                          resolve(base_dir, f.at("right").get<std::string>()), std::nullopt};
      if (f.contains("gt") && !f.at("gt").is_null()) frame.gt = resolve(base_dir, f.at("gt").get<std::string>());
      m.frames.push_back(std::move(frame));
    }
    if (m.frames.empty()) throw DataError("manifest: no frames");
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
}

Manifest read_manifest(const fs::path& path) { return parse_manifest(read_json_file(path), path.parent_path()); }

void write_manifest(const fs::path& path, const Manifest& manifest) {
  const fs::path base = path.parent_path();
  json frames = json::array();
  for (const auto& f : manifest.frames) {
    frames.push_back({{"left", relative_to(base, f.left)},
                      {"right", relative_to(base, f.right)},
                      {"gt", f.gt ? json(relative_to(base, *f.gt)) : json(nullptr)}});
  }
  const json doc = {{"frames", frames}, {"width", manifest.width}, {"height", manifest.height}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

StereoVideoSequence load_sequence(const Manifest& manifest) {
  StereoVideoSequence seq;
  const bool has_gt = !manifest.frames.empty() && manifest.frames.front().gt.has_value();
  if (has_gt) seq.gt_disparity.emplace();
  for (const auto& f : manifest.frames) {
    seq.frames.push_back({load_pfm(f.left), load_pfm(f.right)});
    if (has_gt != f.gt.has_value()) throw DataError("manifest: gt must be given for all frames or none");
    if (has_gt) seq.gt_disparity->push_back(load_pfm(*f.gt));
  }
  seq.validate();
  if (seq.width() != manifest.width || seq.height() != manifest.height)
    throw ShapeError("manifest: declared size does not match the rasters");
  return seq;
}

Manifest save_sequence(const fs::path& dir, const StereoVideoSequence& seq) {
  seq.validate();
  fs::create_directories(dir);
  Manifest m;
  m.width = seq.width();
  m.height = seq.height();
  for (int t = 0; t < seq.length(); ++t) {
    ManifestFrame f{dir / frame_name("left", t), dir / frame_name("right", t), std::nullopt};
    save_pfm(f.left, seq.frames[t].left);
    save_pfm(f.right, seq.frames[t].right);
    if (seq.gt_disparity) {
      f.gt = dir / frame_name("gt", t);
      save_pfm(*f.gt, (*seq.gt_disparity)[t]);
    }
    m.frames.push_back(std::move(f));
  }
  write_manifest(dir / "manifest.json", m);
  return m;
}

SceneSpec scene_spec_from_json(const json& doc) {
  try {
    SceneSpec s;
    s.width = doc.at("width").get<int>();
    s.height = doc.at("height").get<int>();
    s.frames = doc.at("frames").get<int>();
    s.channels = doc.value("channels", 1);
    s.background_disparity = doc.value("background_disparity", 0.0f);
    for (const auto& r : doc.value("rectangles", json::array())) {
      RectangleSpec rect;
      rect.x = r.at("x").get<int>();
      rect.y = r.at("y").get<int>();
      rect.width = r.at("w").get<int>();
      rect.height = r.at("h").get<int>();
      rect.disparity = r.at("disparity").get<float>();
      if (r.contains("velocity")) {
        rect.velocity_x = r.at("velocity").at(0).get<float>();
        rect.velocity_y = r.at("velocity").at(1).get<float>();
      }
      s.rectangles.push_back(rect);
    }
    for (const auto& c : doc.value("corruptions", json::array()))
      s.corruptions.push_back({c.at("frame").get<int>(), c.at("amplitude").get<float>()});
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw SceneSpecError(std::string("scene spec: ") + e.what());
  }
}

json scene_spec_to_json(const SceneSpec& spec) {
  json rects = json::array();
  for (const auto& r : spec.rectangles)
    rects.push_back({{"x", r.x},
                     {"y", r.y},
                     {"w", r.width},
                     {"h", r.height},
                     {"disparity", r.disparity},
                     {"velocity", {r.velocity_x, r.velocity_y}}});
  json corr = json::array();
  for (const auto& c : spec.corruptions) corr.push_back({{"frame", c.frame}, {"amplitude", c.amplitude}});
  return {{"width", spec.width},
          {"height", spec.height},
          {"frames", spec.frames},
          {"channels", spec.channels},
          {"background_disparity", spec.background_disparity},
          {"rectangles", rects},
          {"corruptions", corr}};
}

}  // namespace ppm
