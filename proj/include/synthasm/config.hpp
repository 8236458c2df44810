#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "synthasm/annotate.hpp"
#include "synthasm/render.hpp"
#include "synthasm/scene.hpp"

namespace synthasm {

/// Everything one pipeline run needs, resolved from a single JSON file.
/// The schema is documented in docs/config.md.
struct PipelineConfig {
  SceneConfig scene;
  /// In class-index order.
  std::vector<std::string> category_names;
  Camera camera;
  std::vector<Light> lights;
  double ambient = 0.2;
  RenderOptions render;
  int image_count = 1;
  std::uint64_t seed = 0;
  FilterThresholds postprocess;
  std::filesystem::path output_dir = "dataset";
  std::string image_prefix = "img_";
  /// FNV-1a 64 of the config file bytes, 16 hex digits.
  std::string hash;
};

/// Relative paths (meshes, output dir) resolve against `base_dir`. Meshes are
/// loaded eagerly. Throws ValidationError naming the offending field path.
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace synthasm
