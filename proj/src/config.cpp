#include "synthasm/config.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <set>

#include <json.hpp>

#include "synthasm/error.hpp"

namespace synthasm {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw ValidationError("config " + path + ": " + what);
}

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string child(const std::string& path, std::size_t index) { return path + "[" + std::to_string(index) + "]"; }

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) invalid(path.empty() ? "(root)" : path, "expected an object");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) invalid(child(path, key), "unknown field");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const char* key, const std::string& path) {
  const json* v = find(obj, key);
  if (v == nullptr) invalid(child(path, key), "missing required field");
  return *v;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) invalid(path, "expected a number");
  return v.get<double>();
}

std::int64_t integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) invalid(path, "expected an integer");
  return v.get<std::int64_t>();
}

bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) invalid(path, "expected true or false");
  return v.get<bool>();
}

std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) invalid(path, "expected a string");
  return v.get<std::string>();
}

Vec3 vec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) invalid(path, "expected an array of 3 numbers");
  return {number(v[0], child(path, 0)), number(v[1], child(path, 1)), number(v[2], child(path, 2))};
}

Interval interval(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) invalid(path, "expected [lower, upper]");
  Interval iv{number(v[0], child(path, 0)), number(v[1], child(path, 1))};
  if (!(iv.lo <= iv.hi)) invalid(path, "lower bound exceeds upper bound");
  return iv;
}

double optional_number(const json& obj, const char* key, const std::string& path, double fallback) {
  const json* v = find(obj, key);
  return v ? number(*v, child(path, key)) : fallback;
}

template <typename Fn>
void validated(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    invalid(path, e.what());
  }
}

Material parse_material(const json& j, const std::string& path) {
  check_keys(j, path, {"base_color", "texture", "specular_strength", "shininess", "metallic"});
  Material m;
  if (const json* v = find(j, "base_color")) m.base_color = vec3(*v, child(path, "base_color"));
  m.specular_strength = optional_number(j, "specular_strength", path, m.specular_strength);
  m.shininess = optional_number(j, "shininess", path, m.shininess);
  if (const json* v = find(j, "metallic")) m.metallic = boolean(*v, child(path, "metallic"));
  if (const json* t = find(j, "texture")) {
    const std::string tpath = child(path, "texture");
    if (!t->is_object()) invalid(tpath, "expected an object");
    const std::string type = string(require(*t, "type", tpath), child(tpath, "type"));
    if (type == "wave") {
      check_keys(*t, tpath, {"type", "axis", "period", "contrast"});
      WaveTexture wave;
      if (const json* a = find(*t, "axis")) wave.axis = vec3(*a, child(tpath, "axis"));
      wave.period = optional_number(*t, "period", tpath, wave.period);
      wave.contrast = optional_number(*t, "contrast", tpath, wave.contrast);
      m.texture = wave;
    } else if (type == "checker") {
      check_keys(*t, tpath, {"type", "cell"});
      m.texture = CheckerTexture{optional_number(*t, "cell", tpath, CheckerTexture{}.cell)};
    } else if (type == "none") {
      check_keys(*t, tpath, {"type"});
    } else {
      invalid(child(tpath, "type"), "expected \"wave\", \"checker\" or \"none\"");
    }
  }
  validated(path, [&] { m.validate(); });
  return m;
}

RandomizationRange parse_range(const json& j, const std::string& path, RandomizationRange range) {
  check_keys(j, path, {"x", "y", "z", "rx", "ry", "rz"});
  const std::pair<const char*, Interval*> slots[] = {{"x", &range.x},   {"y", &range.y},   {"z", &range.z},
                                                     {"rx", &range.rx}, {"ry", &range.ry}, {"rz", &range.rz}};
  for (const auto& [key, slot] : slots) {
    if (const json* v = find(j, key)) *slot = interval(*v, child(path, key));
  }
  return range;
}

Pose parse_pose(const json& j, const std::string& path) {
  check_keys(j, path, {"translation", "rotation"});
  Pose pose;
  if (const json* v = find(j, "translation")) pose.translation = vec3(*v, child(path, "translation"));
  if (const json* v = find(j, "rotation")) pose.rotation = vec3(*v, child(path, "rotation"));
  return pose;
}

Light parse_light(const json& j, const std::string& path) {
  check_keys(j, path, {"type", "direction", "position", "intensity", "color"});
  Light light;
  const std::string type = string(require(j, "type", path), child(path, "type"));
  if (type == "directional") {
    light.kind = LightKind::Directional;
    light.vector = vec3(require(j, "direction", path), child(path, "direction"));
  } else if (type == "point") {
    light.kind = LightKind::Point;
    light.vector = vec3(require(j, "position", path), child(path, "position"));
  } else {
    invalid(child(path, "type"), "expected \"directional\" or \"point\"");
  }
  light.intensity = optional_number(j, "intensity", path, light.intensity);
  if (const json* v = find(j, "color")) light.color = vec3(*v, child(path, "color"));
  validated(path, [&] { light.validate(); });
  return light;
}

struct Asset {
  std::string mesh_key;
  std::string material;
};

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineConfig parse_config(std::string_view json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "", {"seed", "image_count", "image_prefix", "output_dir", "materials", "assets", "categories",
                        "randomization", "plane", "camera", "lights", "ambient", "background_color", "render",
                        "physics", "postprocess"});

  PipelineConfig cfg;
  cfg.hash = fnv1a_hex(json_text);

  if (const json* v = find(root, "seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      invalid("seed", "expected a nonnegative integer");
    }
    cfg.seed = v->get<std::uint64_t>();
  }
  const std::int64_t count = integer(require(root, "image_count", ""), "image_count");
  if (count < 1) invalid("image_count", "must be at least 1");
  cfg.image_count = static_cast<int>(count);
  if (const json* v = find(root, "image_prefix")) cfg.image_prefix = string(*v, "image_prefix");
  if (const json* v = find(root, "output_dir")) cfg.output_dir = base_dir / string(*v, "output_dir");

  const json& materials = require(root, "materials", "");
  if (!materials.is_object()) invalid("materials", "expected an object");
  for (const auto& [name, m] : materials.items()) cfg.scene.materials[name] = parse_material(m, child("materials", name));

  std::map<std::string, Asset> assets;
  const json& asset_table = require(root, "assets", "");
  if (!asset_table.is_object() || asset_table.empty()) invalid("assets", "expected a non-empty object");
  for (const auto& [name, a] : asset_table.items()) {
    const std::string path = child("assets", name);
    check_keys(a, path, {"mesh", "scale", "material"});
    const std::string mesh_file = string(require(a, "mesh", path), child(path, "mesh"));
    const double scale = number(require(a, "scale", path), child(path, "scale"));
    if (!(scale > 0.0)) invalid(child(path, "scale"), "must be positive");
    const std::string material = string(require(a, "material", path), child(path, "material"));
    if (!cfg.scene.materials.count(material)) invalid(child(path, "material"), "unknown material '" + material + "'");
    const fs::path file = base_dir / mesh_file;
    if (!fs::exists(file)) invalid(child(path, "mesh"), "file '" + file.string() + "' does not exist");
    cfg.scene.meshes[name] = std::make_shared<const TriangleMesh>(load_stl(file.string(), scale));
    assets[name] = {name, material};
  }

  RandomizationRange default_range;
  if (const json* v = find(root, "randomization")) default_range = parse_range(*v, "randomization", default_range);

  const json& categories = require(root, "categories", "");
  if (!categories.is_array() || categories.empty()) invalid("categories", "expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const std::string path = child("categories", i);
    const json& c = categories[i];
    check_keys(c, path, {"name", "asset", "parts", "count", "randomization"});
    CategorySpec cat;
    cat.name = string(require(c, "name", path), child(path, "name"));
    if (!names.insert(cat.name).second) invalid(child(path, "name"), "duplicate category name '" + cat.name + "'");

    const auto add_part = [&](const json& p, const std::string& ppath) {
      PartSpec part;
      if (p.is_string()) {
        part.mesh = p.get<std::string>();
      } else {
        check_keys(p, ppath, {"asset", "material", "offset"});
        part.mesh = string(require(p, "asset", ppath), child(ppath, "asset"));
        if (const json* o = find(p, "offset")) part.offset = parse_pose(*o, child(ppath, "offset"));
      }
      const auto asset = assets.find(part.mesh);
      if (asset == assets.end()) invalid(ppath, "unknown asset '" + part.mesh + "'");
      part.material = asset->second.material;
      if (p.is_object()) {
        if (const json* m = find(p, "material")) {
          part.material = string(*m, child(ppath, "material"));
          if (!cfg.scene.materials.count(part.material)) {
            invalid(child(ppath, "material"), "unknown material '" + part.material + "'");
          }
        }
      }
      cat.parts.push_back(part);
    };
    const json* single = find(c, "asset");
    const json* parts = find(c, "parts");
    if ((single == nullptr) == (parts == nullptr)) invalid(path, "exactly one of 'asset' or 'parts' is required");
    if (single != nullptr) {
      if (!single->is_string()) invalid(child(path, "asset"), "expected a string");
      add_part(*single, child(path, "asset"));
    } else {
      if (!parts->is_array() || parts->empty()) invalid(child(path, "parts"), "expected a non-empty array");
      for (std::size_t p = 0; p < parts->size(); ++p) add_part((*parts)[p], child(child(path, "parts"), p));
    }

    if (const json* v = find(c, "count")) {
      const std::int64_t n = integer(*v, child(path, "count"));
      if (n < 0) invalid(child(path, "count"), "must be nonnegative");
      cat.count = static_cast<int>(n);
    }
    cat.range = default_range;
    if (const json* v = find(c, "randomization")) cat.range = parse_range(*v, child(path, "randomization"), default_range);
    cfg.category_names.push_back(cat.name);
    cfg.scene.categories.push_back(std::move(cat));
  }

  const json& plane = require(root, "plane", "");
  check_keys(plane, "plane", {"size", "z", "material"});
  cfg.scene.plane.size = optional_number(plane, "size", "plane", cfg.scene.plane.size);
  if (!(cfg.scene.plane.size > 0.0)) invalid("plane.size", "must be positive");
  cfg.scene.plane.z = optional_number(plane, "z", "plane", cfg.scene.plane.z);
  cfg.scene.plane.material = string(require(plane, "material", "plane"), "plane.material");
  if (!cfg.scene.materials.count(cfg.scene.plane.material)) {
    invalid("plane.material", "unknown material '" + cfg.scene.plane.material + "'");
  }

  const json& camera = require(root, "camera", "");
  check_keys(camera, "camera", {"position", "rotation", "fov", "resolution"});
  cfg.camera.position = vec3(require(camera, "position", "camera"), "camera.position");
  if (const json* v = find(camera, "rotation")) cfg.camera.rotation = vec3(*v, "camera.rotation");
  cfg.camera.fov_y = optional_number(camera, "fov", "camera", cfg.camera.fov_y);
  if (const json* v = find(camera, "resolution")) {
    if (!v->is_array() || v->size() != 2) invalid("camera.resolution", "expected [width, height]");
    cfg.camera.width = static_cast<int>(integer((*v)[0], "camera.resolution[0]"));
    cfg.camera.height = static_cast<int>(integer((*v)[1], "camera.resolution[1]"));
  }
  validated("camera", [&] { cfg.camera.validate(); });

  if (const json* v = find(root, "lights")) {
    if (!v->is_array()) invalid("lights", "expected an array");
    for (std::size_t i = 0; i < v->size(); ++i) cfg.lights.push_back(parse_light((*v)[i], child("lights", i)));
  }
  cfg.ambient = optional_number(root, "ambient", "", cfg.ambient);
  if (!(cfg.ambient >= 0.0)) invalid("ambient", "must be nonnegative");
  if (const json* v = find(root, "background_color")) cfg.render.background = vec3(*v, "background_color");
  if (const json* v = find(root, "render")) {
    check_keys(*v, "render", {"cull_backfaces"});
    if (const json* c = find(*v, "cull_backfaces")) cfg.render.cull_backfaces = boolean(*c, "render.cull_backfaces");
  }

  if (const json* v = find(root, "physics")) {
    check_keys(*v, "physics", {"max_attempts", "collision_epsilon"});
    if (const json* a = find(*v, "max_attempts")) {
      const std::int64_t n = integer(*a, "physics.max_attempts");
      if (n < 1) invalid("physics.max_attempts", "must be at least 1");
      cfg.scene.max_attempts = static_cast<int>(n);
    }
    cfg.scene.collision_epsilon = optional_number(*v, "collision_epsilon", "physics", cfg.scene.collision_epsilon);
    if (!(cfg.scene.collision_epsilon >= 0.0)) invalid("physics.collision_epsilon", "must be nonnegative");
  }

  if (const json* v = find(root, "postprocess")) {
    check_keys(*v, "postprocess", {"min_visibility", "min_pixels"});
    cfg.postprocess.min_visibility = optional_number(*v, "min_visibility", "postprocess", cfg.postprocess.min_visibility);
    if (!(cfg.postprocess.min_visibility >= 0.0 && cfg.postprocess.min_visibility <= 1.0)) {
      invalid("postprocess.min_visibility", "must lie in [0,1]");
    }
    if (const json* p = find(*v, "min_pixels")) {
      cfg.postprocess.min_pixels = integer(*p, "postprocess.min_pixels");
      if (cfg.postprocess.min_pixels < 0) invalid("postprocess.min_pixels", "must be nonnegative");
    }
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, path.parent_path());
}

}  // namespace synthasm
