#include "synthasm/scene.hpp"

#include <algorithm>
#include <limits>

#include "synthasm/error.hpp"

namespace synthasm {

namespace {

void check_interval(const Interval& iv, const char* name) {
  if (!(iv.lo <= iv.hi)) {
    throw ValidationError(std::string("randomization interval '") + name + "' has lower bound above upper bound");
  }
}

ObjectPart resolve_part(const SceneConfig& config, const CategorySpec& category, std::size_t index) {
  const PartSpec& spec = category.parts[index];
  const auto where = "category '" + category.name + "' part " + std::to_string(index);
  const auto mesh = config.meshes.find(spec.mesh);
  if (mesh == config.meshes.end() || !mesh->second) {
    throw ValidationError(where + " references unknown mesh '" + spec.mesh + "'");
  }
  const auto material = config.materials.find(spec.material);
  if (material == config.materials.end()) {
    throw ValidationError(where + " references unknown material '" + spec.material + "'");
  }
  return {mesh->second, material->second, RigidTransform::from_pose(spec.offset)};
}

}  // namespace

void RandomizationRange::validate() const {
  check_interval(x, "x");
  check_interval(y, "y");
  check_interval(z, "z");
  check_interval(rx, "rx");
  check_interval(ry, "ry");
  check_interval(rz, "rz");
}

Aabb SceneObject::world_aabb() const {
  Aabb box{Vec3::Constant(std::numeric_limits<double>::infinity()),
           Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& part : parts) {
    const RigidTransform xf = part_transform(part);
    for (const auto& v : part.mesh->vertices) {
      const Vec3 w = xf.apply(v);
      box.min = box.min.cwiseMin(w);
      box.max = box.max.cwiseMax(w);
    }
  }
  return box;
}

double SceneObject::min_z() const {
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& part : parts) {
    const RigidTransform xf = part_transform(part);
    for (const auto& v : part.mesh->vertices) lowest = std::min(lowest, xf.apply(v).z());
  }
  return lowest;
}

const SceneObject* Scene::find(std::uint32_t id) const {
  for (const auto& obj : objects) {
    if (obj.id == id) return &obj;
  }
  return nullptr;
}

std::size_t Scene::active_count() const {
  return static_cast<std::size_t>(std::count_if(objects.begin(), objects.end(), [](const auto& o) { return o.active; }));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_scene_seed(std::uint64_t seed, std::uint64_t scene_index) {
  return splitmix64(seed ^ splitmix64(scene_index));
}

double sample_uniform(Rng& rng, const Interval& interval) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return interval.lo + (interval.hi - interval.lo) * u;
}

Pose sample_pose(const RandomizationRange& range, Rng& rng) {
  Pose pose;
  pose.translation.x() = sample_uniform(rng, range.x);
  pose.translation.y() = sample_uniform(rng, range.y);
  pose.translation.z() = sample_uniform(rng, range.z);
  pose.rotation.x() = sample_uniform(rng, range.rx);
  pose.rotation.y() = sample_uniform(rng, range.ry);
  pose.rotation.z() = sample_uniform(rng, range.rz);
  return pose;
}

Pose settle(const SceneObject& object, double plane_z) {
  Pose pose = object.pose;
  pose.translation.z() -= object.min_z() - plane_z;
  return pose;
}

std::set<std::uint32_t> detect_collisions(std::span<const SceneObject> objects, double epsilon) {
  std::vector<std::pair<std::uint32_t, Aabb>> boxes;
  for (const auto& obj : objects) {
    if (obj.active) boxes.emplace_back(obj.id, obj.world_aabb());
  }
  std::set<std::uint32_t> hits;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (boxes[i].second.intersection_volume(boxes[j].second) > epsilon) {
        hits.insert(boxes[i].first);
        hits.insert(boxes[j].first);
      }
    }
  }
  return hits;
}

TriangleMesh make_plane_mesh(double size) {
  const double h = size / 2.0;
  TriangleMesh mesh;
  mesh.vertices = {{-h, -h, 0.0}, {h, -h, 0.0}, {h, h, 0.0}, {-h, h, 0.0}};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  mesh.normals = {Vec3::UnitZ(), Vec3::UnitZ()};
  return mesh;
}

Scene build_scene(const SceneConfig& config, std::uint64_t seed, int scene_index) {
  if (config.max_attempts < 1) throw ValidationError("max_attempts must be at least 1");
  if (!(config.plane.size > 0.0)) throw ValidationError("plane size must be positive");
  const auto plane_material = config.materials.find(config.plane.material);
  if (plane_material == config.materials.end()) {
    throw ValidationError("plane references unknown material '" + config.plane.material + "'");
  }

  Scene scene;
  scene.plane_z = config.plane.z;
  scene.scene_index = scene_index;
  scene.rng_seed = derive_scene_seed(seed, static_cast<std::uint64_t>(scene_index));

  SceneObject plane;
  plane.id = kNoInstance;
  plane.active = false;
  plane.parts.push_back({std::make_shared<const TriangleMesh>(make_plane_mesh(config.plane.size)),
                         plane_material->second, RigidTransform{}});
  plane.pose.translation = Vec3(0.0, 0.0, config.plane.z);
  scene.objects.push_back(std::move(plane));

  Rng rng(scene.rng_seed);
  std::vector<Aabb> placed;
  std::uint32_t next_id = 1;
  for (std::size_t class_id = 0; class_id < config.categories.size(); ++class_id) {
    const CategorySpec& category = config.categories[class_id];
    if (category.parts.empty()) throw ValidationError("category '" + category.name + "' has no parts");
    if (category.count < 0) throw ValidationError("category '" + category.name + "' has a negative count");
    category.range.validate();

    SceneObject prototype;
    prototype.class_id = static_cast<int>(class_id);
    for (std::size_t p = 0; p < category.parts.size(); ++p) prototype.parts.push_back(resolve_part(config, category, p));

    for (int k = 0; k < category.count; ++k) {
      SceneObject obj = prototype;
      obj.id = next_id++;
      Aabb box{};
      for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        obj.pose = sample_pose(category.range, rng);
        obj.pose = settle(obj, scene.plane_z);
        box = obj.world_aabb();
        const bool clear = std::none_of(placed.begin(), placed.end(), [&](const Aabb& other) {
          return box.intersection_volume(other) > config.collision_epsilon;
        });
        if (clear) break;
      }
      placed.push_back(box);
      scene.objects.push_back(std::move(obj));
    }
  }

  const auto collided = detect_collisions(scene.objects, config.collision_epsilon);
  for (auto& obj : scene.objects) obj.collided = obj.active && collided.count(obj.id) > 0;
  return scene;
}

}  // namespace synthasm
