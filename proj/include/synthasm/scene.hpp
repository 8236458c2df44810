#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "synthasm/material.hpp"
#include "synthasm/mesh.hpp"

namespace synthasm {

/// Instance id written for background and plane pixels; also the plane's object id.
inline constexpr std::uint32_t kNoInstance = 0;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-component sampling intervals. x/y are the placement area, z the drop
/// height, rx/ry/rz the Euler angles (rad).
struct RandomizationRange {
  Interval x, y, z, rx, ry, rz;

  void validate() const;
};

/// One rigid mesh of an object. Composite objects (an assembly annotated as a
/// single class) have several parts sharing the object's pose.
struct ObjectPart {
  std::shared_ptr<const TriangleMesh> mesh;
  Material material;
  RigidTransform offset;
};

struct SceneObject {
  std::uint32_t id = kNoInstance;
  int class_id = -1;
  std::vector<ObjectPart> parts;
  Pose pose;
  bool active = true;
  bool collided = false;

  RigidTransform part_transform(const ObjectPart& part) const {
    return RigidTransform::from_pose(pose).compose(part.offset);
  }
  Aabb world_aabb() const;
  double min_z() const;
};

struct Scene {
  std::vector<SceneObject> objects;
  double plane_z = 0.0;
  std::uint64_t rng_seed = 0;
  int scene_index = 0;

  /// nullptr when no object has this id.
  const SceneObject* find(std::uint32_t id) const;
  std::size_t active_count() const;
};

struct PartSpec {
  std::string mesh;
  std::string material;
  Pose offset;
};

struct CategorySpec {
  std::string name;
  std::vector<PartSpec> parts;
  RandomizationRange range;
  /// Instances of this category placed in every scene.
  int count = 1;
};

struct PlaneSpec {
  double size = 1.0;
  double z = 0.0;
  std::string material;
};

struct SceneConfig {
  std::map<std::string, std::shared_ptr<const TriangleMesh>> meshes;
  std::map<std::string, Material> materials;
  std::vector<CategorySpec> categories;
  PlaneSpec plane;
  int max_attempts = 20;
  double collision_epsilon = 1e-9;
};

using Rng = std::mt19937_64;

/// Seed of the PRNG stream for one scene: splitmix64(seed ^ splitmix64(scene_index)).
/// Streams of distinct scene indices are independent of generation order.
std::uint64_t derive_scene_seed(std::uint64_t seed, std::uint64_t scene_index);
std::uint64_t splitmix64(std::uint64_t x);

/// lo + (hi - lo) * u with u drawn from the top 53 bits of one PRNG output.
double sample_uniform(Rng& rng, const Interval& interval);

/// Draws x, y, z, rx, ry, rz in that order (exactly six PRNG draws).
Pose sample_pose(const RandomizationRange& range, Rng& rng);

/// Drops the object along -z until its lowest vertex touches plane_z.
Pose settle(const SceneObject& object, double plane_z);

/// Ids of active objects whose world AABB overlaps another active object's
/// with intersection volume greater than `epsilon`.
std::set<std::uint32_t> detect_collisions(std::span<const SceneObject> objects, double epsilon = 1e-9);

/// Square plane of side `size` centred on the origin at z = 0, two triangles.
TriangleMesh make_plane_mesh(double size);

/// Builds one randomized, settled scene. Object 0 is the passive plane;
/// active objects follow in category order with ids 1..N.
Scene build_scene(const SceneConfig& config, std::uint64_t seed, int scene_index);

}  // namespace synthasm
