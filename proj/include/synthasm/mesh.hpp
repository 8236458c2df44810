#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace synthasm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Indexed triangle geometry. Vertices are stored unwelded: every STL facet
/// contributes three vertices of its own.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  /// One entry per triangle. Unit length, or zero for degenerate triangles.
  std::vector<Vec3> normals;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
};

/// Rigid placement. Euler angles are extrinsic, applied about the fixed
/// X axis first, then Y, then Z: R = Rz * Ry * Rx.
struct Pose {
  Vec3 translation = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();

  Pose inverse() const;
  bool operator==(const Pose& other) const {
    return translation == other.translation && rotation == other.rotation;
  }
};

struct Aabb {
  Vec3 min;
  Vec3 max;

  Vec3 extent() const { return max - min; }
  Aabb translated(const Vec3& offset) const { return {min + offset, max + offset}; }
  Aabb merged(const Aabb& other) const { return {min.cwiseMin(other.min), max.cwiseMax(other.max)}; }
  /// Volume of the overlap region; zero when the boxes are disjoint or only touch.
  double intersection_volume(const Aabb& other) const;
};

/// Rotation matrix and translation, the working form of a Pose.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform from_pose(const Pose& pose);
  Vec3 apply(const Vec3& point) const { return rotation * point + translation; }
  /// this ∘ inner: applies `inner` first.
  RigidTransform compose(const RigidTransform& inner) const {
    return {rotation * inner.rotation, rotation * inner.translation + translation};
  }
};

Mat3 rotation_matrix(const Vec3& euler_xyz);
/// Inverse of rotation_matrix. Pitch is returned in [-pi/2, pi/2]; near gimbal
/// lock the roll angle absorbs whatever the yaw angle leaves over.
Vec3 euler_from_matrix(const Mat3& rotation);

/// Parses ASCII or binary STL and multiplies every coordinate by `scale`.
/// Throws DataError on truncated payloads, grammar violations (with the line
/// number) and files declaring zero triangles.
TriangleMesh parse_stl(std::span<const std::byte> bytes, double scale);
TriangleMesh load_stl(const std::string& path, double scale);

/// Serializes a mesh as binary STL (used by tests and asset tooling).
std::vector<std::byte> write_binary_stl(const TriangleMesh& mesh);

TriangleMesh transform(const TriangleMesh& mesh, const Pose& pose);
TriangleMesh transform(const TriangleMesh& mesh, const RigidTransform& xf);

/// Throws ValidationError for a mesh without vertices.
Aabb aabb(const TriangleMesh& mesh);

/// Geometric unit normal of triangle (a, b, c), or zero if it has no area.
Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace synthasm
