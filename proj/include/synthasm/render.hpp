#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "synthasm/material.hpp"
#include "synthasm/scene.hpp"

namespace synthasm {

/// Pinhole camera. With zero rotation it sits at `position` looking down the
/// world -Z axis, image right = +X, image up = +Y. `rotation` uses the same
/// Euler convention as Pose.
struct Camera {
  Vec3 position = Vec3(0.0, 0.0, 1.0);
  Vec3 rotation = Vec3::Zero();
  /// Vertical field of view (rad).
  double fov_y = 0.8;
  int width = 640;
  int height = 640;

  void validate() const;
  /// Focal length in pixels.
  double focal_px() const;
  Vec3 to_camera(const Vec3& world) const;
};

struct ImagePoint {
  double x;
  double y;
  /// Distance along the camera's forward axis.
  double depth;
};

/// Pixel coordinates have their origin at the top-left image corner with y
/// pointing down; pixel (i, j) covers [i, i+1) x [j, j+1). Returns nullopt for
/// points with nonpositive forward depth.
std::optional<ImagePoint> project(const Camera& camera, const Vec3& point);

enum class LightKind { Directional, Point };

struct Light {
  LightKind kind = LightKind::Directional;
  /// Directional: the direction light travels. Point: the light position.
  /// Point lights are not attenuated with distance.
  Vec3 vector = Vec3(0.0, 0.0, -1.0);
  double intensity = 1.0;
  Rgb color = Rgb::Ones();

  void validate() const;
};

/// Shading inputs that depend on the surface location.
struct SurfacePoint {
  Vec3 world = Vec3::Zero();
  Vec3 local = Vec3::Zero();
};

/// Lambert diffuse plus a Blinn-Phong highlight, channels clamped to [0,1].
/// `normal` and `view` (surface towards eye) must be unit vectors.
Rgb shade(const Material& material, const Vec3& normal, const Vec3& view, std::span<const Light> lights,
          double ambient, const SurfacePoint& at = {});

struct RenderOptions {
  Rgb background = Rgb::Zero();
  bool cull_backfaces = false;
};

struct RenderOutput {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
  /// Forward depth, +inf where nothing was drawn.
  std::vector<double> depth;
  std::vector<std::uint32_t> instance_ids;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// Z-buffered rasterization of every object of the scene. Pixels covered by
/// an active object carry its id; the plane and the background carry kNoInstance.
RenderOutput rasterize(const Scene& scene, const Camera& camera, std::span<const Light> lights, double ambient,
                       const RenderOptions& options = {});

/// Pixels the object would cover if it were rendered alone (plane excluded).
/// Throws ValidationError for an unknown id.
std::int64_t solo_pixel_count(const Scene& scene, const Camera& camera, std::uint32_t object_id,
                              const RenderOptions& options = {});

}  // namespace synthasm
