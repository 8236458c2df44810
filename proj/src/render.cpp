#include "synthasm/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "synthasm/error.hpp"

namespace synthasm {

namespace {

constexpr double kNearPlane = 1e-4;
// Relative depth offset applied to the passive plane so coplanar object faces win.
constexpr double kPlaneDepthBias = 1e-9;

struct ClipVertex {
  Vec3 cam;
  Vec3 world;
  Vec3 local;
};

ClipVertex lerp(const ClipVertex& a, const ClipVertex& b, double t) {
  return {a.cam + t * (b.cam - a.cam), a.world + t * (b.world - a.world), a.local + t * (b.local - a.local)};
}

double forward_depth(const Vec3& cam) { return -cam.z(); }

struct ScreenVertex {
  double x, y, inv_depth;
  const ClipVertex* src;
};

double edge(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Top-left fill convention for the winding produced by a positive `edge` area
// in y-down screen space.
bool owns_boundary(const ScreenVertex& a, const ScreenVertex& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

bool inside(double w, bool owns) { return w > 0.0 || (w == 0.0 && owns); }

Rgb to_unit(const Rgb& c) { return c.cwiseMax(0.0).cwiseMin(1.0); }

class Rasterizer {
 public:
  Rasterizer(const Camera& camera, RenderOutput& out, const RenderOptions& options)
      : camera_(camera),
        out_(out),
        options_(options),
        cam_rotation_t_(rotation_matrix(camera.rotation).transpose()),
        focal_(camera.focal_px()),
        cx_(camera.width / 2.0),
        cy_(camera.height / 2.0) {}

  // With `shaded == false` only ids and depth are written.
  void draw(const SceneObject& object, std::uint32_t write_id, std::span<const Light> lights, double ambient,
            bool shaded) {
    write_id_ = write_id;
    depth_scale_ = object.active ? 1.0 : 1.0 + kPlaneDepthBias;
    lights_ = lights;
    ambient_ = ambient;
    shaded_ = shaded;
    for (const auto& part : object.parts) {
      const RigidTransform xf = object.part_transform(part);
      material_ = &part.material;
      const TriangleMesh& mesh = *part.mesh;
      for (const auto& tri : mesh.triangles) {
        std::array<ClipVertex, 3> v;
        for (int k = 0; k < 3; ++k) {
          const Vec3& local = mesh.vertices[tri[k]];
          const Vec3 world = xf.apply(local);
          v[k] = {cam_rotation_t_ * (world - camera_.position), world, local};
        }
        draw_triangle(v);
      }
    }
  }

 private:
  void draw_triangle(const std::array<ClipVertex, 3>& v) {
    Vec3 normal = triangle_normal(v[0].world, v[1].world, v[2].world);
    if (normal.isZero()) return;
    const Vec3 centroid = (v[0].world + v[1].world + v[2].world) / 3.0;
    if (normal.dot(camera_.position - centroid) < 0.0) {
      if (options_.cull_backfaces) return;
      normal = -normal;
    }
    normal_ = normal;

    // Sutherland-Hodgman against the near plane; at most four vertices survive.
    std::array<ClipVertex, 4> poly;
    std::size_t n = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      const ClipVertex& a = v[i];
      const ClipVertex& b = v[(i + 1) % 3];
      const double da = forward_depth(a.cam) - kNearPlane;
      const double db = forward_depth(b.cam) - kNearPlane;
      if (da >= 0.0) poly[n++] = a;
      if ((da >= 0.0) != (db >= 0.0)) poly[n++] = lerp(a, b, da / (da - db));
    }
    for (std::size_t i = 1; i + 1 < n; ++i) raster(poly[0], poly[i], poly[i + 1]);
  }

  ScreenVertex to_screen(const ClipVertex& v) const {
    const double d = forward_depth(v.cam);
    return {cx_ + focal_ * v.cam.x() / d, cy_ - focal_ * v.cam.y() / d, 1.0 / d, &v};
  }

  void raster(const ClipVertex& a, const ClipVertex& b, const ClipVertex& c) {
    ScreenVertex s0 = to_screen(a);
    ScreenVertex s1 = to_screen(b);
    ScreenVertex s2 = to_screen(c);
    double area = edge(s0.x, s0.y, s1.x, s1.y, s2.x, s2.y);
    if (!(std::abs(area) > 1e-12)) return;
    if (area < 0.0) {
      std::swap(s1, s2);
      area = -area;
    }

    const double min_x = std::min({s0.x, s1.x, s2.x});
    const double max_x = std::max({s0.x, s1.x, s2.x});
    const double min_y = std::min({s0.y, s1.y, s2.y});
    const double max_y = std::max({s0.y, s1.y, s2.y});
    // Pixel centres sit at i + 0.5; clamping first keeps far-off vertices from overflowing int.
    const auto span_lo = [](double v, int limit) {
      return static_cast<int>(std::ceil(std::clamp(v - 0.5, -1.0, double(limit))));
    };
    const auto span_hi = [](double v, int limit) {
      return static_cast<int>(std::floor(std::clamp(v - 0.5, -1.0, double(limit))));
    };
    const int x0 = std::max(0, span_lo(min_x, out_.width));
    const int x1 = std::min(out_.width - 1, span_hi(max_x, out_.width));
    const int y0 = std::max(0, span_lo(min_y, out_.height));
    const int y1 = std::min(out_.height - 1, span_hi(max_y, out_.height));
    if (x0 > x1 || y0 > y1) return;

    const bool own0 = owns_boundary(s1, s2);
    const bool own1 = owns_boundary(s2, s0);
    const bool own2 = owns_boundary(s0, s1);

    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double w0 = edge(s1.x, s1.y, s2.x, s2.y, px, py);
        const double w1 = edge(s2.x, s2.y, s0.x, s0.y, px, py);
        const double w2 = edge(s0.x, s0.y, s1.x, s1.y, px, py);
        if (!inside(w0, own0) || !inside(w1, own1) || !inside(w2, own2)) continue;

        const double b0 = w0 / area * s0.inv_depth;
        const double b1 = w1 / area * s1.inv_depth;
        const double b2 = w2 / area * s2.inv_depth;
        const double inv_depth = b0 + b1 + b2;
        const double depth = 1.0 / inv_depth;
        const std::size_t idx = out_.index(x, y);
        if (!(depth * depth_scale_ < out_.depth[idx])) continue;

        out_.depth[idx] = depth;
        out_.instance_ids[idx] = write_id_;
        if (!shaded_) continue;

        SurfacePoint at;
        at.world = (b0 * s0.src->world + b1 * s1.src->world + b2 * s2.src->world) / inv_depth;
        at.local = (b0 * s0.src->local + b1 * s1.src->local + b2 * s2.src->local) / inv_depth;
        const Vec3 view = (camera_.position - at.world).normalized();
        const Rgb color = shade(*material_, normal_, view, lights_, ambient_, at);
        for (int ch = 0; ch < 3; ++ch) {
          out_.rgb[3 * idx + ch] = static_cast<std::uint8_t>(std::lround(color[ch] * 255.0));
        }
      }
    }
  }

  const Camera& camera_;
  RenderOutput& out_;
  const RenderOptions& options_;
  Mat3 cam_rotation_t_;
  double focal_;
  double cx_;
  double cy_;

  std::uint32_t write_id_ = kNoInstance;
  double depth_scale_ = 1.0;
  std::span<const Light> lights_;
  double ambient_ = 0.0;
  bool shaded_ = false;
  const Material* material_ = nullptr;
  Vec3 normal_ = Vec3::UnitZ();
};

RenderOutput blank_output(const Camera& camera, const Rgb& background) {
  RenderOutput out;
  out.width = camera.width;
  out.height = camera.height;
  const std::size_t n = static_cast<std::size_t>(camera.width) * camera.height;
  out.depth.assign(n, std::numeric_limits<double>::infinity());
  out.instance_ids.assign(n, kNoInstance);
  out.rgb.resize(3 * n);
  const Rgb bg = to_unit(background);
  for (std::size_t i = 0; i < n; ++i) {
    for (int ch = 0; ch < 3; ++ch) out.rgb[3 * i + ch] = static_cast<std::uint8_t>(std::lround(bg[ch] * 255.0));
  }
  return out;
}

}  // namespace

void Camera::validate() const {
  if (!(fov_y > 0.0 && fov_y < std::numbers::pi)) throw ValidationError("camera fov must lie in (0, pi)");
  if (width < 1 || height < 1) throw ValidationError("camera resolution must be at least 1x1");
  if (!position.allFinite() || !rotation.allFinite()) throw ValidationError("camera pose must be finite");
}

double Camera::focal_px() const { return (height / 2.0) / std::tan(fov_y / 2.0); }

Vec3 Camera::to_camera(const Vec3& world) const { return rotation_matrix(rotation).transpose() * (world - position); }

std::optional<ImagePoint> project(const Camera& camera, const Vec3& point) {
  const Vec3 cam = camera.to_camera(point);
  const double depth = forward_depth(cam);
  if (!(depth > 0.0)) return std::nullopt;
  const double f = camera.focal_px();
  return ImagePoint{camera.width / 2.0 + f * cam.x() / depth, camera.height / 2.0 - f * cam.y() / depth, depth};
}

void Light::validate() const {
  if (!(intensity >= 0.0)) throw ValidationError("light intensity must be nonnegative");
  if (kind == LightKind::Directional && !(vector.norm() > 0.0)) {
    throw ValidationError("directional light direction must be non-zero");
  }
  for (int i = 0; i < 3; ++i) {
    if (!(color[i] >= 0.0 && color[i] <= 1.0)) throw ValidationError("light color channels must lie in [0,1]");
  }
}

Rgb shade(const Material& material, const Vec3& normal, const Vec3& view, std::span<const Light> lights,
          double ambient, const SurfacePoint& at) {
  const Rgb albedo = material.albedo(at.local);
  const double diffuse_weight = material.metallic ? 0.3 : 1.0;
  const Rgb highlight_tint = material.metallic ? albedo : Rgb::Ones();
  Rgb color = ambient * albedo;
  for (const Light& light : lights) {
    Vec3 to_light;
    if (light.kind == LightKind::Directional) {
      to_light = -light.vector.normalized();
    } else {
      const Vec3 d = light.vector - at.world;
      const double len = d.norm();
      if (!(len > 0.0)) continue;
      to_light = d / len;
    }
    const double n_dot_l = normal.dot(to_light);
    if (n_dot_l <= 0.0) continue;
    color += light.intensity * n_dot_l * diffuse_weight * light.color.cwiseProduct(albedo);
    if (material.specular_strength > 0.0) {
      const Vec3 half = (to_light + view).normalized();
      const double n_dot_h = std::max(0.0, normal.dot(half));
      const double lobe = material.specular_strength * light.intensity * std::pow(n_dot_h, material.shininess);
      color += lobe * light.color.cwiseProduct(highlight_tint);
    }
  }
  return to_unit(color);
}

RenderOutput rasterize(const Scene& scene, const Camera& camera, std::span<const Light> lights, double ambient,
                       const RenderOptions& options) {
  camera.validate();
  RenderOutput out = blank_output(camera, options.background);
  Rasterizer raster(camera, out, options);
  // Active objects first so that they win exact depth ties with the plane they rest on.
  for (const auto& obj : scene.objects) {
    if (obj.active) raster.draw(obj, obj.id, lights, ambient, true);
  }
  for (const auto& obj : scene.objects) {
    if (!obj.active) raster.draw(obj, kNoInstance, lights, ambient, true);
  }
  return out;
}

std::int64_t solo_pixel_count(const Scene& scene, const Camera& camera, std::uint32_t object_id,
                              const RenderOptions& options) {
  const SceneObject* obj = scene.find(object_id);
  if (obj == nullptr || !obj->active) {
    throw ValidationError("solo render of unknown object id " + std::to_string(object_id));
  }
  camera.validate();
  RenderOutput out = blank_output(camera, Rgb::Zero());
  Rasterizer raster(camera, out, options);
  raster.draw(*obj, obj->id, {}, 0.0, false);
  return std::count(out.instance_ids.begin(), out.instance_ids.end(), object_id);
}

}  // namespace synthasm
