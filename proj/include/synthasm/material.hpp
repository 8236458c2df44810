#pragma once

#include <variant>

#include "synthasm/mesh.hpp"

namespace synthasm {

using Rgb = Eigen::Vector3d;

struct NoTexture {};

/// Sinusoidal darkening along an object-local axis, mimicking the layer lines
/// of a 3D print. Brightness factor ranges over [1 - contrast, 1].
struct WaveTexture {
  Vec3 axis = Vec3::UnitZ();
  double period = 1e-3;
  double contrast = 0.3;
};

/// Alternating full/half brightness squares in the object-local XY plane.
struct CheckerTexture {
  double cell = 0.05;
};

using Texture = std::variant<NoTexture, WaveTexture, CheckerTexture>;

struct Material {
  Rgb base_color = Rgb(0.8, 0.8, 0.8);
  Texture texture = NoTexture{};
  double specular_strength = 0.0;
  double shininess = 32.0;
  /// Metals get a base-colour tinted highlight and a reduced diffuse term.
  bool metallic = false;

  /// Throws ValidationError if a channel or parameter is out of range.
  void validate() const;
  /// Base colour after texture modulation at an object-local point.
  Rgb albedo(const Vec3& local_point) const;
};

}  // namespace synthasm
