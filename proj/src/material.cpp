#include "synthasm/material.hpp"

#include <cmath>
#include <numbers>

#include "synthasm/error.hpp"

namespace synthasm {

namespace {

bool unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

struct AlbedoVisitor {
  const Rgb& base;
  const Vec3& p;

  Rgb operator()(const NoTexture&) const { return base; }

  Rgb operator()(const WaveTexture& wave) const {
    const double t = p.dot(wave.axis.normalized()) / wave.period;
    const double factor = 1.0 - wave.contrast * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t));
    return base * factor;
  }

  Rgb operator()(const CheckerTexture& checker) const {
    const auto ix = static_cast<long long>(std::floor(p.x() / checker.cell));
    const auto iy = static_cast<long long>(std::floor(p.y() / checker.cell));
    return ((ix + iy) & 1) == 0 ? base : Rgb(base * 0.5);
  }
};

}  // namespace

void Material::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!unit_interval(base_color[i])) throw ValidationError("material base_color channels must lie in [0,1]");
  }
  if (!unit_interval(specular_strength)) throw ValidationError("material specular_strength must lie in [0,1]");
  if (!(shininess > 0.0)) throw ValidationError("material shininess must be positive");
  if (const auto* wave = std::get_if<WaveTexture>(&texture)) {
    if (!(wave->period > 0.0)) throw ValidationError("wave texture period must be positive");
    if (!unit_interval(wave->contrast)) throw ValidationError("wave texture contrast must lie in [0,1]");
    if (!(wave->axis.norm() > 0.0)) throw ValidationError("wave texture axis must be non-zero");
  }
  if (const auto* checker = std::get_if<CheckerTexture>(&texture)) {
    if (!(checker->cell > 0.0)) throw ValidationError("checker texture cell must be positive");
  }
}

Rgb Material::albedo(const Vec3& local_point) const {
  return std::visit(AlbedoVisitor{base_color, local_point}, texture);
}

}  // namespace synthasm
