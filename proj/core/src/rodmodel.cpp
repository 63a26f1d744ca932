#include "rodspec/rodmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rodspec/errors.hpp"

namespace rodspec {
namespace {

void check_domain(const RodProperties& rod, double s, const char* who) {
  if (!(s >= 0.0 && s <= rod.length)) {
    throw OutOfDomain(std::string(who) + ": s = " + std::to_string(s) + " outside [0, L]");
  }
}

}  // namespace

RodProperties RodProperties::cylinder() { return RodProperties{}; }

RodProperties RodProperties::cone() {
  RodProperties rod;
  rod.taper = -0.9;
  return rod;
}

void RodProperties::validate() const {
  if (!(length > 0.0)) throw ValidationError("rod: length must be > 0");
  if (!(base_radius > 0.0)) throw ValidationError("rod: radius must be > 0");
  if (!(taper > -1.0 && taper <= 0.0)) throw ValidationError("rod: taper must lie in (-1, 0]");
  if (!(density > 0.0)) throw ValidationError("rod: density must be > 0");
  if (!(young_modulus > 0.0)) throw ValidationError("rod: Young modulus must be > 0");
  if (!(damping >= 0.0)) throw ValidationError("rod: damping must be >= 0");
  if (!(poisson_ratio >= 0.0 && poisson_ratio <= 0.5)) {
    throw ValidationError("rod: Poisson ratio must lie in [0, 0.5]");
  }
  if (!stress_free) throw ValidationError("rod: stress-free strain is not set");
}

CrossSection cross_section_props(const RodProperties& rod, double s) {
  check_domain(rod, s, "cross_section_props");
  const double r = rod.radius(s);
  const double r2 = r * r;
  const double j = std::numbers::pi * r2 * r2 / 4.0;
  return {std::numbers::pi * r2, 2.0 * j, j, j};
}

Matrix6 stiffness_matrix(const RodProperties& rod, double s) {
  const CrossSection cs = cross_section_props(rod, s);
  const double e = rod.young_modulus;
  const double g = rod.shear_modulus();
  Screw d;
  d << g * cs.jx, e * cs.jy, e * cs.jz, e * cs.area, g * cs.area, g * cs.area;
  return d.asDiagonal();
}

Matrix6 damping_matrix(const RodProperties& rod, double s) {
  const CrossSection cs = cross_section_props(rod, s);
  Screw d;
  d << cs.jx, 3.0 * cs.jy, 3.0 * cs.jz, 3.0 * cs.area, cs.area, cs.area;
  return (rod.damping * d).asDiagonal();
}

Matrix6 inertia_matrix(const RodProperties& rod, double s) {
  const CrossSection cs = cross_section_props(rod, s);
  Screw d;
  d << cs.jx, cs.jy, cs.jz, cs.area, cs.area, cs.area;
  return (rod.density * d).asDiagonal();
}

Screw gravity_wrench(const RodProperties& rod, const Pose& g, double s, const Screw& gravity_twist) {
  return inertia_matrix(rod, s) * (Ad_inv(g) * gravity_twist);
}

Vector3 ActuatorRouting::point(double s, double length) const {
  const double phi = phase + 2.0 * std::numbers::pi * turns * s / length;
  return offset_radius * Vector3(0.0, std::cos(phi), std::sin(phi));
}

Vector3 ActuatorRouting::point_derivative(double s, double length) const {
  const double rate = 2.0 * std::numbers::pi * turns / length;
  const double phi = phase + rate * s;
  return offset_radius * rate * Vector3(0.0, -std::sin(phi), std::cos(phi));
}

void ActuatorRouting::validate(const RodProperties& rod) const {
  if (!(offset_radius >= 0.0)) throw ValidationError("actuator: offset radius must be >= 0");
  if (!std::isfinite(phase) || !std::isfinite(turns)) {
    throw ValidationError("actuator: phase and turns must be finite");
  }
  if (kind == RoutingKind::longitudinal && turns != 0.0) {
    throw ValidationError("actuator: longitudinal routing must have zero turns");
  }
  // The radius is affine in s, so its minimum is at an end.
  const double min_radius = std::min(rod.radius(0.0), rod.radius(rod.length));
  if (offset_radius > min_radius) {
    throw ValidationError("actuator: offset radius exceeds the cross-section radius");
  }
}

Matrix6X actuation_matrix(const RodProperties& rod, std::span<const ActuatorRouting> routing,
                          const Screw& xi, double s) {
  check_domain(rod, s, "actuation_matrix");
  Matrix6X b(6, static_cast<Eigen::Index>(routing.size()));
  const Vector3 kappa = angular(xi);
  const Vector3 sigma = linear(xi);
  for (std::size_t a = 0; a < routing.size(); ++a) {
    const Vector3 d = routing[a].point(s, rod.length);
    const Vector3 raw = sigma + kappa.cross(d) + routing[a].point_derivative(s, rod.length);
    const double n = raw.norm();
    if (n < 1e-12) {
      throw DegenerateTangent("actuation_matrix: cable tangent vanishes for actuator " +
                              std::to_string(a));
    }
    const Vector3 t = raw / n;
    b.col(static_cast<Eigen::Index>(a)) << d.cross(t), t;
  }
  return b;
}

}  // namespace rodspec
