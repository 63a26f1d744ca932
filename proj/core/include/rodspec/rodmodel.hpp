#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rodspec/liealg.hpp"

namespace rodspec {

using Matrix6X = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Physical rod with circular cross-section of affine radius
/// R(s) = base_radius * (1 + taper * s / L), taper in (-1, 0].
struct RodProperties {
  double length = 1.0;          // m
  double base_radius = 0.1;     // m
  double taper = 0.0;           // dimensionless
  double density = 1000.0;      // kg/m^3
  double young_modulus = 1e6;   // Pa
  double poisson_ratio = 0.5;   // dimensionless
  double damping = 1e4;         // Pa s
  std::function<Screw(double)> stress_free = constant_strain(default_stress_free());

  static Screw default_stress_free() { return make_screw(Vector3::Zero(), Vector3::UnitX()); }
  static std::function<Screw(double)> constant_strain(const Screw& xi) {
    return [xi](double) { return xi; };
  }

  /// Desk-scale cylindrical robot: L = 1 m, R = 0.1 m, rho = 1000 kg/m^3,
  /// E = 1 MPa, nu = 0.5, beta = 0.01 MPa s, straight and unstretched at rest.
  static RodProperties cylinder();
  /// Same material with R(s) = R (1 - 0.9 s / L).
  static RodProperties cone();

  double radius(double s) const { return base_radius * (1.0 + taper * s / length); }
  double shear_modulus() const { return young_modulus / (2.0 * (1.0 + poisson_ratio)); }

  /// Throws ValidationError on any violated invariant.
  void validate() const;
};

struct CrossSection {
  double area;  // m^2
  double jx;    // polar second moment, m^4
  double jy;    // m^4
  double jz;    // m^4
};

/// Throws OutOfDomain when s is outside [0, L].
CrossSection cross_section_props(const RodProperties& rod, double s);

/// diag(G Jx, E Jy, E Jz, E A, G A, G A)
Matrix6 stiffness_matrix(const RodProperties& rod, double s);
/// beta * diag(Jx, 3 Jy, 3 Jz, 3 A, A, A)
Matrix6 damping_matrix(const RodProperties& rod, double s);
/// rho * diag(Jx, Jy, Jz, A, A, A)
Matrix6 inertia_matrix(const RodProperties& rod, double s);

/// Distributed gravity wrench M(s) Ad_g^{-1} G in the cross-section frame.
Screw gravity_wrench(const RodProperties& rod, const Pose& g, double s, const Screw& gravity_twist);

enum class RoutingKind { longitudinal, helicoidal };

/// Cable (or chamber) path in the body frame:
/// d(s) = offset_radius * [0, cos(phi(s)), sin(phi(s))], phi(s) = phase + 2 pi turns s / L.
struct ActuatorRouting {
  RoutingKind kind = RoutingKind::longitudinal;
  double offset_radius = 0.0;  // m
  double phase = 0.0;          // rad
  double turns = 0.0;          // helix revolutions over [0, L]; 0 for longitudinal

  Vector3 point(double s, double length) const;
  /// d'(s), analytic.
  Vector3 point_derivative(double s, double length) const;
  void validate(const RodProperties& rod) const;
};

/// Column a is [d_a x t_a; t_a] where t_a is the unit tangent of the cable path
/// (sigma + kappa x d_a + d_a') / |...| for the current strain xi.
/// Throws DegenerateTangent when the tangent norm drops below 1e-12.
Matrix6X actuation_matrix(const RodProperties& rod, std::span<const ActuatorRouting> routing,
                          const Screw& xi, double s);

}  // namespace rodspec
