#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rodspec/errors.hpp"
#include "rodspec/rodmodel.hpp"
#include "test_util.hpp"

namespace rodspec {
namespace {

constexpr double kPi = std::numbers::pi;

// Scalar formulas for a circular section of radius r, coded independently.
struct Oracle {
  double a, jy, jx;
  explicit Oracle(double r) : a(kPi * r * r), jy(kPi * std::pow(r, 4) / 4.0), jx(kPi * std::pow(r, 4) / 2.0) {}
};

void expect_rel(double actual, double expected, double tol) {
  EXPECT_LE(std::abs(actual - expected), tol * std::abs(expected)) << actual << " vs " << expected;
}

TEST(CrossSection, CylinderValues) {
  const auto cs = cross_section_props(RodProperties::cylinder(), 0.3);
  EXPECT_NEAR(cs.area, 3.14159e-2, 1e-6);
  EXPECT_NEAR(cs.jy, 7.85398e-5, 1e-9);
  EXPECT_NEAR(cs.jz, 7.85398e-5, 1e-9);
  EXPECT_NEAR(cs.jx, 1.57080e-4, 1e-9);
  EXPECT_EQ(cs.jx, cs.jy + cs.jz);
}

TEST(CrossSection, ConeTipHasOnePercentArea) {
  const RodProperties cone = RodProperties::cone();
  expect_rel(cross_section_props(cone, cone.length).area, 0.01 * cross_section_props(cone, 0.0).area,
             1e-12);
}

TEST(CrossSection, CylinderIndependentOfS) {
  const RodProperties rod = RodProperties::cylinder();
  const auto base = cross_section_props(rod, 0.0);
  for (double s : {0.1, 0.5, 1.0}) {
    const auto cs = cross_section_props(rod, s);
    EXPECT_EQ(cs.area, base.area);
    EXPECT_EQ(cs.jx, base.jx);
  }
}

TEST(CrossSection, OutOfDomain) {
  const RodProperties rod;
  EXPECT_THROW(cross_section_props(rod, -1e-9), OutOfDomain);
  EXPECT_THROW(cross_section_props(rod, 1.0 + 1e-9), OutOfDomain);
  EXPECT_THROW(stiffness_matrix(rod, 2.0), OutOfDomain);
  EXPECT_THROW(cross_section_props(rod, std::nan("")), OutOfDomain);
}

TEST(Matrices, TableValues) {
  const RodProperties rod = RodProperties::cylinder();
  const Matrix6 k = stiffness_matrix(rod, 0.5);
  const double expected[] = {52.360, 78.540, 78.540, 31415.9, 10472.0, 10472.0};
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(k(i, i), expected[i], 1e-3 * (i < 3 ? 1 : 100)) << i;
  EXPECT_NEAR(damping_matrix(rod, 0.5)(0, 0), 1.5708, 1e-4);
  EXPECT_NEAR(inertia_matrix(rod, 0.5)(3, 3), 31.4159, 1e-4);
  const Matrix6 d = damping_matrix(rod, 0.5);
  EXPECT_NEAR(d(1, 1) / d(0, 0), 1.5, 1e-14);
}

TEST(Matrices, MatchScalarOracleOnGrid) {
  for (const RodProperties& rod : {RodProperties::cylinder(), RodProperties::cone()}) {
    const double e = rod.young_modulus;
    const double g = e / (2.0 * (1.0 + rod.poisson_ratio));
    for (int i = 0; i < 100; ++i) {
      const double s = rod.length * i / 99.0;
      const Oracle o(rod.base_radius * (1.0 + rod.taper * s / rod.length));
      const double ks[] = {g * o.jx, e * o.jy, e * o.jy, e * o.a, g * o.a, g * o.a};
      const double ds[] = {o.jx, 3 * o.jy, 3 * o.jy, 3 * o.a, o.a, o.a};
      const double ms[] = {o.jx, o.jy, o.jy, o.a, o.a, o.a};
      const Matrix6 k = stiffness_matrix(rod, s), d = damping_matrix(rod, s), m = inertia_matrix(rod, s);
      for (int r = 0; r < 6; ++r) {
        expect_rel(k(r, r), ks[r], 1e-12);
        expect_rel(d(r, r), rod.damping * ds[r], 1e-12);
        expect_rel(m(r, r), rod.density * ms[r], 1e-12);
      }
      EXPECT_TRUE((k - Matrix6(k.diagonal().asDiagonal())).isZero(0.0));
      EXPECT_TRUE((d - Matrix6(d.diagonal().asDiagonal())).isZero(0.0));
      EXPECT_TRUE((m - Matrix6(m.diagonal().asDiagonal())).isZero(0.0));
    }
  }
}

TEST(Matrices, LinearInParameters) {
  RodProperties rod;
  const Matrix6 k1 = stiffness_matrix(rod, 0.2);
  rod.young_modulus *= 2.0;
  const Matrix6 k2 = stiffness_matrix(rod, 0.2);
  EXPECT_EQ(k2(1, 1), 2.0 * k1(1, 1));
  EXPECT_EQ(k2(2, 2), 2.0 * k1(2, 2));
  rod.damping = 0.0;
  EXPECT_TRUE(damping_matrix(rod, 0.2).isZero(0.0));
}

TEST(Properties, Validation) {
  RodProperties rod;
  EXPECT_NO_THROW(rod.validate());
  rod.poisson_ratio = 0.6;
  EXPECT_THROW(rod.validate(), ValidationError);
  rod = RodProperties{};
  rod.taper = -1.0;
  EXPECT_THROW(rod.validate(), ValidationError);
  rod = RodProperties{};
  rod.length = 0.0;
  EXPECT_THROW(rod.validate(), ValidationError);
  rod = RodProperties{};
  rod.damping = -1.0;
  EXPECT_THROW(rod.validate(), ValidationError);
  EXPECT_NEAR(RodProperties{}.shear_modulus(), 1e6 / 3.0, 1e-9);
}

TEST(Gravity, ZeroAndIdentity) {
  const RodProperties rod;
  std::mt19937_64 rng(1);
  const Pose g = testing::random_pose(rng);
  EXPECT_TRUE(gravity_wrench(rod, g, 0.4, Screw::Zero()).isZero(0.0));
  const Screw grav = make_screw(Vector3::Zero(), Vector3(0, 0, -9.81));
  EXPECT_LT((gravity_wrench(rod, Pose::identity(), 0.4, grav) - inertia_matrix(rod, 0.4) * grav).norm(),
            1e-14);
}

TEST(Gravity, LinearMagnitudeIsRotationInvariant) {
  const RodProperties rod;
  const Screw grav = make_screw(Vector3::Zero(), Vector3(0, 0, -9.81));
  const double expected = linear(gravity_wrench(rod, Pose::identity(), 0.4, grav)).norm();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const Screw w = make_screw(testing::random_screw(rng).head<3>(), Vector3::Zero());
    EXPECT_NEAR(linear(gravity_wrench(rod, exp_se3(w), 0.4, grav)).norm(), expected, 1e-10);
  }
}

ActuatorRouting longitudinal(double r, double phase = 0.0) {
  return {RoutingKind::longitudinal, r, phase, 0.0};
}

ActuatorRouting helix(double r, double turns, double phase = 0.0) {
  return {RoutingKind::helicoidal, r, phase, turns};
}

TEST(Actuation, CenterlineColumn) {
  const RodProperties rod;
  const ActuatorRouting a[] = {longitudinal(0.0)};
  Screw expected;
  expected << 0, 0, 0, 1, 0, 0;
  EXPECT_EQ(Screw(actuation_matrix(rod, a, rod.stress_free(0.0), 0.5).col(0)), expected);
}

TEST(Actuation, OffsetColumn) {
  const RodProperties rod;
  const double r = 0.05;
  const ActuatorRouting a[] = {longitudinal(r)};
  Screw expected;
  expected << 0, 0, -r, 1, 0, 0;
  EXPECT_LT((Screw(actuation_matrix(rod, a, rod.stress_free(0.0), 0.5).col(0)) - expected).norm(), 1e-16);
}

TEST(Actuation, UnitTangentUnderDeformation) {
  const RodProperties rod;
  const ActuatorRouting a[] = {longitudinal(0.05, 1.0), helix(0.08, 1.0, 0.3), helix(0.02, 3.0)};
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    Screw xi = 0.3 * testing::random_screw(rng);
    xi(3) += 1.0;
    const Matrix6X b = actuation_matrix(rod, a, xi, 0.37);
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(b.col(c).tail<3>().norm(), 1.0, 1e-14);
      const Vector3 d = a[c].point(0.37, rod.length);
      EXPECT_LT((b.col(c).head<3>() - d.cross(Vector3(b.col(c).tail<3>()))).norm(), 1e-15);
    }
  }
}

TEST(Actuation, DegenerateTangent) {
  const RodProperties rod;
  const ActuatorRouting a[] = {longitudinal(0.0)};
  EXPECT_THROW(actuation_matrix(rod, a, Screw::Zero(), 0.5), DegenerateTangent);
}

TEST(Actuation, HelixBendingRowsAreInQuadrature) {
  const RodProperties rod;
  const ActuatorRouting a[] = {helix(0.08, 1.0)};
  const int n = 4000;
  double inner = 0.0, norm_y = 0.0, norm_z = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) / n;  // one full period over [0, L]
    const Matrix6X b = actuation_matrix(rod, a, rod.stress_free(s), s);
    inner += b(1, 0) * b(2, 0) / n;
    norm_y += b(1, 0) * b(1, 0) / n;
    norm_z += b(2, 0) * b(2, 0) / n;
  }
  EXPECT_LT(std::abs(inner), 1e-8);
  EXPECT_GT(norm_y, 1e-4);
  EXPECT_NEAR(norm_y, norm_z, 1e-10);
}

TEST(Actuation, HelixBendingIsSinusoidalWithTurnFrequency) {
  const RodProperties rod;
  const double turns = 2.0;
  const ActuatorRouting a[] = {helix(0.08, turns)};
  const Matrix6X b0 = actuation_matrix(rod, a, rod.stress_free(0.0), 0.0);
  const double amp = std::hypot(b0(1, 0), b0(2, 0));
  for (double s : {0.1, 0.3, 0.55, 0.9}) {
    const Matrix6X b = actuation_matrix(rod, a, rod.stress_free(s), s);
    const double phi = 2.0 * kPi * turns * s;
    // d x t for d = r (0, cos, sin) and t in the (x, y, z) plane.
    EXPECT_NEAR(std::hypot(b(1, 0), b(2, 0)), amp, 1e-14);
    EXPECT_NEAR(b(1, 0), amp * std::sin(phi), 1e-14);
    EXPECT_NEAR(b(2, 0), -amp * std::cos(phi), 1e-14);
  }
}

TEST(Actuation, RoutingValidation) {
  const RodProperties cone = RodProperties::cone();
  EXPECT_THROW(longitudinal(0.05).validate(cone), ValidationError);  // tip radius 0.01
  EXPECT_NO_THROW(longitudinal(0.005).validate(cone));
  ActuatorRouting bad = longitudinal(0.01);
  bad.turns = 1.0;
  EXPECT_THROW(bad.validate(RodProperties{}), ValidationError);
}

}  // namespace
}  // namespace rodspec
