#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rodspec/errors.hpp"
#include "rodspec/liealg.hpp"
#include "test_util.hpp"

namespace rodspec {
namespace {

using testing::random_pose;
using testing::random_screw;

// Closed-form SE(3) log written as a cubic polynomial in g (valid for 0 < theta < pi).
Matrix4 log_polynomial(const Matrix4& g, double theta) {
  const double beta = 0.125 / std::pow(std::sin(theta / 2.0), 3) / std::cos(theta / 2.0);
  const double c1 = std::cos(theta), c2 = std::cos(2.0 * theta);
  const double s1 = std::sin(theta), s2 = std::sin(2.0 * theta);
  const double a0 = theta * c2 - s1;
  const double a1 = theta * c1 + 2.0 * theta * c2 - s1 - s2;
  const double a2 = 2.0 * theta * c1 + theta * c2 - s1 - s2;
  const double a3 = theta * c1 - s1;
  const Matrix4 g2 = g * g;
  return beta * (a0 * Matrix4::Identity() - a1 * g + a2 * g2 - a3 * g2 * g);
}

// exp by a long Taylor series of the 4x4 matrix, independent of the closed form.
Matrix4 exp_series(const Matrix4& x) {
  Matrix4 sum = Matrix4::Identity();
  Matrix4 term = Matrix4::Identity();
  for (int k = 1; k < 60; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

TEST(Hat, VeeInvertsHat) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Screw v = random_screw(rng);
    EXPECT_EQ(vee(hat(v)), v);
  }
}

TEST(Hat, VeeRejectsNonAlgebraMatrices) {
  Matrix4 m = hat(make_screw(Vector3(0.1, 0.2, 0.3), Vector3(1, 2, 3)));
  m(0, 1) += 1e-3;  // breaks skew symmetry
  EXPECT_THROW(vee(m), NotLieAlgebraElement);
  Matrix4 bottom = Matrix4::Zero();
  bottom(3, 3) = 1.0;
  EXPECT_THROW(vee(bottom), NotLieAlgebraElement);
}

TEST(Exp, MatchesMatrixSeries) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const Screw v = random_screw(rng);
    const double s = 0.7;
    const Matrix4 expected = exp_series(hat(v) * s);
    EXPECT_LT((exp_se3(v, s).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Exp, SmallAngleBranchIsContinuous) {
  const Vector3 axis = Vector3(1, -2, 0.5).normalized();
  const Vector3 lin(0.3, -0.1, 0.8);
  for (double theta : {1e-12, 1e-9, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.049, 0.051}) {
    const Screw v = make_screw(theta * axis, lin);
    EXPECT_LT((exp_se3(v).matrix() - exp_series(hat(v))).cwiseAbs().maxCoeff(), 1e-15)
        << "theta " << theta;
  }
}

TEST(Log, MatchesPolynomialClosedForm) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const Screw v = random_screw(rng, 3.0);
    const double theta = angular(v).norm();
    if (theta < 0.05) continue;  // the closed form is ill-conditioned near identity
    const Pose g = exp_se3(v);
    const Screw oracle = vee(log_polynomial(g.matrix(), theta));
    EXPECT_LT((log_se3(g) - oracle).cwiseAbs().maxCoeff(), 1e-9) << "theta " << theta;
  }
}

TEST(Log, RoundTripsExp) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 1000; ++i) {
    const Screw v = random_screw(rng, 3.0);
    EXPECT_LT((log_se3(exp_se3(v)) - v).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Log, NearIdentity) {
  const Screw v = make_screw(Vector3(1e-10, -2e-10, 3e-11), Vector3(1e-3, 0.2, -0.4));
  EXPECT_LT((log_se3(exp_se3(v)) - v).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(log_se3(Pose::identity()), Screw::Zero());
}

TEST(Log, AccurateAcrossSmallAngles) {
  const Vector3 axis = Vector3(1, -2, 0.5).normalized();
  const Vector3 lin(0.3, -0.1, 0.8);
  for (double theta : {1e-9, 1e-7, 1e-6, 2e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.049, 0.051, 0.2}) {
    const Screw v = make_screw(theta * axis, lin);
    EXPECT_LT((log_se3(exp_se3(v)) - v).cwiseAbs().maxCoeff(), 1e-15) << "theta " << theta;
  }
}

TEST(Log, NearPi) {
  const Vector3 axis = Vector3(0.3, 0.4, -0.5).normalized();
  for (double theta : {std::numbers::pi - 1e-3, std::numbers::pi - 1e-6}) {
    const Screw v = make_screw(theta * axis, Vector3(0.1, 0.2, 0.3));
    EXPECT_LT((log_se3(exp_se3(v)) - v).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Log, ExactPiIsSingular) {
  const Screw v = make_screw(std::numbers::pi * Vector3::UnitZ(), Vector3::UnitX());
  EXPECT_THROW(log_se3(exp_se3(v)), SingularRotation);
}

TEST(Pose, RejectsNonOrthonormal) {
  Matrix3 r = Matrix3::Identity();
  r(0, 0) = 1.01;
  EXPECT_THROW(Pose(r, Vector3::Zero()), ValidationError);
  r = -Matrix3::Identity();  // det = -1
  EXPECT_THROW(Pose(r, Vector3::Zero()), ValidationError);
}

TEST(Pose, NearestProjectsSmallPerturbations) {
  std::mt19937_64 rng(15);
  const Pose g = random_pose(rng);
  Matrix3 r = g.rotation();
  r(1, 2) += 5e-7;
  const Pose p = Pose::nearest(r, g.position());
  EXPECT_LT((p.rotation().transpose() * p.rotation() - Matrix3::Identity()).norm(), 1e-14);
  EXPECT_LT(dist_so3(p.rotation(), g.rotation()), 1e-6);
  r(1, 2) += 1e-2;
  EXPECT_THROW(Pose::nearest(r, g.position()), ValidationError);
}

TEST(Pose, NearestIsIdempotent) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Pose g = random_pose(rng);
    Matrix3 r = g.rotation();
    r(0, 1) += 1e-8;
    const Pose once = Pose::nearest(r, g.position());
    const Pose twice = Pose::nearest(once.rotation(), once.position());
    EXPECT_EQ(once.matrix(), twice.matrix());
  }
}

TEST(Pose, GroupAxioms) {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 50; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    EXPECT_LT((((a * b) * c).matrix() - (a * (b * c)).matrix()).norm(), 1e-12);
    EXPECT_LT(((a * a.inverse()).matrix() - Matrix4::Identity()).norm(), 1e-13);
    EXPECT_LT(((a * b).matrix() - a.matrix() * b.matrix()).norm(), 1e-13);
  }
}

TEST(Adjoint, ConjugatesHat) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Pose g = random_pose(rng);
    const Screw v = random_screw(rng);
    const Matrix4 conj = g.matrix() * hat(v) * g.inverse().matrix();
    EXPECT_LT((hat(Ad(g) * v) - conj).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Adjoint, Homomorphism) {
  std::mt19937_64 rng(18);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng);
    EXPECT_LT((Ad(a * b) - Ad(a) * Ad(b)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((Ad_inv(a) * Ad(a) - Matrix6::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((coAd(a) - Ad_inv(a).transpose()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Adjoint, LieBracket) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 100; ++i) {
    const Screw x = random_screw(rng), y = random_screw(rng);
    const Matrix4 bracket = hat(x) * hat(y) - hat(y) * hat(x);
    EXPECT_LT((hat(ad(x) * y) - bracket).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((coad(x) + ad(x).transpose()).cwiseAbs().maxCoeff(), 0.0 + 1e-15);
  }
}

TEST(Adjoint, DerivativeOfAdIsAd) {
  std::mt19937_64 rng(20);
  const Screw x = random_screw(rng);
  const double h = 1e-6;
  const Matrix6 fd = (Ad(exp_se3(x, h)) - Ad(exp_se3(x, -h))) / (2.0 * h);
  EXPECT_LT((fd - ad(x)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Dexp, ClosedFormMatchesSeries) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const Screw x = random_screw(rng, 3.0);
    const Matrix6 a = ad(x);
    Matrix6 sum = Matrix6::Identity(), term = Matrix6::Identity();
    for (int k = 1; k < 80; ++k) {
      term = term * a / static_cast<double>(k + 1);
      sum += term;
    }
    EXPECT_LT((dexp(x) - sum).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Dexp, IsDerivativeOfExp) {
  // d/de exp(x + e y) exp(x)^{-1} at e = 0 equals hat(dexp(x) y).
  std::mt19937_64 rng(22);
  for (int i = 0; i < 50; ++i) {
    const Screw x = random_screw(rng, 2.5), y = random_screw(rng);
    const double h = 1e-6;
    const Matrix4 d = (exp_se3(x + h * y).matrix() - exp_se3(x - h * y).matrix()) / (2.0 * h);
    const Screw fd = vee(d * exp_se3(x).inverse().matrix());
    EXPECT_LT((fd - dexp(x) * y).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Dexp, ContinuousAcrossBranch) {
  const Vector3 axis = Vector3(0.2, 0.9, -0.4).normalized();
  const Vector3 lin(0.5, -1.0, 0.25);
  const Matrix6 below = dexp(make_screw((0.2 - 1e-9) * axis, lin));
  const Matrix6 above = dexp(make_screw((0.2 + 1e-9) * axis, lin));
  EXPECT_LT((below - above).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Distance, SymmetricAndInvariant) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), h = random_pose(rng);
    EXPECT_NEAR(dist_se3(a, b), dist_se3(b, a), 1e-9);
    EXPECT_NEAR(dist_se3(h * a, h * b), dist_se3(a, b), 1e-9);  // left invariance
    EXPECT_NEAR(dist_so3(a.rotation(), b.rotation()), dist_so3(b.rotation(), a.rotation()), 1e-12);
    EXPECT_LT(dist_se3(a, a), 1e-15);
  }
}

TEST(Distance, RotationAngle) {
  const Matrix3 r = exp_se3(make_screw(Vector3(0, 0, 0.75), Vector3::Zero())).rotation();
  EXPECT_NEAR(dist_so3(Matrix3::Identity(), r), 0.75, 1e-14);
}

}  // namespace
}  // namespace rodspec
