#pragma once

// SE(3) / se(3) primitives in the angular-first convention used throughout the
// library: a screw vector is [angular; linear], i.e. [kx ky kz sx sy sz] for a
// strain and [wx wy wz vx vy vz] for a velocity.

#include <Eigen/Dense>

namespace rodspec {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;
using Screw = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

inline auto angular(const Screw& v) { return v.head<3>(); }
inline auto linear(const Screw& v) { return v.tail<3>(); }

inline Screw make_screw(const Vector3& angular_part, const Vector3& linear_part) {
  Screw v;
  v << angular_part, linear_part;
  return v;
}

/// Rigid transform of one backbone cross-section: rotation R and position r.
///
/// The checked constructor enforces R^T R = I and det R = 1 to 1e-9. Poses
/// produced by group operations of valid poses are trusted without rechecking.
class Pose {
 public:
  static constexpr double kOrthonormalityTol = 1e-9;

  Pose() : rotation_(Matrix3::Identity()), position_(Vector3::Zero()) {}
  Pose(const Matrix3& rotation, const Vector3& position);

  static Pose identity() { return {}; }
  static Pose translation(const Vector3& position);
  static Pose from_matrix(const Matrix4& m);
  /// Projects a nearly-orthonormal matrix onto SO(3) (SVD polar factor).
  /// Intended for measured data; rejects matrices further than `tolerance`
  /// (max elementwise deviation of R^T R from I) from a rotation.
  static Pose nearest(const Matrix3& rotation, const Vector3& position,
                      double tolerance = 1e-6);

  const Matrix3& rotation() const { return rotation_; }
  const Vector3& position() const { return position_; }
  Matrix4 matrix() const;

  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;

 private:
  struct Trusted {};
  Pose(Trusted, const Matrix3& rotation, const Vector3& position)
      : rotation_(rotation), position_(position) {}
  friend Pose exp_se3(const Screw& xi, double s);

  Matrix3 rotation_;
  Vector3 position_;
};

Matrix3 skew(const Vector3& v);

Matrix4 hat(const Screw& v);
/// Throws NotLieAlgebraElement when `m` is not skew/zero-bottom-row within 1e-9.
Screw vee(const Matrix4& m);

/// exp(hat(xi) * s) in closed form; 4th-order series below 1e-6 rad.
Pose exp_se3(const Screw& xi, double s = 1.0);
/// vee(log(g)). Throws SingularRotation when the rotation angle is pi within 1e-9.
Screw log_se3(const Pose& g);

/// Ad_g = [R 0; r~R R].
Matrix6 Ad(const Pose& g);
/// Ad_g^{-1} = Ad_{g^{-1}}.
Matrix6 Ad_inv(const Pose& g);
/// Ad*_g = [R r~R; 0 R].
Matrix6 coAd(const Pose& g);
/// ad_v = [w~ 0; v~ w~].
Matrix6 ad(const Screw& v);
/// ad*_v = [w~ v~; 0 w~] = -ad_v^T.
Matrix6 coad(const Screw& v);

/// Tangent operator of the exponential: sum_k ad_X^k / (k+1)!.
/// If g(t) = exp(X(t)) then g^{-1} g' = Ad_{g}^{-1} dexp(X) X'.
Matrix6 dexp(const Screw& x);

double dist_so3(const Matrix3& r1, const Matrix3& r2);
double dist_se3(const Pose& g1, const Pose& g2);

}  // namespace rodspec
