#include "rodspec/liealg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rodspec/errors.hpp"

namespace rodspec {
namespace {

constexpr double kSmallAngle = 1e-6;
// Below this angle exp uses Taylor series for its coefficients.
constexpr double kSeriesAngle = 0.05;
constexpr double kPatternTol = 1e-9;
constexpr double kSingularTol = 1e-9;

bool is_rotation(const Matrix3& r, double tol) {
  const double ortho = (r.transpose() * r - Matrix3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Vector3 unskew(const Matrix3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

}  // namespace

Pose::Pose(const Matrix3& rotation, const Vector3& position)
    : rotation_(rotation), position_(position) {
  if (!rotation.allFinite() || !position.allFinite()) {
    throw ValidationError("Pose: non-finite entries");
  }
  if (!is_rotation(rotation, kOrthonormalityTol)) {
    throw ValidationError("Pose: rotation is not in SO(3) within 1e-9");
  }
}

Pose Pose::translation(const Vector3& position) {
  return Pose(Trusted{}, Matrix3::Identity(), position);
}

Pose Pose::from_matrix(const Matrix4& m) {
  if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > kPatternTol) {
    throw ValidationError("Pose: homogeneous matrix must end with [0 0 0 1]");
  }
  return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Pose Pose::nearest(const Matrix3& rotation, const Vector3& position, double tolerance) {
  if (!rotation.allFinite() || !position.allFinite()) {
    throw ValidationError("Pose: non-finite entries");
  }
  if (!is_rotation(rotation, tolerance)) {
    throw ValidationError("Pose: matrix too far from SO(3) to project");
  }
  // Already a rotation to working precision: keep the bits so projection is idempotent.
  if (is_rotation(rotation, 16.0 * std::numeric_limits<double>::epsilon())) {
    return Pose(Trusted{}, rotation, position);
  }
  Eigen::JacobiSVD<Matrix3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Matrix3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return Pose(Trusted{}, r, position);
}

Matrix4 Pose::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = position_;
  return m;
}

Pose Pose::inverse() const {
  const Matrix3 rt = rotation_.transpose();
  return Pose(Trusted{}, rt, -rt * position_);
}

Pose Pose::operator*(const Pose& rhs) const {
  return Pose(Trusted{}, rotation_ * rhs.rotation_, rotation_ * rhs.position_ + position_);
}

Matrix3 skew(const Vector3& v) {
  Matrix3 m;
  // clang-format off
  m <<     0.0, -v.z(),  v.y(),
         v.z(),    0.0, -v.x(),
        -v.y(),  v.x(),    0.0;
  // clang-format on
  return m;
}

Matrix4 hat(const Screw& v) {
  Matrix4 m = Matrix4::Zero();
  m.topLeftCorner<3, 3>() = skew(angular(v));
  m.topRightCorner<3, 1>() = linear(v);
  return m;
}

Screw vee(const Matrix4& m) {
  const Matrix3 top = m.topLeftCorner<3, 3>();
  const double skew_err = (top + top.transpose()).cwiseAbs().maxCoeff();
  const double row_err = m.row(3).cwiseAbs().maxCoeff();
  if (skew_err > kPatternTol || row_err > kPatternTol) {
    throw NotLieAlgebraElement("vee: matrix does not have the se(3) pattern");
  }
  return make_screw(unskew(top), m.topRightCorner<3, 1>());
}

Pose exp_se3(const Screw& xi, double s) {
  const Vector3 w = angular(xi) * s;
  const Vector3 v = linear(xi) * s;
  const double theta = w.norm();
  const double t2 = theta * theta;

  double a;  // sin(t)/t
  double b;  // (1 - cos(t))/t^2
  double c;  // (t - sin(t))/t^3
  if (theta < kSeriesAngle) {
    // Truncation error below t^10 / 10! < 1e-19 for t < 0.05.
    a = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0)));
    b = 0.5 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0 * (1.0 - t2 / 56.0 * (1.0 - t2 / 90.0))));
    c = (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0 * (1.0 - t2 / 110.0)))) / 6.0;
  } else {
    const double half = std::sin(0.5 * theta) / theta;
    a = std::sin(theta) / theta;
    b = 2.0 * half * half;  // (1 - cos t) / t^2 without cancellation
    c = (1.0 - a) / t2;
  }
  const Matrix3 wx = skew(w);
  const Matrix3 wx2 = wx * wx;
  const Matrix3 rotation = Matrix3::Identity() + a * wx + b * wx2;
  const Vector3 position = (Matrix3::Identity() + b * wx + c * wx2) * v;
  return Pose(Pose::Trusted{}, rotation, position);
}

Screw log_se3(const Pose& g) {
  const Matrix3& r = g.rotation();
  const Vector3 axial = unskew(r - r.transpose());  // 2 sin(theta) * axis
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double sin_theta = 0.5 * axial.norm();
  // atan2 keeps full precision near pi, where arccos of the trace does not.
  const double theta = std::atan2(sin_theta, cos_theta);
  if (std::numbers::pi - theta < kSingularTol) {
    throw SingularRotation("log_se3: rotation angle is pi (log is not unique)");
  }

  Vector3 w;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    w = 0.5 * axial * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  } else if (theta > 0.75 * std::numbers::pi) {
    // Axis from the symmetric part: (R + R^T)/2 - cos(t) I = (1 - cos(t)) a a^T.
    const Matrix3 sym = 0.5 * (r + r.transpose()) - cos_theta * Matrix3::Identity();
    Eigen::Index j = 0;
    sym.diagonal().maxCoeff(&j);
    Vector3 axis = sym.col(j).normalized();
    if (axis.dot(axial) < 0.0) axis = -axis;
    w = theta * axis;
  } else {
    w = theta / (2.0 * sin_theta) * axial;
  }

  double c;  // (1 - (t/2) cot(t/2)) / t^2
  if (theta < kSeriesAngle) {
    const double t2 = theta * theta;
    c = 1.0 / 12.0 + t2 * (1.0 / 720.0 + t2 * (1.0 / 30240.0 + t2 / 1209600.0));
  } else {
    const double half = 0.5 * theta;
    c = (1.0 - half / std::tan(half)) / (theta * theta);
  }
  const Matrix3 wx = skew(w);
  const Matrix3 v_inv = Matrix3::Identity() - 0.5 * wx + c * wx * wx;
  return make_screw(w, v_inv * g.position());
}

Matrix6 Ad(const Pose& g) {
  const Matrix3& r = g.rotation();
  Matrix6 m = Matrix6::Zero();
  m.topLeftCorner<3, 3>() = r;
  m.bottomLeftCorner<3, 3>() = skew(g.position()) * r;
  m.bottomRightCorner<3, 3>() = r;
  return m;
}

Matrix6 Ad_inv(const Pose& g) {
  const Matrix3 rt = g.rotation().transpose();
  Matrix6 m = Matrix6::Zero();
  m.topLeftCorner<3, 3>() = rt;
  m.bottomLeftCorner<3, 3>() = -rt * skew(g.position());
  m.bottomRightCorner<3, 3>() = rt;
  return m;
}

Matrix6 coAd(const Pose& g) {
  const Matrix3& r = g.rotation();
  Matrix6 m = Matrix6::Zero();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 3>() = skew(g.position()) * r;
  m.bottomRightCorner<3, 3>() = r;
  return m;
}

Matrix6 ad(const Screw& v) {
  const Matrix3 w = skew(angular(v));
  Matrix6 m = Matrix6::Zero();
  m.topLeftCorner<3, 3>() = w;
  m.bottomLeftCorner<3, 3>() = skew(linear(v));
  m.bottomRightCorner<3, 3>() = w;
  return m;
}

Matrix6 coad(const Screw& v) {
  const Matrix3 w = skew(angular(v));
  Matrix6 m = Matrix6::Zero();
  m.topLeftCorner<3, 3>() = w;
  m.topRightCorner<3, 3>() = skew(linear(v));
  m.bottomRightCorner<3, 3>() = w;
  return m;
}

Matrix6 dexp(const Screw& x) {
  const double theta = angular(x).norm();
  const Matrix6 adx = ad(x);
  if (theta < 0.2) {
    // Terms of ad^k are bounded by (theta^k + k theta^(k-1) |v|) / (k+1)!.
    Matrix6 sum = Matrix6::Identity();
    Matrix6 term = Matrix6::Identity();
    for (int k = 1; k <= 20; ++k) {
      term = term * adx / static_cast<double>(k + 1);
      sum += term;
      if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    return sum;
  }
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const double t2 = theta * theta;
  const double c1 = (4.0 - 4.0 * c - theta * s) / (2.0 * t2);
  const double c2 = (4.0 * theta - 5.0 * s + theta * c) / (2.0 * t2 * theta);
  const double c3 = (2.0 - 2.0 * c - theta * s) / (2.0 * t2 * t2);
  const double c4 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t2 * theta);
  const Matrix6 adx2 = adx * adx;
  return Matrix6::Identity() + c1 * adx + c2 * adx2 + c3 * adx2 * adx + c4 * adx2 * adx2;
}

double dist_so3(const Matrix3& r1, const Matrix3& r2) {
  const Matrix3 delta = r1.transpose() * r2;
  return std::abs(std::acos(std::clamp(0.5 * (delta.trace() - 1.0), -1.0, 1.0)));
}

double dist_se3(const Pose& g1, const Pose& g2) {
  return log_se3(g1.inverse() * g2).norm();
}

}  // namespace rodspec
