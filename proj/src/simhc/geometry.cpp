#include "simhc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "simhc/correspondence.hpp"
#include "simhc/error.hpp"

namespace simhc {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

Vec4 normalized_or_throw(const Vec4& q) {
  const double n = q.norm();
  if (!(n > 1e-300) || !std::isfinite(n)) {
    throw Error(ErrorCode::Degenerate, "degenerate quaternion");
  }
  return q / n;
}

}  // namespace

Quaternion::Quaternion(const Vec4& q) : coeffs_(normalized_or_throw(q)) {
  if (coeffs_[0] < 0.0) coeffs_ = -coeffs_;
}

Quaternion Quaternion::from_rotmat(const Mat3& R) {
  const Eigen::Quaterniond e(R);
  return Quaternion(e.w(), e.x(), e.y(), e.z());
}

Mat3 Quaternion::rotmat() const { return quat_to_rotmat(coeffs_); }

Mat3 quat_to_rotmat(const Vec4& q_in) {
  return quat_to_rotmat_poly(normalized_or_throw(q_in));
}

Mat3 quat_to_rotmat_poly(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 R;
  R << w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), w * w - x * x - y * y + z * z;
  return R;
}

std::array<Mat3, 4> quat_to_rotmat_poly_derivatives(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Mat3, 4> d;
  d[0] << w, -z, y,
      z, w, -x,
      -y, x, w;
  d[1] << x, y, z,
      y, -x, -w,
      z, w, -x;
  d[2] << -y, x, w,
      x, y, z,
      -w, z, -y;
  d[3] << -z, -w, x,
      w, -z, y,
      x, y, z;
  for (Mat3& m : d) m *= 2.0;
  return d;
}

Mat3 sixd_to_rotmat(const Rotation6D& a) {
  const double n1 = a.a1.norm();
  if (n1 < 1e-12) throw Error(ErrorCode::Degenerate, "degenerate 6D input");
  const Vec3 b1 = a.a1 / n1;
  const Vec3 u2 = a.a2 - b1.dot(a.a2) * b1;
  const double n2 = u2.norm();
  if (n2 < 1e-12) throw Error(ErrorCode::Degenerate, "degenerate 6D input");
  const Vec3 b2 = u2 / n2;
  Mat3 R;
  R.col(0) = b1;
  R.col(1) = b2;
  R.col(2) = b1.cross(b2);
  return R;
}

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(),
      v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return S;
}

Mat3 axis_angle_to_rotmat(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

double rotation_error_deg(const Mat3& R_hat, const Mat3& R_gt) {
  const double arg = (R_hat - R_gt).norm() / (2.0 * std::numbers::sqrt2);
  return 2.0 * std::asin(std::clamp(arg, -1.0, 1.0)) * kRadToDeg;
}

double translation_error_pct(const Vec3& t_hat, const Vec3& t_gt) {
  const double n = t_gt.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "undefined relative error");
  return (t_hat - t_gt).norm() / n * 100.0;
}

double scale_error_pct(double s_hat, double s_gt) {
  if (!(s_gt > 0.0)) throw Error(ErrorCode::InvalidArgument, "undefined relative error");
  return std::abs(s_hat - s_gt) / s_gt * 100.0;
}

const char* to_string(ProblemKind kind) {
  return kind == ProblemKind::Upnp ? "upnp" : "grps";
}

ProblemKind problem_kind_from_string(const char* name) {
  const std::string s(name);
  if (s == "upnp") return ProblemKind::Upnp;
  if (s == "grps") return ProblemKind::Grps;
  throw Error(ErrorCode::InvalidArgument, "unknown problem kind '" + s + "'");
}

double translation_angle_deg(const Vec3& t_hat, const Vec3& t_gt) {
  const double d = t_hat.norm() * t_gt.norm();
  if (!(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "undefined relative error");
  return std::acos(std::clamp(t_hat.dot(t_gt) / d, -1.0, 1.0)) * kRadToDeg;
}

}  // namespace simhc
