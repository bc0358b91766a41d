#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace simhc {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

// Unit quaternion, scalar first (w, x, y, z). Constructed values are
// normalized and sign-canonicalized so that w >= 0.
class Quaternion {
 public:
  Quaternion() : coeffs_(1.0, 0.0, 0.0, 0.0) {}
  explicit Quaternion(const Vec4& q);
  Quaternion(double w, double x, double y, double z)
      : Quaternion(Vec4(w, x, y, z)) {}

  static Quaternion from_rotmat(const Mat3& R);

  const Vec4& coeffs() const { return coeffs_; }
  double w() const { return coeffs_[0]; }
  double x() const { return coeffs_[1]; }
  double y() const { return coeffs_[2]; }
  double z() const { return coeffs_[3]; }

  Mat3 rotmat() const;

 private:
  Vec4 coeffs_;
};

struct Rotation6D {
  Vec3 a1;
  Vec3 a2;
};

struct Pose {
  Quaternion rotation;
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Mat3 R() const { return rotation.rotmat(); }
};

// Normalizes internally. Throws Error(Degenerate) on a zero quaternion.
Mat3 quat_to_rotmat(const Vec4& q);
inline Mat3 quat_to_rotmat(const Quaternion& q) { return q.rotmat(); }

// Polynomial rotation matrix of a possibly non-unit q: equals |q|^2 times
// the rotation of q / |q|. Entries are quadratic forms in q.
Mat3 quat_to_rotmat_poly(const Vec4& q);
// d quat_to_rotmat_poly / d q_k, k = 0..3.
std::array<Mat3, 4> quat_to_rotmat_poly_derivatives(const Vec4& q);

// Gram-Schmidt on the two columns.
Mat3 sixd_to_rotmat(const Rotation6D& a);

Mat3 skew(const Vec3& v);

// Rotation from an axis (normalized internally) and an angle in radians.
Mat3 axis_angle_to_rotmat(const Vec3& axis, double angle);

// 2 asin(||R_hat - R_gt||_F / (2 sqrt 2)) in degrees.
double rotation_error_deg(const Mat3& R_hat, const Mat3& R_gt);
double translation_error_pct(const Vec3& t_hat, const Vec3& t_gt);
double scale_error_pct(double s_hat, double s_gt);
// Angle between the two translation directions, degrees. Reporting only.
double translation_angle_deg(const Vec3& t_hat, const Vec3& t_gt);

}  // namespace simhc
