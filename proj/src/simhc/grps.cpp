#include "simhc/grps.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/SVD>

#include "simhc/error.hpp"

namespace simhc::grps {

namespace {

Vec4 q_of(const VecX& x) { return x.head<4>(); }
Vec3 t_of(const VecX& x) { return x.segment<3>(4); }

// e = a^T R f' - s f^T R w with a = t x f + f x v and w = v' x f'.
struct Terms {
  Vec3 a;
  Vec3 w;
};

Terms terms(const Correspondence2D2D& c, const Vec3& t) {
  return {t.cross(c.f) + c.f.cross(c.v), c.v2.cross(c.f2)};
}

Pose pose_from(const VecX& x) {
  Pose p;
  p.rotation = Quaternion(q_of(x));
  p.translation = t_of(x);
  p.scale = x[7];
  return p;
}

}  // namespace

VecX pack(const Vec4& q, const Vec3& t, double s) {
  VecX x(8);
  x << q, t, s;
  return x;
}

VecX pack(const Pose& pose) {
  return pack(pose.rotation.coeffs(), pose.translation, pose.scale);
}

double grps_residual(const Correspondence2D2D& c, const Vec4& q, const Vec3& t, double s) {
  const Mat3 R = quat_to_rotmat_poly(q);
  return t.dot(c.f.cross(R * c.f2)) - s * c.f.dot(R * skew(c.v2) * c.f2) +
         c.f.dot(skew(c.v) * R * c.f2);
}

System::System(std::vector<Correspondence2D2D> corrs) : corrs_(std::move(corrs)) {}

VecX System::evaluate(const VecX& x) const {
  const Vec4 q = q_of(x);
  const Vec3 t = t_of(x);
  const double s = x[7];
  const Mat3 R = quat_to_rotmat_poly(q);
  VecX r(n_eqs());
  for (std::size_t i = 0; i < corrs_.size(); ++i) {
    const Terms k = terms(corrs_[i], t);
    r[static_cast<Eigen::Index>(i)] = k.a.dot(R * corrs_[i].f2) - s * corrs_[i].f.dot(R * k.w);
  }
  r[n_eqs() - 1] = q.squaredNorm() - 1.0;
  return r;
}

MatX System::jacobian(const VecX& x) const {
  const Vec4 q = q_of(x);
  const Vec3 t = t_of(x);
  const double s = x[7];
  const Mat3 R = quat_to_rotmat_poly(q);
  const auto dR = quat_to_rotmat_poly_derivatives(q);

  MatX J = MatX::Zero(n_eqs(), 8);
  for (std::size_t i = 0; i < corrs_.size(); ++i) {
    const auto& c = corrs_[i];
    const Terms k = terms(c, t);
    const auto row = static_cast<Eigen::Index>(i);
    for (int j = 0; j < 4; ++j) {
      J(row, j) = k.a.dot(dR[j] * c.f2) - s * c.f.dot(dR[j] * k.w);
    }
    J.block<1, 3>(row, 4) = c.f.cross(R * c.f2).transpose();
    J(row, 7) = -c.f.dot(R * k.w);
  }
  J.block<1, 4>(n_eqs() - 1, 0) = 2.0 * q.transpose();
  return J;
}

System grps_system(std::span<const Correspondence2D2D> corrs) {
  if (corrs.size() != 7 && corrs.size() != 8) {
    throw Error(ErrorCode::InvalidArgument, "GRPS needs exactly 7 or 8 correspondences");
  }
  return System(std::vector<Correspondence2D2D>(corrs.begin(), corrs.end()));
}

Depths grps_recover_depths(const Correspondence2D2D& c, const Pose& pose) {
  const Mat3 R = pose.R();
  Eigen::Matrix<double, 3, 2> A;
  A.col(0) = c.f;
  A.col(1) = -R * c.f2;
  const Vec3 b = -(c.v - pose.scale * R * c.v2 - pose.translation);

  const Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv[1] > 0.0) || sv[0] / sv[1] > 1e8) {
    throw Error(ErrorCode::Degenerate, "ill-conditioned depth recovery");
  }
  const Eigen::Vector2d ab = svd.solve(b);
  return {ab[0], ab[1]};
}

std::vector<Correspondence2D2D> grps_simulate(const Pose& pose,
                                              std::span<const Correspondence2D2D> corrs) {
  const Mat3 R = pose.R();
  std::vector<Correspondence2D2D> out;
  out.reserve(corrs.size());
  for (const auto& c : corrs) {
    const Depths d = grps_recover_depths(c, pose);
    const Vec3 ray = R * (d.alpha2 * c.f2 + pose.scale * c.v2) + pose.translation - c.v;
    const double n = ray.norm();
    if (!(n > 1e-12)) throw Error(ErrorCode::Degenerate, "zero-length reprojected ray");
    out.push_back({ray / n, c.v, c.f2, c.v2});
  }
  return out;
}

namespace {

Solution finish(const VecX& x, TrackResult track, const InitialSolution& init) {
  Solution out;
  out.init = init;
  out.track = std::move(track);
  try {
    out.pose = pose_from(x);
  } catch (const Error&) {
    out.pose = init.pose;
    out.track.status = TrackStatus::Diverged;
  }
  out.infeasible_scale = !(out.pose.scale > 0.0);
  return out;
}

}  // namespace

Solution solve_grps(std::span<const Correspondence2D2D> corrs, const Initializer& initializer,
                    const TrackerConfig& config, std::uint64_t draw) {
  const InitialSolution init = initializer.initialize(corrs, draw);
  const System target = grps_system(corrs);
  const System start = grps_system(grps_simulate(init.pose, corrs));
  const Homotopy H(start, target);
  TrackResult track = track_path(H, pack(init.pose), config);
  const VecX x = track.x_final;
  return finish(x, std::move(track), init);
}

Solution solve_grps_lm(std::span<const Correspondence2D2D> corrs, const Initializer& initializer,
                       int max_iters, std::uint64_t draw) {
  const InitialSolution init = initializer.initialize(corrs, draw);
  const System target = grps_system(corrs);
  const LmResult lm = lm_refine(target, pack(init.pose), max_iters);
  TrackResult track;
  track.x_final = lm.x;
  track.final_residual_norm = lm.residual_norm;
  track.steps_taken = lm.iterations;
  track.status = lm.residual_norm <= 1e-10 ? TrackStatus::Converged
                                           : TrackStatus::ConvergedLeastSquares;
  return finish(lm.x, std::move(track), init);
}

double residual_metric(const Correspondence2D2D& c, const Pose& pose) {
  try {
    const Correspondence2D2D one[1] = {c};
    const auto sim = grps_simulate(pose, one);
    return (sim[0].f - c.f).norm();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace simhc::grps
