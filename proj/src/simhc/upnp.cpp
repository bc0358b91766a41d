#include "simhc/upnp.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "simhc/error.hpp"

namespace simhc::upnp {

namespace {

using Mat3x9 = Eigen::Matrix<double, 3, 9>;
using Mat9x10 = Eigen::Matrix<double, 9, 10>;
using Mat3x11 = Eigen::Matrix<double, 3, 11>;

// (a, b) index pairs of the ten quadratic monomials q_a q_b.
constexpr std::array<std::pair<int, int>, 10> kPairs{{
    {0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 3}}};

// Row-major vec(R(q)) = W * (first ten monomials).
Mat9x10 rotation_monomial_map() {
  Mat9x10 W = Mat9x10::Zero();
  // R00 = q0^2 + q1^2 - q2^2 - q3^2
  W(0, 0) = 1; W(0, 4) = 1; W(0, 7) = -1; W(0, 9) = -1;
  // R01 = 2 (q1q2 - q0q3)
  W(1, 5) = 2; W(1, 3) = -2;
  // R02 = 2 (q1q3 + q0q2)
  W(2, 6) = 2; W(2, 2) = 2;
  // R10 = 2 (q1q2 + q0q3)
  W(3, 5) = 2; W(3, 3) = 2;
  // R11 = q0^2 - q1^2 + q2^2 - q3^2
  W(4, 0) = 1; W(4, 4) = -1; W(4, 7) = 1; W(4, 9) = -1;
  // R12 = 2 (q2q3 - q0q1)
  W(5, 8) = 2; W(5, 1) = -2;
  // R20 = 2 (q1q3 - q0q2)
  W(6, 6) = 2; W(6, 2) = -2;
  // R21 = 2 (q2q3 + q0q1)
  W(7, 8) = 2; W(7, 1) = 2;
  // R22 = q0^2 - q1^2 - q2^2 + q3^2
  W(8, 0) = 1; W(8, 4) = -1; W(8, 7) = -1; W(8, 9) = 1;
  return W;
}

// R p = A(p) vec(R) for row-major vec.
Mat3x9 point_map(const Vec3& p) {
  Mat3x9 A = Mat3x9::Zero();
  for (int r = 0; r < 3; ++r) A.block<1, 3>(r, 3 * r) = p.transpose();
  return A;
}

Mat3 projector(const Vec3& f) { return Mat3::Identity() - f * f.transpose(); }

// Inverse of sum (I - f f^T), rejecting near-parallel bearing sets.
Mat3 inverse_projector_sum(std::span<const Correspondence2D3D> corrs) {
  Mat3 H = Mat3::Zero();
  for (const auto& c : corrs) H += projector(c.f);
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(H);
  if (!(eig.eigenvalues()[0] > 1e-10 * static_cast<double>(corrs.size()))) {
    throw Error(ErrorCode::Degenerate, "degenerate bearing configuration");
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

Vec4 as_vec4(const VecX& x) { return Vec4(x[0], x[1], x[2], x[3]); }

}  // namespace

Vec11 monomials_s(const Vec4& q) {
  Vec11 s;
  for (int k = 0; k < 10; ++k) s[k] = q[kPairs[k].first] * q[kPairs[k].second];
  s[10] = 1.0;
  return s;
}

Mat11x4 monomials_jac(const Vec4& q) {
  Mat11x4 D = Mat11x4::Zero();
  for (int k = 0; k < 10; ++k) {
    const auto [a, b] = kPairs[k];
    D(k, a) += q[b];
    D(k, b) += q[a];
  }
  return D;
}

Quadratic build_M(std::span<const Correspondence2D3D> corrs) {
  if (corrs.size() < 4) {
    throw Error(ErrorCode::InvalidArgument, "UPnP needs at least 4 correspondences");
  }
  const Mat3 Hinv = inverse_projector_sum(corrs);
  const Mat9x10 W = rotation_monomial_map();

  Mat3x9 sum_PA = Mat3x9::Zero();
  Vec3 sum_Pv = Vec3::Zero();
  for (const auto& c : corrs) {
    const Mat3 P = projector(c.f);
    sum_PA += P * point_map(c.p);
    sum_Pv += P * c.v;
  }
  const Mat3x9 HA = Hinv * sum_PA;
  const Vec3 Hv = Hinv * sum_Pv;

  // Residual of ray i at the optimal translation: B_i vec(R) + c_i.
  Mat11 M = Mat11::Zero();
  for (const auto& c : corrs) {
    const Mat3 P = projector(c.f);
    Mat3x11 G;
    G.leftCols<10>() = P * (point_map(c.p) - HA) * W;
    G.col(10) = P * (Hv - c.v);
    M.noalias() += G.transpose() * G;
  }
  return {0.5 * (M + M.transpose())};
}

VecX System::evaluate(const VecX& x) const {
  const Vec4 q = as_vec4(x);
  const Vec11 s = monomials_s(q);
  VecX r(5);
  r.head<4>() = monomials_jac(q).transpose() * (M_ * s);
  r[4] = q.squaredNorm() - 1.0;
  return r;
}

MatX System::jacobian(const VecX& x) const {
  const Vec4 q = as_vec4(x);
  const Vec11 Ms = M_ * monomials_s(q);
  const Mat11x4 D = monomials_jac(q);

  MatX J = MatX::Zero(5, 4);
  J.topRows<4>() = D.transpose() * M_ * D;
  // Second derivatives of the monomials are constant.
  for (int k = 0; k < 10; ++k) {
    const auto [a, b] = kPairs[k];
    if (a == b) {
      J(a, a) += 2.0 * Ms[k];
    } else {
      J(a, b) += Ms[k];
      J(b, a) += Ms[k];
    }
  }
  J.row(4) = 2.0 * q.transpose();
  return J;
}

System upnp_system(const Quadratic& quadratic) { return System(quadratic); }

TranslationDepths recover_translation_depths(const Quaternion& q,
                                             std::span<const Correspondence2D3D> corrs) {
  const Mat3 Hinv = inverse_projector_sum(corrs);
  const Mat3 R = q.rotmat();
  Vec3 rhs = Vec3::Zero();
  for (const auto& c : corrs) rhs += projector(c.f) * (c.v - R * c.p);

  TranslationDepths out;
  out.t = Hinv * rhs;
  out.depths.reserve(corrs.size());
  for (const auto& c : corrs) out.depths.push_back(c.f.dot(R * c.p + out.t - c.v));
  return out;
}

std::vector<Correspondence2D3D> upnp_simulate(const Pose& pose,
                                              std::span<const Correspondence2D3D> corrs) {
  const Mat3 R = pose.R();
  std::vector<Correspondence2D3D> out;
  out.reserve(corrs.size());
  for (const auto& c : corrs) {
    const Vec3 ray = R * c.p + pose.translation - c.v;
    const double n = ray.norm();
    if (!(n > 1e-12)) throw Error(ErrorCode::Degenerate, "point coincides with ray origin");
    out.push_back({c.p, ray / n, c.v});
  }
  return out;
}

namespace {

Solution finish(const Quaternion& q, TrackResult track, const InitialSolution& init,
                std::span<const Correspondence2D3D> corrs) {
  Solution out;
  out.init = init;
  out.track = std::move(track);
  out.pose.rotation = q;
  const TranslationDepths td = recover_translation_depths(q, corrs);
  out.pose.translation = td.t;
  out.pose.scale = 1.0;
  out.depths_positive = true;
  for (double a : td.depths) out.depths_positive = out.depths_positive && a > 0.0;
  return out;
}

}  // namespace

Solution solve_upnp(std::span<const Correspondence2D3D> corrs, const Initializer& initializer,
                    const TrackerConfig& config, std::uint64_t draw) {
  InitialSolution init = initializer.initialize(corrs, draw);
  // Only the rotation is used; the start translation is the closed-form
  // optimum for that rotation on the observed data.
  init.pose.translation = recover_translation_depths(init.pose.rotation, corrs).t;
  init.pose.scale = 1.0;

  const System target = upnp_system(build_M(corrs));
  const System start = upnp_system(build_M(upnp_simulate(init.pose, corrs)));
  const Homotopy H(start, target);

  TrackResult track = track_path(H, init.pose.rotation.coeffs(), config);
  Quaternion q = init.pose.rotation;
  try {
    q = Quaternion(as_vec4(track.x_final));
  } catch (const Error&) {
    track.status = TrackStatus::Diverged;
  }
  return finish(q, std::move(track), init, corrs);
}

Solution solve_upnp_lm(std::span<const Correspondence2D3D> corrs, const Initializer& initializer,
                       int max_iters, std::uint64_t draw) {
  InitialSolution init = initializer.initialize(corrs, draw);
  const System target = upnp_system(build_M(corrs));
  const LmResult lm = lm_refine(target, init.pose.rotation.coeffs(), max_iters);

  TrackResult track;
  track.x_final = lm.x;
  track.final_residual_norm = lm.residual_norm;
  track.steps_taken = lm.iterations;
  track.status = lm.residual_norm <= 1e-10 ? TrackStatus::Converged
                                           : TrackStatus::ConvergedLeastSquares;
  Quaternion q = init.pose.rotation;
  try {
    q = Quaternion(as_vec4(lm.x));
  } catch (const Error&) {
    track.status = TrackStatus::Diverged;
  }
  return finish(q, std::move(track), init, corrs);
}

double residual_metric(const Correspondence2D3D& c, const Pose& pose) {
  const Vec3 ray = pose.R() * c.p + pose.translation - c.v;
  const double n = ray.norm();
  if (!(n > 1e-12)) return std::numeric_limits<double>::infinity();
  return (ray / n - c.f).norm();
}

}  // namespace simhc::upnp
