#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "simhc/correspondence.hpp"
#include "simhc/initializer.hpp"
#include "simhc/poly_system.hpp"
#include "simhc/tracker.hpp"

namespace simhc::upnp {

using Vec11 = Eigen::Matrix<double, 11, 1>;
using Mat11 = Eigen::Matrix<double, 11, 11>;
using Mat11x4 = Eigen::Matrix<double, 11, 4>;

// Monomial vector of a quaternion, fixed order:
//   (q0^2, q0q1, q0q2, q0q3, q1^2, q1q2, q1q3, q2^2, q2q3, q3^2, 1)
Vec11 monomials_s(const Vec4& q);
Mat11x4 monomials_jac(const Vec4& q);

// Sum of squared object-space distances, with translation and depths
// eliminated, written as s(q)^T M s(q).
struct Quadratic {
  Mat11 M;
};

Quadratic build_M(std::span<const Correspondence2D3D> corrs);

// s^T M ds/dq_i = 0 (i = 0..3) and q^T q - 1 = 0 over x = q.
class System final : public PolySystem {
 public:
  explicit System(const Quadratic& quadratic) : M_(quadratic.M) {}

  int n_vars() const override { return 4; }
  int n_eqs() const override { return 5; }
  VecX evaluate(const VecX& x) const override;
  MatX jacobian(const VecX& x) const override;

 private:
  Mat11 M_;
};

System upnp_system(const Quadratic& quadratic);

struct TranslationDepths {
  Vec3 t;
  std::vector<double> depths;
};

// Closed-form optimal translation for the rotation of q, and per-ray depths.
TranslationDepths recover_translation_depths(const Quaternion& q,
                                             std::span<const Correspondence2D3D> corrs);

// Replaces each bearing with the ray from v_i to R p_i + t.
std::vector<Correspondence2D3D> upnp_simulate(const Pose& pose,
                                              std::span<const Correspondence2D3D> corrs);

struct Solution {
  Pose pose;
  TrackResult track;
  InitialSolution init;
  bool depths_positive = false;
};

Solution solve_upnp(std::span<const Correspondence2D3D> corrs, const Initializer& initializer,
                    const TrackerConfig& config, std::uint64_t draw = 0);

// Local Levenberg-Marquardt baseline on the target system from the
// initializer's rotation.
Solution solve_upnp_lm(std::span<const Correspondence2D3D> corrs, const Initializer& initializer,
                       int max_iters = 100, std::uint64_t draw = 0);

// Bearing reprojection residual |f_hat - f| at the pose.
double residual_metric(const Correspondence2D3D& c, const Pose& pose);

}  // namespace simhc::upnp
