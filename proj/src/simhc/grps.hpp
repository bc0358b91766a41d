#pragma once

#include <span>
#include <vector>

#include "simhc/correspondence.hpp"
#include "simhc/initializer.hpp"
#include "simhc/poly_system.hpp"
#include "simhc/tracker.hpp"

namespace simhc::grps {

// Tracked unknowns packed as x = (q0, q1, q2, q3, tx, ty, tz, s).
VecX pack(const Vec4& q, const Vec3& t, double s);
VecX pack(const Pose& pose);

// t^T (f x R f') - s f^T R [v']_x f' + f^T [v]_x R f', R = R(q) (polynomial,
// so q need not be unit).
double grps_residual(const Correspondence2D2D& c, const Vec4& q, const Vec3& t, double s);

// One coplanarity constraint per correspondence plus q^T q - 1.
class System final : public PolySystem {
 public:
  explicit System(std::vector<Correspondence2D2D> corrs);

  int n_vars() const override { return 8; }
  int n_eqs() const override { return static_cast<int>(corrs_.size()) + 1; }
  VecX evaluate(const VecX& x) const override;
  MatX jacobian(const VecX& x) const override;

 private:
  std::vector<Correspondence2D2D> corrs_;
};

// Accepts exactly 7 (minimal) or 8 (overdetermined) correspondences.
System grps_system(std::span<const Correspondence2D2D> corrs);

struct Depths {
  double alpha = 0.0;
  double alpha2 = 0.0;
};

// Least squares on [f, -R f'] [alpha; alpha'] = -(v - s R v' - t).
Depths grps_recover_depths(const Correspondence2D2D& c, const Pose& pose);

// Replaces each view-1 bearing by the normalized ray
// R (alpha' f' + s v') + t - v through the recovered depths.
std::vector<Correspondence2D2D> grps_simulate(const Pose& pose,
                                              std::span<const Correspondence2D2D> corrs);

struct Solution {
  Pose pose;
  TrackResult track;
  InitialSolution init;
  bool infeasible_scale = false;
};

Solution solve_grps(std::span<const Correspondence2D2D> corrs, const Initializer& initializer,
                    const TrackerConfig& config, std::uint64_t draw = 0);

Solution solve_grps_lm(std::span<const Correspondence2D2D> corrs, const Initializer& initializer,
                       int max_iters = 100, std::uint64_t draw = 0);

// |f_hat - f| with f_hat the pose-consistent simulated bearing; +inf when
// depth recovery is ill-conditioned.
double residual_metric(const Correspondence2D2D& c, const Pose& pose);

}  // namespace simhc::grps
