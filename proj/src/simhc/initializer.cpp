#include "simhc/initializer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simhc/rng.hpp"

namespace simhc {

namespace {

Vec3 random_unit_vector(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const Vec3 d(normal(rng), normal(rng), normal(rng));
    const double n = d.norm();
    if (n > 1e-12) return d / n;
  }
}

Pose perturb(const Pose& gt, double rot_deg, double trans_frac, double scale_frac, Rng& rng) {
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  const Vec3 axis = random_unit_vector(rng);
  const Vec3 dir = random_unit_vector(rng);
  const double u = sym(rng);

  Pose out;
  const Mat3 delta = axis_angle_to_rotmat(axis, rot_deg * std::numbers::pi / 180.0);
  out.rotation = Quaternion::from_rotmat(delta * gt.R());
  out.translation = gt.translation + trans_frac * gt.translation.norm() * dir;
  out.scale = std::max(gt.scale * (1.0 + u * scale_frac), 1e-3 * gt.scale);
  return out;
}

}  // namespace

InitialSolution random_init(std::uint64_t seed, ProblemKind kind) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 5.0);

  Vec4 q;
  do {
    q = Vec4(normal(rng), normal(rng), normal(rng), normal(rng));
  } while (q.norm() < 1e-12);

  InitialSolution out;
  out.provenance = InitProvenance::Random;
  out.pose.rotation = Quaternion(q);
  out.pose.translation = Vec3(sym(rng), sym(rng), sym(rng));
  out.pose.scale = kind == ProblemKind::Grps ? scale(rng) : 1.0;
  return out;
}

InitialSolution perturbed_oracle(const Pose& gt, double rot_deg, double trans_frac,
                                 double scale_frac, std::uint64_t seed) {
  Rng rng(seed);
  return {perturb(gt, rot_deg, trans_frac, scale_frac, rng), InitProvenance::PerturbedOracle};
}

InitialSolution RandomInitializer::initialize(std::span<const Correspondence2D3D>,
                                              std::uint64_t draw) const {
  return random_init(derive_seed(seed_, streams::kInitializer, draw), ProblemKind::Upnp);
}

InitialSolution RandomInitializer::initialize(std::span<const Correspondence2D2D>,
                                              std::uint64_t draw) const {
  return random_init(derive_seed(seed_, streams::kInitializer, draw), ProblemKind::Grps);
}

InitialSolution OracleInitializer::draw_pose(std::uint64_t draw) const {
  Rng rng(derive_seed(seed_, streams::kInitializer, draw));
  double rot = spread_.rot_deg;
  double trans = spread_.trans_frac;
  if (spread_.up_to) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    rot *= unit(rng);
    trans *= unit(rng);
  }
  return {perturb(gt_, rot, trans, spread_.scale_frac, rng), InitProvenance::PerturbedOracle};
}

InitialSolution OracleInitializer::initialize(std::span<const Correspondence2D3D>,
                                              std::uint64_t draw) const {
  return draw_pose(draw);
}

InitialSolution OracleInitializer::initialize(std::span<const Correspondence2D2D>,
                                              std::uint64_t draw) const {
  return draw_pose(draw);
}

}  // namespace simhc
