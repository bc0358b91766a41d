#include <doctest.h>

#include <climits>
#include <cmath>

#include "simhc/error.hpp"
#include "simhc/ransac.hpp"
#include "simhc/synth.hpp"

using namespace simhc;

namespace {

GrpsScene rig_scene(std::uint64_t seed, double outliers, double noise) {
  SceneConfig c = SceneConfig::grps_defaults();
  c.n_points = 200;
  c.n_cameras = 5;
  c.noise_px = noise;
  c.outlier_fraction = outliers;
  c.seed = seed;
  return gen_grps_scene(c);
}

}  // namespace

TEST_SUITE("ransac") {

TEST_CASE("adaptive iteration bound") {
  CHECK(ransac_required_iterations(1.0, 8, 0.99) == 1);
  CHECK(ransac_required_iterations(0.0, 8, 0.99) == INT_MAX);
  CHECK(ransac_required_iterations(0.5, 4, 0.99) ==
        static_cast<int>(std::ceil(std::log(0.01) / std::log(1 - 0.0625))));
  CHECK(ransac_required_iterations(0.6, 8, 0.99) > 200);
  CHECK(ransac_required_iterations(0.9, 8, 0.99) < ransac_required_iterations(0.8, 8, 0.99));
}

TEST_CASE("config validation") {
  RansacConfig c;
  CHECK(c.max_iters == 200);
  CHECK(c.confidence == 0.99);
  CHECK(c.inlier_threshold == 0.01);
  CHECK(c.sample_size_for(ProblemKind::Grps) == 8);
  CHECK(c.sample_size_for(ProblemKind::Upnp) == 4);
  c.confidence = 1.0;
  CHECK_THROWS_AS(c.validate(ProblemKind::Grps), Error);
  c = RansacConfig{};
  c.inlier_threshold = 0.0;
  CHECK_THROWS_AS(c.validate(ProblemKind::Grps), Error);
  c = RansacConfig{};
  c.sample_size = 9;
  CHECK_THROWS_AS(c.validate(ProblemKind::Grps), Error);
  c.sample_size = 3;
  CHECK_THROWS_AS(c.validate(ProblemKind::Upnp), Error);
}

TEST_CASE("clean data terminates after one iteration") {
  const auto s = rig_scene(1, 0.0, 0.0);
  const OracleInitializer init(s.gt, {5.0, 0.1, 0.1, true}, 1);
  RansacConfig cfg;
  cfg.seed = 1;
  const auto r = ransac_grps(s.corrs, init, TrackerConfig::grps_defaults(), cfg);
  CHECK(r.iterations_run == 1);
  CHECK(r.n_inliers == 200);
  CHECK(rotation_error_deg(r.best_pose.R(), s.gt.R()) < 1e-6);

  SceneConfig u = SceneConfig::upnp_defaults();
  u.n_points = 100;
  u.seed = 2;
  const auto su = gen_upnp_scene(u);
  const OracleInitializer iu(su.gt, {7.0, 0.0, 0.0, false}, 2);
  const auto ru = ransac_upnp(su.corrs, iu, TrackerConfig::upnp_defaults(), cfg);
  CHECK(ru.iterations_run == 1);
  CHECK(ru.n_inliers == 100);
  CHECK(rotation_error_deg(ru.best_pose.R(), su.gt.R()) < 1e-6);
}

TEST_CASE("outliers are rejected") {
  const auto s = rig_scene(3, 0.3, 2.0);
  const OracleInitializer init(s.gt, {10.0, 0.2, 0.2, true}, 3);
  RansacConfig cfg;
  cfg.seed = 3;
  const auto a = ransac_grps(s.corrs, init, TrackerConfig::grps_defaults(), cfg);
  CHECK(rotation_error_deg(a.best_pose.R(), s.gt.R()) < 2.0);
  CHECK(a.iterations_run <= 200);
  int flagged_outliers = 0;
  for (std::size_t i = 0; i < s.corrs.size(); ++i) flagged_outliers += a.inlier_mask[i] && s.outliers[i];
  CHECK(flagged_outliers <= 3);
  CHECK(a.n_inliers == std::count(a.inlier_mask.begin(), a.inlier_mask.end(), true));

  // monotone best count
  REQUIRE(a.best_count_history.size() == static_cast<std::size_t>(a.iterations_run));
  for (std::size_t i = 1; i < a.best_count_history.size(); ++i) {
    CHECK(a.best_count_history[i] >= a.best_count_history[i - 1]);
  }
  CHECK(a.best_count_history.back() == a.n_inliers);

  int accounted = a.solver_errors;
  for (int c : a.status_counts) accounted += c;
  CHECK(accounted == a.iterations_run);

  // deterministic under a fixed seed
  const auto b = ransac_grps(s.corrs, init, TrackerConfig::grps_defaults(), cfg);
  CHECK(a.best_pose.rotation.coeffs() == b.best_pose.rotation.coeffs());
  CHECK(a.inlier_mask == b.inlier_mask);
  CHECK(a.iterations_run == b.iterations_run);
}

TEST_CASE("sampling sees only the sample") {
  const auto s = rig_scene(4, 0.1, 0.0);
  std::size_t seen = 0;
  const GrpsSolver probe = [&](std::span<const Correspondence2D2D> sample, std::uint64_t) {
    seen = sample.size();
    grps::Solution sol;
    sol.pose = s.gt;
    sol.track.status = TrackStatus::Converged;
    return sol;
  };
  RansacConfig cfg;
  const auto r = ransac_grps(s.corrs, probe, cfg);
  CHECK(seen == 8);
  CHECK(r.n_inliers == 180);
}

TEST_CASE("failing solver") {
  const auto s = rig_scene(5, 0.0, 0.0);
  const GrpsSolver broken = [](std::span<const Correspondence2D2D>, std::uint64_t) -> grps::Solution {
    throw Error(ErrorCode::Degenerate, "ill-conditioned depth recovery");
  };
  RansacConfig cfg;
  cfg.max_iters = 10;
  CHECK_THROWS_WITH_AS(ransac_grps(s.corrs, broken, cfg), "no hypothesis found", Error);

  const GrpsSolver diverging = [](std::span<const Correspondence2D2D>, std::uint64_t) {
    grps::Solution sol;
    sol.track.status = TrackStatus::Diverged;
    return sol;
  };
  CHECK_THROWS_AS(ransac_grps(s.corrs, diverging, cfg), Error);

  std::vector<Correspondence2D2D> few(s.corrs.begin(), s.corrs.begin() + 5);
  CHECK_THROWS_AS(ransac_grps(few, broken, cfg), Error);
}

}
