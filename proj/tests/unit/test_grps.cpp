#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "simhc/error.hpp"
#include "simhc/grps.hpp"
#include "simhc/synth.hpp"

using namespace simhc;
using namespace simhc::grps;

namespace {

GrpsScene scene(std::uint64_t seed, int n = 7, double noise = 0.0) {
  SceneConfig c = SceneConfig::grps_defaults();
  c.seed = seed;
  c.n_points = n;
  c.noise_px = noise;
  return gen_grps_scene(c);
}

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> s(0.1, 5.0);
  Pose p;
  p.rotation = Quaternion(Vec4(n(rng), n(rng), n(rng), n(rng)));
  p.translation = Vec3(n(rng), n(rng), n(rng));
  p.scale = s(rng);
  return p;
}

Vec3 unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

TEST_SUITE("grps") {

TEST_CASE("incidence implies a zero residual") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> depth(0.5, 20.0);
  for (int k = 0; k < 1000; ++k) {
    const Pose p = random_pose(rng);
    const Mat3 R = p.R();
    const Vec3 f2 = unit(rng), v = Vec3(n(rng), n(rng), n(rng)), v2 = Vec3(n(rng), n(rng), n(rng));
    const double a2 = depth(rng);
    const Vec3 X = R * (a2 * f2 + p.scale * v2) + p.translation;
    const Correspondence2D2D c{(X - v).normalized(), v, f2, v2};
    CHECK(std::abs(grps_residual(c, p.rotation.coeffs(), p.translation, p.scale)) <= 1e-12 * X.norm());
  }
}

TEST_CASE("residual equals the signed line-coplanarity oracle") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int k = 0; k < 500; ++k) {
    const Pose p = random_pose(rng);
    const Mat3 R = p.R();
    const Correspondence2D2D c{unit(rng), Vec3(n(rng), n(rng), n(rng)), unit(rng), Vec3(n(rng), n(rng), n(rng))};
    const Vec3 Rf2 = R * c.f2;
    const Vec3 d = c.v - p.scale * R * c.v2 - p.translation;
    Mat3 D;
    D << c.f, Rf2, d;
    const double e = grps_residual(c, p.rotation.coeffs(), p.translation, p.scale);
    CHECK(std::abs(e + D.determinant()) < 1e-12 * std::max(1.0, d.norm()));
    // |e| = distance between the two rays times |f x R f'|
    const double dist = oracle::line_distance(c.v, c.f, p.scale * R * c.v2 + p.translation, Rf2);
    CHECK(std::abs(std::abs(e) - dist * c.f.cross(Rf2).norm()) < 1e-9 * std::max(1.0, d.norm()));
  }
  const Correspondence2D2D central{Vec3(0, 0, 1), Vec3::Zero(), Vec3(0, 0, 1), Vec3(1, 2, 3)};
  CHECK(grps_residual(central, Vec4(1, 0, 0, 0), Vec3::Zero(), 0.0) == 0.0);
}

TEST_CASE("systems") {
  const auto s7 = scene(3, 7);
  const auto s8 = scene(3, 8);
  const System G7 = grps_system(s7.corrs);
  const System G8 = grps_system(s8.corrs);
  CHECK(G7.n_eqs() == 8);
  CHECK(G7.n_vars() == 8);
  CHECK(G8.n_eqs() == 9);
  CHECK(G7.evaluate(pack(s7.gt)).norm() <= 1e-10);
  CHECK(G8.evaluate(pack(s8.gt)).norm() <= 1e-10);

  auto six = s7.corrs;
  six.pop_back();
  CHECK_THROWS_AS(grps_system(six), Error);
  const auto s9 = scene(3, 9);
  CHECK_THROWS_AS(grps_system(s9.corrs), Error);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  const auto noisy = scene(4, 8, 1.0);
  const System N = grps_system(noisy.corrs);
  for (int k = 0; k < 100; ++k) {
    VecX x(8);
    for (int i = 0; i < 8; ++i) x[i] = n(rng);
    CHECK(oracle::rel_max_error(N.jacobian(x), oracle::fd_jacobian(N, x)) <= 1e-5);
  }
}

TEST_CASE("depth recovery") {
  const auto sc = scene(5, 8);
  for (std::size_t i = 0; i < sc.corrs.size(); ++i) {
    const auto d = grps_recover_depths(sc.corrs[i], sc.gt);
    CHECK(d.alpha == doctest::Approx(sc.depths[i]).epsilon(1e-9));
    CHECK(d.alpha2 == doctest::Approx(sc.depths2[i]).epsilon(1e-9));
    const Vec3 r = d.alpha * sc.corrs[i].f - d.alpha2 * sc.gt.R() * sc.corrs[i].f2 +
                   (sc.corrs[i].v - sc.gt.scale * sc.gt.R() * sc.corrs[i].v2 - sc.gt.translation);
    CHECK(r.norm() <= 1e-12 * std::max(1.0, sc.depths[i]));
  }

  Correspondence2D2D parallel{Vec3::UnitZ(), Vec3::Zero(), Vec3::UnitZ(), Vec3::Zero()};
  Pose id;
  id.translation = Vec3(1, 0, 0);
  CHECK_THROWS_WITH_AS(grps_recover_depths(parallel, id), "ill-conditioned depth recovery", Error);
}

TEST_CASE("depths scale with the scene") {
  Pose p;
  p.rotation = Quaternion(Vec4(0.9, 0.1, -0.2, 0.3));
  p.translation = Vec3(0.5, -0.3, 0.2);
  p.scale = 1.0;
  const Vec3 X(0.4, 0.7, 6.0);
  // both ray origins at the frame origins
  const Vec3 f = X.normalized();
  const Vec3 f2 = (p.R().transpose() * (X - p.translation)).normalized();
  const auto d = grps_recover_depths({f, Vec3::Zero(), f2, Vec3::Zero()}, p);
  Pose p2 = p;
  p2.translation *= 2.0;
  const auto d2 = grps_recover_depths({f, Vec3::Zero(), f2, Vec3::Zero()}, p2);
  CHECK(d2.alpha == doctest::Approx(2 * d.alpha).epsilon(1e-12));
  CHECK(d2.alpha2 == doctest::Approx(2 * d.alpha2).epsilon(1e-12));
}

TEST_CASE("online simulator") {
  const auto sc = scene(6, 8);
  const auto same = grps_simulate(sc.gt, sc.corrs);
  for (std::size_t i = 0; i < same.size(); ++i) CHECK((same[i].f - sc.corrs[i].f).norm() < 1e-10);

  std::mt19937_64 rng(7);
  const auto noisy = scene(7, 8, 2.0);
  for (int k = 0; k < 100; ++k) {
    const Pose p = random_pose(rng);
    std::vector<Correspondence2D2D> sim;
    try {
      sim = grps_simulate(p, noisy.corrs);
    } catch (const Error&) {
      continue;
    }
    for (const auto& c : sim) {
      CHECK(std::abs(c.f.norm() - 1.0) < 1e-12);
      CHECK(std::abs(grps_residual(c, p.rotation.coeffs(), p.translation, p.scale)) <= 1e-10);
    }
  }
}

TEST_CASE("solve_grps from exact ground truth") {
  for (int n : {7, 8}) {
    const auto sc = scene(8, n);
    OracleInitializer exact(sc.gt, {}, 0);
    const auto sol = solve_grps(sc.corrs, exact, TrackerConfig::grps_defaults());
    CHECK(sol.track.status == TrackStatus::Converged);
    CHECK(rotation_error_deg(sol.pose.R(), sc.gt.R()) < 1e-7);
    CHECK((sol.pose.translation - sc.gt.translation).norm() < 1e-9);
    CHECK(std::abs(sol.pose.scale - sc.gt.scale) < 1e-9);
    CHECK(sol.pose.rotation.coeffs()[0] >= 0.0);
    CHECK_FALSE(sol.infeasible_scale);
  }
}

TEST_CASE("8-point beats 7-point") {
  int ok7 = 0, ok8 = 0;
  const int trials = 300;
  for (int k = 0; k < trials; ++k) {
    for (int n : {7, 8}) {
      const auto sc = scene(500 + static_cast<std::uint64_t>(k), n);
      OracleInitializer init(sc.gt, {10.0, 0.2, 0.2, true}, static_cast<std::uint64_t>(k));
      const auto sol = solve_grps(sc.corrs, init, TrackerConfig::grps_defaults());
      const bool ok = rotation_error_deg(sol.pose.R(), sc.gt.R()) < 2.0 &&
                      translation_error_pct(sol.pose.translation, sc.gt.translation) < 5.0 &&
                      scale_error_pct(sol.pose.scale, sc.gt.scale) < 5.0;
      (n == 7 ? ok7 : ok8) += ok;
    }
  }
  CHECK(ok8 > ok7);
  CHECK(ok8 >= 0.9 * trials);
}

TEST_CASE("residual metric") {
  const auto sc = scene(9, 8);
  for (const auto& c : sc.corrs) CHECK(residual_metric(c, sc.gt) < 1e-10);
  CHECK(2 * std::asin(0.01 / 2) * 180 / M_PI == doctest::Approx(0.573).epsilon(1e-3));

  std::mt19937_64 rng(10);
  int below = 0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    auto c = sc.corrs[static_cast<std::size_t>(k) % sc.corrs.size()];
    c.f = unit(rng);
    below += residual_metric(c, sc.gt) < 0.01;
  }
  CHECK(below < n / 100);

  Correspondence2D2D parallel{Vec3::UnitZ(), Vec3::Zero(), Vec3::UnitZ(), Vec3::Zero()};
  Pose id;
  id.translation = Vec3(1, 0, 0);
  CHECK(std::isinf(residual_metric(parallel, id)));
}

}
