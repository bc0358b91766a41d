#include "simhc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Geometry>

#include "simhc/error.hpp"

namespace simhc {

namespace {

constexpr int kMaxRetries = 100;
constexpr double kMinDepth = 1e-6;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 sample_box(const Box& box, Rng& rng) {
  return Vec3(uniform(rng, box.lo.x(), box.hi.x()), uniform(rng, box.lo.y(), box.hi.y()),
              uniform(rng, box.lo.z(), box.hi.z()));
}

Vec3 sample_point(const SceneConfig& cfg, Rng& rng) {
  if (cfg.point_sampling == PointSampling::Box) return sample_box(cfg.point_volume, rng);
  for (;;) {
    const Vec3 c(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    const double n = c.norm();
    if (n < 1e-12) continue;
    return (cfg.shell_max_depth - cfg.shell_min_depth) * c + cfg.shell_min_depth * (c / n);
  }
}

Mat3 sample_rotation(double range, Rng& rng) {
  const double a = uniform(rng, -range, range);
  const double b = uniform(rng, -range, range);
  const double c = uniform(rng, -range, range);
  return (Eigen::AngleAxisd(c, Vec3::UnitZ()) * Eigen::AngleAxisd(b, Vec3::UnitY()) *
          Eigen::AngleAxisd(a, Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 random_direction(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const Vec3 d(normal(rng), normal(rng), normal(rng));
    if (d.norm() > 1e-12) return d.normalized();
  }
}

std::vector<Vec3> sample_cameras(const SceneConfig& cfg, Rng& rng) {
  std::vector<Vec3> cams;
  for (int k = 0; k < cfg.n_cameras; ++k) cams.push_back(sample_box(cfg.camera_volume, rng));
  return cams;
}

std::vector<bool> sample_outliers(const SceneConfig& cfg, Rng& rng) {
  const auto n = static_cast<std::size_t>(cfg.n_points);
  const auto n_out = static_cast<std::size_t>(std::lround(cfg.outlier_fraction * cfg.n_points));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<bool> mask(n, false);
  for (std::size_t k = 0; k < n_out; ++k) mask[idx[k]] = true;
  return mask;
}

Vec3 noisy(const Vec3& f, const SceneConfig& cfg, Rng& rng) {
  if (cfg.noise_px == 0.0) return f;
  return add_pixel_noise(f, cfg.noise_px, cfg.virtual_focal_px, cfg.noise_mode, rng);
}

void check_box(const Box& b, const char* name) {
  if (!((b.lo.array() <= b.hi.array()).all())) {
    throw Error(ErrorCode::InvalidArgument, std::string("empty ") + name);
  }
}

}  // namespace

const char* to_string(NoiseMode mode) {
  return mode == NoiseMode::Uniform ? "uniform" : "gaussian";
}

NoiseMode noise_mode_from_string(const char* name) {
  const std::string s(name);
  if (s == "uniform") return NoiseMode::Uniform;
  if (s == "gaussian") return NoiseMode::Gaussian;
  throw Error(ErrorCode::InvalidArgument, "unknown noise mode '" + s + "'");
}

SceneConfig SceneConfig::upnp_defaults() { return SceneConfig{}; }

const char* to_string(PointSampling sampling) {
  return sampling == PointSampling::Box ? "box" : "shell";
}

PointSampling point_sampling_from_string(const char* name) {
  const std::string s(name);
  if (s == "box") return PointSampling::Box;
  if (s == "shell") return PointSampling::DepthShell;
  throw Error(ErrorCode::InvalidArgument, "unknown point sampling '" + s + "'");
}

SceneConfig SceneConfig::grps_defaults() {
  SceneConfig c;
  c.kind = ProblemKind::Grps;
  c.n_cameras = 3;
  c.n_points = 7;
  // Only used with PointSampling::Box.
  c.point_volume = {Vec3(-1, -1, 2), Vec3(1, 1, 20)};
  return c;
}

void SceneConfig::validate() const {
  if (n_cameras < 1) throw Error(ErrorCode::InvalidArgument, "n_cameras must be >= 1");
  if (n_points < 1) throw Error(ErrorCode::InvalidArgument, "n_points must be >= 1");
  check_box(point_volume, "point volume");
  if (!(shell_min_depth >= 0.0 && shell_min_depth <= shell_max_depth)) {
    throw Error(ErrorCode::InvalidArgument, "shell depth range must satisfy 0 <= min <= max");
  }
  check_box(camera_volume, "camera volume");
  check_box(origin_volume, "origin volume");
  if (!(noise_px >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_px must be >= 0");
  if (!(virtual_focal_px > 0.0)) throw Error(ErrorCode::InvalidArgument, "virtual_focal_px must be > 0");
  if (!(scale_min > 0.0 && scale_min <= scale_max)) {
    throw Error(ErrorCode::InvalidArgument, "scale range must be positive and non-empty");
  }
  if (!(outlier_fraction >= 0.0 && outlier_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "outlier_fraction must lie in [0, 1]");
  }
  if (!(rotation_angle_range >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "rotation_angle_range must be >= 0");
  }
}

std::pair<Vec3, Vec3> image_plane_basis(const Vec3& axis) {
  const Vec3 a = axis.normalized();
  Eigen::Index k;
  a.cwiseAbs().minCoeff(&k);
  const Vec3 e1 = a.cross(Vec3::Unit(k)).normalized();
  return {e1, a.cross(e1)};
}

Vec3 add_pixel_noise(const Vec3& f, const Vec3& axis, double noise_px, double focal_px,
                     NoiseMode mode, Rng& rng) {
  const Vec3 a = axis.normalized();
  const double depth = f.dot(a);
  if (!(depth > 0.0)) throw Error(ErrorCode::InvalidArgument, "bearing outside virtual image model");
  const auto [e1, e2] = image_plane_basis(a);
  double du = 0.0, dv = 0.0;
  if (mode == NoiseMode::Uniform) {
    du = uniform(rng, -noise_px, noise_px);
    dv = uniform(rng, -noise_px, noise_px);
  } else {
    std::normal_distribution<double> normal(0.0, noise_px);
    du = normal(rng);
    dv = normal(rng);
  }
  const double x = focal_px * f.dot(e1) / depth + du;
  const double y = focal_px * f.dot(e2) / depth + dv;
  return (a + (x / focal_px) * e1 + (y / focal_px) * e2).normalized();
}

Vec3 add_pixel_noise(const Vec3& f, double noise_px, double focal_px, NoiseMode mode, Rng& rng) {
  return add_pixel_noise(f, f, noise_px, focal_px, mode, rng);
}

UpnpScene gen_upnp_scene(const SceneConfig& cfg) {
  cfg.validate();
  if (cfg.kind != ProblemKind::Upnp) throw Error(ErrorCode::InvalidArgument, "config is not a UPnP config");
  Rng rng(cfg.seed);

  UpnpScene scene;
  scene.config = cfg;
  const Mat3 R = sample_rotation(cfg.rotation_angle_range, rng);
  scene.gt.rotation = Quaternion::from_rotmat(R);
  scene.gt.translation = sample_box(cfg.origin_volume, rng);
  scene.gt.scale = 1.0;
  const Mat3 R_gt = scene.gt.R();
  const std::vector<Vec3> cams = sample_cameras(cfg, rng);

  for (int i = 0; i < cfg.n_points; ++i) {
    const Vec3& v = cams[static_cast<std::size_t>(i % cfg.n_cameras)];
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxRetries) throw Error(ErrorCode::Degenerate, "could not sample a point in front of its ray origin");
      const Vec3 p = sample_point(cfg, rng);
      const Vec3 ray = R_gt * p + scene.gt.translation - v;
      const double depth = ray.norm();
      if (!(depth > kMinDepth)) continue;
      const Vec3 f = ray / depth;
      scene.corrs.push_back({p, f, v});
      scene.depths.push_back(depth);
      scene.clean_bearings.push_back(f);
      break;
    }
  }

  for (auto& c : scene.corrs) c.f = noisy(c.f, cfg, rng);
  scene.outliers = sample_outliers(cfg, rng);
  for (std::size_t i = 0; i < scene.corrs.size(); ++i) {
    if (scene.outliers[i]) scene.corrs[i].f = random_direction(rng);
  }
  return scene;
}

GrpsScene gen_grps_scene(const SceneConfig& cfg) {
  cfg.validate();
  if (cfg.kind != ProblemKind::Grps) throw Error(ErrorCode::InvalidArgument, "config is not a GRPS config");
  Rng rng(cfg.seed);

  GrpsScene scene;
  scene.config = cfg;
  const Mat3 R1 = sample_rotation(cfg.rotation_angle_range, rng);
  const Mat3 R2 = sample_rotation(cfg.rotation_angle_range, rng);
  const Vec3 o1 = sample_box(cfg.origin_volume, rng);
  const Vec3 o2 = sample_box(cfg.origin_volume, rng);
  const double s = uniform(rng, cfg.scale_min, cfg.scale_max);
  const std::vector<Vec3> cams1 = sample_cameras(cfg, rng);
  const std::vector<Vec3> cams2 = sample_cameras(cfg, rng);

  // Relative pose taking view-2 coordinates into view 1.
  scene.gt.rotation = Quaternion::from_rotmat(R1.transpose() * R2);
  scene.gt.translation = R1.transpose() * (o2 - o1);
  scene.gt.scale = s;

  for (int i = 0; i < cfg.n_points; ++i) {
    const auto cam = static_cast<std::size_t>(i % cfg.n_cameras);
    const Vec3& v = cams1[cam];
    const Vec3& v2 = cams2[cam];
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxRetries) throw Error(ErrorCode::Degenerate, "could not sample a point in front of its ray origins");
      const Vec3 X = sample_point(cfg, rng);
      const Vec3 ray1 = R1.transpose() * (X - o1) - v;
      const Vec3 ray2 = R2.transpose() * (X - o2) - s * v2;
      const double a1 = ray1.norm();
      const double a2 = ray2.norm();
      if (!(a1 > kMinDepth) || !(a2 > kMinDepth)) continue;
      scene.corrs.push_back({ray1 / a1, v, ray2 / a2, v2});
      scene.depths.push_back(a1);
      scene.depths2.push_back(a2);
      scene.clean_bearings.push_back(ray1 / a1);
      scene.clean_bearings2.push_back(ray2 / a2);
      break;
    }
  }

  for (auto& c : scene.corrs) {
    c.f = noisy(c.f, cfg, rng);
    c.f2 = noisy(c.f2, cfg, rng);
  }
  scene.outliers = sample_outliers(cfg, rng);
  for (std::size_t i = 0; i < scene.corrs.size(); ++i) {
    if (scene.outliers[i]) scene.corrs[i].f = random_direction(rng);
  }
  return scene;
}

LabeledScene generate_scene(const SceneConfig& cfg) {
  if (cfg.kind == ProblemKind::Upnp) return gen_upnp_scene(cfg);
  return gen_grps_scene(cfg);
}

const SceneConfig& config_of(const LabeledScene& scene) {
  return std::visit([](const auto& s) -> const SceneConfig& { return s.config; }, scene);
}

const Pose& gt_of(const LabeledScene& scene) {
  return std::visit([](const auto& s) -> const Pose& { return s.gt; }, scene);
}

std::size_t size_of(const LabeledScene& scene) {
  return std::visit([](const auto& s) { return s.corrs.size(); }, scene);
}

}  // namespace simhc
