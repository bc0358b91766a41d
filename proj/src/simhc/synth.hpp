#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "simhc/correspondence.hpp"
#include "simhc/geometry.hpp"
#include "simhc/rng.hpp"

namespace simhc {

enum class NoiseMode { Uniform, Gaussian };

const char* to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(const char* name);

struct Box {
  Vec3 lo;
  Vec3 hi;
};

enum class PointSampling {
  // Uniform in point_volume.
  Box,
  // c uniform in [-1, 1]^3, point = (max - min) c + min c / |c|: a shell of
  // points surrounding the world origin at distance >= min.
  DepthShell,
};

const char* to_string(PointSampling sampling);
PointSampling point_sampling_from_string(const char* name);

struct SceneConfig {
  ProblemKind kind = ProblemKind::Upnp;
  int n_cameras = 4;
  int n_points = 16;
  // World points.
  PointSampling point_sampling = PointSampling::DepthShell;
  Box point_volume{Vec3(-1, -1, 4), Vec3(1, 1, 8)};
  double shell_min_depth = 4.0;
  double shell_max_depth = 8.0;
  // Per-camera ray origins inside a rig, in rig units.
  Box camera_volume{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  // UPnP: ground-truth translation. GRPS: origins of the two view frames.
  Box origin_volume{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  // Each Euler angle is drawn from [-range, range] (radians).
  double rotation_angle_range = 1.5707963267948966;
  double scale_min = 0.1;
  double scale_max = 5.0;
  double noise_px = 0.0;
  NoiseMode noise_mode = NoiseMode::Uniform;
  double virtual_focal_px = 800.0;
  // Fraction of correspondences whose view-1 bearing is replaced by a
  // uniformly random direction.
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;

  static SceneConfig upnp_defaults();
  static SceneConfig grps_defaults();
  void validate() const;
};

struct UpnpScene {
  SceneConfig config;
  std::vector<Correspondence2D3D> corrs;
  Pose gt;
  std::vector<double> depths;
  std::vector<Vec3> clean_bearings;
  std::vector<bool> outliers;
};

struct GrpsScene {
  SceneConfig config;
  std::vector<Correspondence2D2D> corrs;
  Pose gt;
  std::vector<double> depths;
  std::vector<double> depths2;
  std::vector<Vec3> clean_bearings;
  std::vector<Vec3> clean_bearings2;
  std::vector<bool> outliers;
};

using LabeledScene = std::variant<UpnpScene, GrpsScene>;

UpnpScene gen_upnp_scene(const SceneConfig& cfg);
GrpsScene gen_grps_scene(const SceneConfig& cfg);
LabeledScene generate_scene(const SceneConfig& cfg);

const SceneConfig& config_of(const LabeledScene& scene);
const Pose& gt_of(const LabeledScene& scene);
std::size_t size_of(const LabeledScene& scene);

// Perturbs a bearing in the image of a virtual pinhole camera whose optical
// axis is `axis` (the bearing itself in the one-argument form). Uniform mode
// draws each pixel offset from [-noise_px, noise_px]; Gaussian mode uses
// sigma = noise_px.
Vec3 add_pixel_noise(const Vec3& f, const Vec3& axis, double noise_px, double focal_px,
                     NoiseMode mode, Rng& rng);
Vec3 add_pixel_noise(const Vec3& f, double noise_px, double focal_px, NoiseMode mode, Rng& rng);

// Orthonormal (e1, e2) completing `axis` to a right-handed frame; the
// virtual image plane of add_pixel_noise.
std::pair<Vec3, Vec3> image_plane_basis(const Vec3& axis);

}  // namespace simhc
