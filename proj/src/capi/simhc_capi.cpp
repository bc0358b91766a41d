#include "simhc/simhc.h"

#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <variant>

#include "simhc/dataset.hpp"
#include "simhc/error.hpp"
#include "simhc/grps.hpp"
#include "simhc/ransac.hpp"
#include "simhc/regressor.hpp"
#include "simhc/rng.hpp"
#include "simhc/synth.hpp"
#include "simhc/upnp.hpp"

struct simhc_scene {
  simhc::LabeledScene scene;
};

struct simhc_model {
  std::shared_ptr<const simhc::RegressorModel> model;
};

struct simhc_initializer {
  enum class Kind { Random, Oracle, Model } kind = Kind::Random;
  std::uint64_t seed = 0;
  simhc::OracleSpread spread;
  std::shared_ptr<const simhc::RegressorModel> model;
};

namespace {

using namespace simhc;

thread_local std::string g_last_error;

simhc_status code_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return SIMHC_E_INVALID_ARGUMENT;
    case ErrorCode::Degenerate: return SIMHC_E_DEGENERATE;
    case ErrorCode::Io: return SIMHC_E_IO;
    case ErrorCode::Format: return SIMHC_E_FORMAT;
    case ErrorCode::NoSolution: return SIMHC_E_NO_SOLUTION;
    case ErrorCode::Internal: return SIMHC_E_INTERNAL;
  }
  return SIMHC_E_INTERNAL;
}

simhc_status fail(simhc_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
simhc_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SIMHC_OK;
  } catch (const Error& e) {
    return fail(code_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SIMHC_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SIMHC_E_INTERNAL, e.what());
  } catch (...) {
    return fail(SIMHC_E_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

void put(const Vec3& v, double* out) {
  out[0] = v.x();
  out[1] = v.y();
  out[2] = v.z();
}

Vec3 get(const double* in) { return Vec3(in[0], in[1], in[2]); }

simhc_pose to_c(const Pose& p) {
  simhc_pose out;
  const Vec4& q = p.rotation.coeffs();
  for (int i = 0; i < 4; ++i) out.q[i] = q[i];
  put(p.translation, out.t);
  out.s = p.scale;
  return out;
}

simhc_scene_config to_c(const SceneConfig& c) {
  simhc_scene_config o{};
  o.kind = c.kind == ProblemKind::Upnp ? SIMHC_UPNP : SIMHC_GRPS;
  o.n_cameras = c.n_cameras;
  o.n_points = c.n_points;
  o.point_sampling = c.point_sampling == PointSampling::Box ? SIMHC_SAMPLING_BOX : SIMHC_SAMPLING_SHELL;
  put(c.point_volume.lo, o.point_lo);
  put(c.point_volume.hi, o.point_hi);
  o.shell_min_depth = c.shell_min_depth;
  o.shell_max_depth = c.shell_max_depth;
  put(c.camera_volume.lo, o.camera_lo);
  put(c.camera_volume.hi, o.camera_hi);
  put(c.origin_volume.lo, o.origin_lo);
  put(c.origin_volume.hi, o.origin_hi);
  o.rotation_angle_range = c.rotation_angle_range;
  o.scale_min = c.scale_min;
  o.scale_max = c.scale_max;
  o.noise_px = c.noise_px;
  o.noise_mode = c.noise_mode == NoiseMode::Uniform ? SIMHC_NOISE_UNIFORM : SIMHC_NOISE_GAUSSIAN;
  o.virtual_focal_px = c.virtual_focal_px;
  o.outlier_fraction = c.outlier_fraction;
  o.seed = c.seed;
  return o;
}

SceneConfig from_c(const simhc_scene_config& o) {
  require(o.kind == SIMHC_UPNP || o.kind == SIMHC_GRPS, "unknown problem kind");
  require(o.point_sampling == SIMHC_SAMPLING_BOX || o.point_sampling == SIMHC_SAMPLING_SHELL,
          "unknown point sampling");
  require(o.noise_mode == SIMHC_NOISE_UNIFORM || o.noise_mode == SIMHC_NOISE_GAUSSIAN,
          "unknown noise mode");
  SceneConfig c;
  c.kind = o.kind == SIMHC_UPNP ? ProblemKind::Upnp : ProblemKind::Grps;
  c.n_cameras = o.n_cameras;
  c.n_points = o.n_points;
  c.point_sampling = o.point_sampling == SIMHC_SAMPLING_BOX ? PointSampling::Box : PointSampling::DepthShell;
  c.point_volume = {get(o.point_lo), get(o.point_hi)};
  c.shell_min_depth = o.shell_min_depth;
  c.shell_max_depth = o.shell_max_depth;
  c.camera_volume = {get(o.camera_lo), get(o.camera_hi)};
  c.origin_volume = {get(o.origin_lo), get(o.origin_hi)};
  c.rotation_angle_range = o.rotation_angle_range;
  c.scale_min = o.scale_min;
  c.scale_max = o.scale_max;
  c.noise_px = o.noise_px;
  c.noise_mode = o.noise_mode == SIMHC_NOISE_UNIFORM ? NoiseMode::Uniform : NoiseMode::Gaussian;
  c.virtual_focal_px = o.virtual_focal_px;
  c.outlier_fraction = o.outlier_fraction;
  c.seed = o.seed;
  return c;
}

TrackerConfig tracker_from(const simhc_solve_options& o) {
  require(o.predictor == SIMHC_PREDICTOR_EULER || o.predictor == SIMHC_PREDICTOR_RK4,
          "unknown predictor");
  TrackerConfig t;
  t.predictor = o.predictor == SIMHC_PREDICTOR_EULER ? Predictor::Euler : Predictor::RungeKutta4;
  t.step_size = o.step_size;
  t.max_newton_iters = o.max_newton_iters;
  t.newton_tol = o.newton_tol;
  t.divergence_radius = o.divergence_radius;
  t.singular_tol = o.singular_tol;
  t.validate();
  return t;
}

std::unique_ptr<Initializer> bind(const simhc_initializer& h, const Pose& gt) {
  switch (h.kind) {
    case simhc_initializer::Kind::Random: return std::make_unique<RandomInitializer>(h.seed);
    case simhc_initializer::Kind::Oracle: return std::make_unique<OracleInitializer>(gt, h.spread, h.seed);
    case simhc_initializer::Kind::Model: return std::make_unique<LearnedInitializer>(h.model);
  }
  throw Error(ErrorCode::Internal, "unknown initializer kind");
}

struct Errors {
  double r, t, s;
};

Errors errors(const Pose& est, const Pose& gt) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Errors e{rotation_error_deg(est.R(), gt.R()), nan, nan};
  try {
    e.t = translation_error_pct(est.translation, gt.translation);
  } catch (const Error&) {
  }
  try {
    e.s = scale_error_pct(est.scale, gt.scale);
  } catch (const Error&) {
  }
  return e;
}

template <class C>
std::span<const C> first_n(const std::vector<C>& v, int n) {
  require(n >= 0, "n_points must be >= 0");
  if (n == 0) return v;
  require(static_cast<std::size_t>(n) <= v.size(), "n_points exceeds the scene size");
  return std::span<const C>(v.data(), static_cast<std::size_t>(n));
}

simhc_track_status to_c(TrackStatus s) { return static_cast<simhc_track_status>(static_cast<int>(s)); }

template <class Solution>
void fill(simhc_solve_result* out, const Solution& sol, const Pose& gt) {
  out->pose = to_c(sol.pose);
  out->init = to_c(sol.init.pose);
  out->track_status = to_c(sol.track.status);
  out->residual_norm = sol.track.final_residual_norm;
  out->steps = sol.track.steps_taken;
  const Errors e = errors(sol.pose, gt);
  out->rot_err_deg = e.r;
  out->trans_err_pct = e.t;
  out->scale_err_pct = e.s;
}

}  // namespace

extern "C" {

const char* simhc_last_error(void) { return g_last_error.c_str(); }

const char* simhc_status_string(simhc_status status) {
  switch (status) {
    case SIMHC_OK: return "ok";
    case SIMHC_E_INVALID_ARGUMENT: return "invalid argument";
    case SIMHC_E_DEGENERATE: return "degenerate input";
    case SIMHC_E_IO: return "i/o error";
    case SIMHC_E_FORMAT: return "format error";
    case SIMHC_E_NO_SOLUTION: return "no solution";
    case SIMHC_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* simhc_track_status_string(simhc_track_status status) {
  const int i = static_cast<int>(status);
  if (i < 0 || i >= SIMHC_TRACK_STATUS_COUNT) return "unknown";
  return simhc::to_string(static_cast<TrackStatus>(i));
}

const char* simhc_version(void) { return "1.0.0"; }

uint64_t simhc_derive_seed(uint64_t root, uint64_t stream, uint64_t index) {
  return derive_seed(root, stream, index);
}

simhc_status simhc_scene_config_default(simhc_kind kind, simhc_scene_config* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    require(kind == SIMHC_UPNP || kind == SIMHC_GRPS, "unknown problem kind");
    *out = to_c(kind == SIMHC_UPNP ? SceneConfig::upnp_defaults() : SceneConfig::grps_defaults());
  });
}

simhc_status simhc_scene_generate(const simhc_scene_config* cfg, simhc_scene** out) {
  return guarded([&] {
    require(cfg != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    *out = new simhc_scene{generate_scene(from_c(*cfg))};
  });
}

simhc_status simhc_scene_from_json(const char* text, simhc_scene** out) {
  return guarded([&] {
    require(text != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    *out = new simhc_scene{scene_from_json(text)};
  });
}

simhc_status simhc_scene_to_json(const simhc_scene* scene, char** out) {
  return guarded([&] {
    require(scene != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    const std::string s = scene_to_json(scene->scene);
    char* buf = new char[s.size() + 1];
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out = buf;
  });
}

void simhc_scene_free(simhc_scene* scene) { delete scene; }
void simhc_string_free(char* s) { delete[] s; }

simhc_status simhc_scene_kind(const simhc_scene* scene, simhc_kind* out) {
  return guarded([&] {
    require(scene != nullptr && out != nullptr, "null argument");
    *out = std::holds_alternative<UpnpScene>(scene->scene) ? SIMHC_UPNP : SIMHC_GRPS;
  });
}

simhc_status simhc_scene_size(const simhc_scene* scene, size_t* out) {
  return guarded([&] {
    require(scene != nullptr && out != nullptr, "null argument");
    *out = size_of(scene->scene);
  });
}

simhc_status simhc_scene_gt(const simhc_scene* scene, simhc_pose* out) {
  return guarded([&] {
    require(scene != nullptr && out != nullptr, "null argument");
    *out = to_c(gt_of(scene->scene));
  });
}

simhc_status simhc_scene_get_config(const simhc_scene* scene, simhc_scene_config* out) {
  return guarded([&] {
    require(scene != nullptr && out != nullptr, "null argument");
    *out = to_c(config_of(scene->scene));
  });
}

simhc_status simhc_scene_outliers(const simhc_scene* scene, unsigned char* mask, size_t len) {
  return guarded([&] {
    require(scene != nullptr && mask != nullptr, "null argument");
    const auto& o = std::visit([](const auto& s) -> const std::vector<bool>& { return s.outliers; },
                               scene->scene);
    require(len == o.size(), "mask length must equal the scene size");
    for (std::size_t i = 0; i < len; ++i) mask[i] = o[i] ? 1 : 0;
  });
}

simhc_status simhc_model_load(const char* path, simhc_model** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    auto m = std::make_shared<const RegressorModel>(load_regressor(path));
    *out = new simhc_model{std::move(m)};
  });
}

void simhc_model_free(simhc_model* model) { delete model; }

simhc_status simhc_model_kind(const simhc_model* model, simhc_kind* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "null argument");
    *out = model->model->problem_kind == ProblemKind::Upnp ? SIMHC_UPNP : SIMHC_GRPS;
  });
}

simhc_status simhc_initializer_random(uint64_t seed, simhc_initializer** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    auto* h = new simhc_initializer;
    h->kind = simhc_initializer::Kind::Random;
    h->seed = seed;
    *out = h;
  });
}

simhc_status simhc_initializer_oracle(double rot_deg, double trans_frac, double scale_frac, int up_to,
                                      uint64_t seed, simhc_initializer** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    require(rot_deg >= 0.0 && trans_frac >= 0.0 && scale_frac >= 0.0,
            "oracle magnitudes must be >= 0");
    auto* h = new simhc_initializer;
    h->kind = simhc_initializer::Kind::Oracle;
    h->seed = seed;
    h->spread = {rot_deg, trans_frac, scale_frac, up_to != 0};
    *out = h;
  });
}

simhc_status simhc_initializer_model(const simhc_model* model, simhc_initializer** out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "null argument");
    auto* h = new simhc_initializer;
    h->kind = simhc_initializer::Kind::Model;
    h->model = model->model;
    *out = h;
  });
}

void simhc_initializer_free(simhc_initializer* init) { delete init; }

simhc_status simhc_solve_options_default(simhc_kind kind, simhc_solve_options* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    require(kind == SIMHC_UPNP || kind == SIMHC_GRPS, "unknown problem kind");
    const TrackerConfig t = kind == SIMHC_UPNP ? TrackerConfig::upnp_defaults() : TrackerConfig::grps_defaults();
    out->method = SIMHC_METHOD_HC;
    out->predictor = t.predictor == Predictor::Euler ? SIMHC_PREDICTOR_EULER : SIMHC_PREDICTOR_RK4;
    out->step_size = t.step_size;
    out->max_newton_iters = t.max_newton_iters;
    out->newton_tol = t.newton_tol;
    out->divergence_radius = t.divergence_radius;
    out->singular_tol = t.singular_tol;
    out->n_points = 0;
    out->draw = 0;
    out->lm_max_iters = 100;
  });
}

simhc_status simhc_solve(const simhc_scene* scene, const simhc_initializer* init,
                         const simhc_solve_options* opts, simhc_solve_result* out) {
  return guarded([&] {
    require(scene != nullptr && init != nullptr && opts != nullptr && out != nullptr, "null argument");
    require(opts->method == SIMHC_METHOD_HC || opts->method == SIMHC_METHOD_LM ||
                opts->method == SIMHC_METHOD_INIT_ONLY,
            "unknown method");
    require(opts->lm_max_iters >= 1, "lm_max_iters must be >= 1");
    const TrackerConfig tracker = tracker_from(*opts);
    const Pose& gt = gt_of(scene->scene);
    const auto initializer = bind(*init, gt);
    *out = simhc_solve_result{};

    const auto t0 = std::chrono::steady_clock::now();
    if (const auto* u = std::get_if<UpnpScene>(&scene->scene)) {
      const auto corrs = first_n(u->corrs, opts->n_points);
      upnp::Solution sol;
      if (opts->method == SIMHC_METHOD_HC) {
        sol = upnp::solve_upnp(corrs, *initializer, tracker, opts->draw);
      } else if (opts->method == SIMHC_METHOD_LM) {
        sol = upnp::solve_upnp_lm(corrs, *initializer, opts->lm_max_iters, opts->draw);
      } else {
        sol.init = initializer->initialize(corrs, opts->draw);
        sol.init.pose.translation = upnp::recover_translation_depths(sol.init.pose.rotation, corrs).t;
        sol.init.pose.scale = 1.0;
        sol.pose = sol.init.pose;
        sol.track.status = TrackStatus::NotConverged;
        sol.track.x_final = sol.pose.rotation.coeffs();
        sol.track.final_residual_norm = upnp::upnp_system(upnp::build_M(corrs)).evaluate(sol.track.x_final).norm();
      }
      const auto t1 = std::chrono::steady_clock::now();
      fill(out, sol, gt);
      out->depths_positive = sol.depths_positive ? 1 : 0;
      out->time_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
    } else {
      const auto& g = std::get<GrpsScene>(scene->scene);
      const auto corrs = first_n(g.corrs, opts->n_points);
      grps::Solution sol;
      if (opts->method == SIMHC_METHOD_HC) {
        sol = grps::solve_grps(corrs, *initializer, tracker, opts->draw);
      } else if (opts->method == SIMHC_METHOD_LM) {
        sol = grps::solve_grps_lm(corrs, *initializer, opts->lm_max_iters, opts->draw);
      } else {
        sol.init = initializer->initialize(corrs, opts->draw);
        sol.pose = sol.init.pose;
        sol.track.status = TrackStatus::NotConverged;
        sol.track.x_final = grps::pack(sol.pose);
        sol.track.final_residual_norm = grps::System(std::vector<Correspondence2D2D>(corrs.begin(), corrs.end())).evaluate(sol.track.x_final).norm();
        sol.infeasible_scale = !(sol.pose.scale > 0.0);
      }
      const auto t1 = std::chrono::steady_clock::now();
      fill(out, sol, gt);
      out->infeasible = sol.infeasible_scale ? 1 : 0;
      out->time_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
  });
}

simhc_status simhc_ransac_options_default(simhc_kind kind, simhc_ransac_options* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    require(kind == SIMHC_UPNP || kind == SIMHC_GRPS, "unknown problem kind");
    const RansacConfig c;
    out->max_iters = c.max_iters;
    out->confidence = c.confidence;
    out->inlier_threshold = c.inlier_threshold;
    out->sample_size = c.sample_size_for(kind == SIMHC_UPNP ? ProblemKind::Upnp : ProblemKind::Grps);
    out->seed = c.seed;
  });
}

simhc_status simhc_ransac(const simhc_scene* scene, const simhc_initializer* init,
                          const simhc_solve_options* tracker_opts, const simhc_ransac_options* opts,
                          simhc_ransac_result* out, unsigned char* mask, size_t mask_len) {
  return guarded([&] {
    require(scene != nullptr && init != nullptr && tracker_opts != nullptr && opts != nullptr &&
                out != nullptr,
            "null argument");
    require(tracker_opts->method == SIMHC_METHOD_HC, "RANSAC supports only the HC method");
    const std::size_t n = size_of(scene->scene);
    require(mask == nullptr || mask_len == n, "mask length must equal the scene size");
    const TrackerConfig tracker = tracker_from(*tracker_opts);
    const Pose& gt = gt_of(scene->scene);
    const auto initializer = bind(*init, gt);

    RansacConfig rc;
    rc.max_iters = opts->max_iters;
    rc.confidence = opts->confidence;
    rc.inlier_threshold = opts->inlier_threshold;
    rc.sample_size = opts->sample_size;
    rc.seed = opts->seed;

    RansacResult r;
    if (const auto* u = std::get_if<UpnpScene>(&scene->scene)) {
      r = ransac_upnp(u->corrs, *initializer, tracker, rc);
    } else {
      r = ransac_grps(std::get<GrpsScene>(scene->scene).corrs, *initializer, tracker, rc);
    }
    *out = simhc_ransac_result{};
    out->pose = to_c(r.best_pose);
    out->n_inliers = r.n_inliers;
    out->iterations = r.iterations_run;
    for (std::size_t i = 0; i < kTrackStatusCount; ++i) out->status_counts[i] = r.status_counts[i];
    out->solver_errors = r.solver_errors;
    const Errors e = errors(r.best_pose, gt);
    out->rot_err_deg = e.r;
    out->trans_err_pct = e.t;
    out->scale_err_pct = e.s;
    out->wall_time_ms = r.wall_time_ms;
    if (mask != nullptr) {
      for (std::size_t i = 0; i < n; ++i) mask[i] = r.inlier_mask[i] ? 1 : 0;
    }
  });
}

}  // extern "C"
