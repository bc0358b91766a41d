#include "simhc/ransac.hpp"

#include <chrono>
#include <climits>
#include <cmath>
#include <numeric>

#include "simhc/error.hpp"
#include "simhc/rng.hpp"

namespace simhc {

int RansacConfig::sample_size_for(ProblemKind kind) const {
  if (sample_size > 0) return sample_size;
  return kind == ProblemKind::Grps ? 8 : 4;
}

void RansacConfig::validate(ProblemKind kind) const {
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "confidence must lie in (0, 1)");
  }
  if (!(inlier_threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "inlier_threshold must be > 0");
  const int m = sample_size_for(kind);
  if (kind == ProblemKind::Grps && m != 7 && m != 8) {
    throw Error(ErrorCode::InvalidArgument, "GRPS sample size must be 7 or 8");
  }
  if (kind == ProblemKind::Upnp && m < 4) {
    throw Error(ErrorCode::InvalidArgument, "UPnP sample size must be >= 4");
  }
}

int ransac_required_iterations(double w, int m, double confidence) {
  if (w >= 1.0) return 1;
  if (w <= 0.0) return INT_MAX;
  const double wm = std::pow(w, m);
  if (wm <= 0.0) return INT_MAX;
  const double n = std::log(1.0 - confidence) / std::log1p(-wm);
  if (!std::isfinite(n) || n >= static_cast<double>(INT_MAX)) return INT_MAX;
  return std::max(1, static_cast<int>(std::ceil(n)));
}

namespace {

template <class Corr, class Solve, class Residual>
RansacResult run_ransac(std::span<const Corr> corrs, ProblemKind kind, const Solve& solve,
                        const Residual& residual, const RansacConfig& cfg) {
  cfg.validate(kind);
  const int m = cfg.sample_size_for(kind);
  const std::size_t n = corrs.size();
  if (n < static_cast<std::size_t>(m)) {
    throw Error(ErrorCode::InvalidArgument, "fewer correspondences than the sample size");
  }
  const auto t0 = std::chrono::steady_clock::now();

  RansacResult res;
  res.inlier_mask.assign(n, false);
  bool have = false;
  std::vector<std::size_t> idx(n);
  std::vector<Corr> sample(static_cast<std::size_t>(m));
  std::vector<bool> mask(n);
  int bound = cfg.max_iters;

  for (int it = 0; it < bound; ++it) {
    res.iterations_run = it + 1;
    Rng rng(derive_seed(cfg.seed, streams::kRansac, static_cast<std::uint64_t>(it)));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (int k = 0; k < m; ++k) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), n - 1);
      std::swap(idx[static_cast<std::size_t>(k)], idx[pick(rng)]);
      sample[static_cast<std::size_t>(k)] = corrs[idx[static_cast<std::size_t>(k)]];
    }

    try {
      const auto sol = solve(std::span<const Corr>(sample), static_cast<std::uint64_t>(it));
      ++res.status_counts[static_cast<std::size_t>(sol.track.status)];
      const bool usable = sol.track.status != TrackStatus::Diverged &&
                          sol.track.status != TrackStatus::SingularJacobian &&
                          sol.track.status != TrackStatus::MaxStepsExceeded &&
                          sol.pose.translation.allFinite() && std::isfinite(sol.pose.scale);
      if (usable) {
        int count = 0;
        for (std::size_t i = 0; i < n; ++i) {
          mask[i] = residual(corrs[i], sol.pose) < cfg.inlier_threshold;
          count += mask[i];
        }
        if (!have || count > res.n_inliers) {
          have = true;
          res.best_pose = sol.pose;
          res.n_inliers = count;
          res.inlier_mask = mask;
          const double w = static_cast<double>(count) / static_cast<double>(n);
          bound = std::min(cfg.max_iters, ransac_required_iterations(w, m, cfg.confidence));
        }
      }
    } catch (const Error&) {
      ++res.solver_errors;
    }
    res.best_count_history.push_back(res.n_inliers);
  }

  res.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (!have) throw Error(ErrorCode::NoSolution, "no hypothesis found");
  return res;
}

}  // namespace

RansacResult ransac_upnp(std::span<const Correspondence2D3D> corrs, const UpnpSolver& solver,
                         const RansacConfig& cfg) {
  return run_ransac(corrs, ProblemKind::Upnp, solver,
                    [](const Correspondence2D3D& c, const Pose& p) { return upnp::residual_metric(c, p); },
                    cfg);
}

RansacResult ransac_grps(std::span<const Correspondence2D2D> corrs, const GrpsSolver& solver,
                         const RansacConfig& cfg) {
  return run_ransac(corrs, ProblemKind::Grps, solver,
                    [](const Correspondence2D2D& c, const Pose& p) { return grps::residual_metric(c, p); },
                    cfg);
}

RansacResult ransac_upnp(std::span<const Correspondence2D3D> corrs, const Initializer& init,
                         const TrackerConfig& tracker, const RansacConfig& cfg) {
  return ransac_upnp(
      corrs,
      [&](std::span<const Correspondence2D3D> s, std::uint64_t draw) {
        return upnp::solve_upnp(s, init, tracker, draw);
      },
      cfg);
}

RansacResult ransac_grps(std::span<const Correspondence2D2D> corrs, const Initializer& init,
                         const TrackerConfig& tracker, const RansacConfig& cfg) {
  return ransac_grps(
      corrs,
      [&](std::span<const Correspondence2D2D> s, std::uint64_t draw) {
        return grps::solve_grps(s, init, tracker, draw);
      },
      cfg);
}

}  // namespace simhc
