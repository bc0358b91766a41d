#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "simhc/grps.hpp"
#include "simhc/upnp.hpp"

namespace simhc {

struct RansacConfig {
  int max_iters = 200;
  double confidence = 0.99;
  double inlier_threshold = 0.01;
  // 0 selects the problem default (8 for GRPS, 4 for UPnP).
  int sample_size = 0;
  std::uint64_t seed = 0;

  int sample_size_for(ProblemKind kind) const;
  void validate(ProblemKind kind) const;
};

constexpr std::size_t kTrackStatusCount = 6;

struct RansacResult {
  Pose best_pose;
  std::vector<bool> inlier_mask;
  int n_inliers = 0;
  int iterations_run = 0;
  // Indexed by TrackStatus.
  std::array<int, kTrackStatusCount> status_counts{};
  // Samples on which the solver threw (degenerate sample, simulator failure).
  int solver_errors = 0;
  // Best inlier count after each iteration.
  std::vector<int> best_count_history;
  double wall_time_ms = 0.0;
};

// Adaptive bound log(1 - confidence) / log(1 - w^m), rounded up; 1 when
// w = 1, INT_MAX when w = 0.
int ransac_required_iterations(double inlier_fraction, int sample_size, double confidence);

using UpnpSolver =
    std::function<upnp::Solution(std::span<const Correspondence2D3D>, std::uint64_t draw)>;
using GrpsSolver =
    std::function<grps::Solution(std::span<const Correspondence2D2D>, std::uint64_t draw)>;

// Vanilla RANSAC: the best hypothesis is re-scored on all correspondences,
// never refit. Throws Error(NoSolution) "no hypothesis found" when every
// sample failed.
RansacResult ransac_upnp(std::span<const Correspondence2D3D> corrs, const UpnpSolver& solver,
                         const RansacConfig& cfg);
RansacResult ransac_grps(std::span<const Correspondence2D2D> corrs, const GrpsSolver& solver,
                         const RansacConfig& cfg);

// Simulator HC as the hypothesis generator; the initializer sees only the
// sampled correspondences and receives the iteration index as its draw.
RansacResult ransac_upnp(std::span<const Correspondence2D3D> corrs, const Initializer& init,
                         const TrackerConfig& tracker, const RansacConfig& cfg);
RansacResult ransac_grps(std::span<const Correspondence2D2D> corrs, const Initializer& init,
                         const TrackerConfig& tracker, const RansacConfig& cfg);

}  // namespace simhc
