#pragma once

#include <cstdint>
#include <span>

#include "simhc/correspondence.hpp"
#include "simhc/geometry.hpp"

namespace simhc {

enum class InitProvenance { Random, PerturbedOracle, Learned };

struct InitialSolution {
  Pose pose;
  InitProvenance provenance = InitProvenance::Random;
};

// Uniform rotation (normalized 4-Gaussian), t uniform in [-1, 1]^3, and for
// GRPS a scale uniform in [0.1, 5.0] (UPnP scale stays 1).
InitialSolution random_init(std::uint64_t seed, ProblemKind kind);

// gt rotated about a random axis by exactly rot_deg, translation displaced
// in a random direction by trans_frac * |t|, scale multiplied by
// (1 + u * scale_frac) with u uniform in [-1, 1].
InitialSolution perturbed_oracle(const Pose& gt, double rot_deg, double trans_frac,
                                 double scale_frac, std::uint64_t seed);

// Source of the rough start pose for a solve. `draw` distinguishes repeated
// calls on the same problem (RANSAC iterations) and must make the result
// deterministic. Implementations are immutable and thread-safe.
class Initializer {
 public:
  virtual ~Initializer() = default;

  virtual InitialSolution initialize(std::span<const Correspondence2D3D> corrs,
                                     std::uint64_t draw) const = 0;
  virtual InitialSolution initialize(std::span<const Correspondence2D2D> corrs,
                                     std::uint64_t draw) const = 0;
};

class RandomInitializer final : public Initializer {
 public:
  explicit RandomInitializer(std::uint64_t seed) : seed_(seed) {}

  InitialSolution initialize(std::span<const Correspondence2D3D> corrs,
                             std::uint64_t draw) const override;
  InitialSolution initialize(std::span<const Correspondence2D2D> corrs,
                             std::uint64_t draw) const override;

 private:
  std::uint64_t seed_;
};

struct OracleSpread {
  double rot_deg = 0.0;
  double trans_frac = 0.0;
  double scale_frac = 0.0;
  // When set, the rotation angle and translation offset are drawn uniformly
  // from [0, rot_deg] and [0, trans_frac] instead of being exact.
  bool up_to = false;
};

// Test-harness stand-in for a learned regressor: perturbs a known pose.
class OracleInitializer final : public Initializer {
 public:
  OracleInitializer(const Pose& gt, const OracleSpread& spread, std::uint64_t seed)
      : gt_(gt), spread_(spread), seed_(seed) {}

  InitialSolution initialize(std::span<const Correspondence2D3D> corrs,
                             std::uint64_t draw) const override;
  InitialSolution initialize(std::span<const Correspondence2D2D> corrs,
                             std::uint64_t draw) const override;

 private:
  InitialSolution draw_pose(std::uint64_t draw) const;

  Pose gt_;
  OracleSpread spread_;
  std::uint64_t seed_;
};

}  // namespace simhc
