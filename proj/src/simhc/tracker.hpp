#pragma once

#include <cstdint>
#include <string>

#include "simhc/error.hpp"
#include "simhc/poly_system.hpp"

namespace simhc {

// Straight-line homotopy H(x, t) = (1 - t) G(x) + t F(x).
class Homotopy {
 public:
  // Both systems must outlive the homotopy.
  Homotopy(const PolySystem& start, const PolySystem& target);

  const PolySystem& start() const { return *start_; }
  const PolySystem& target() const { return *target_; }
  int n_vars() const { return start_->n_vars(); }
  int n_eqs() const { return start_->n_eqs(); }

 private:
  const PolySystem* start_;
  const PolySystem* target_;
};

VecX homotopy_eval(const Homotopy& H, const VecX& x, double t);
MatX homotopy_jac(const Homotopy& H, const VecX& x, double t);
// dH/dt = F(x) - G(x).
VecX homotopy_dt(const Homotopy& H, const VecX& x);

enum class Predictor : std::uint8_t {
  // x + dt * dx/dt
  Euler,
  // Classical fourth-order Runge-Kutta on dx/dt.
  RungeKutta4,
};

const char* to_string(Predictor predictor);
Predictor predictor_from_string(const std::string& name);

struct TrackerConfig {
  Predictor predictor = Predictor::Euler;
  double step_size = 0.02;
  int max_newton_iters = 5;
  double newton_tol = 1e-10;
  double divergence_radius = 1e4;
  double singular_tol = 1e-12;

  static TrackerConfig upnp_defaults();
  static TrackerConfig grps_defaults();
  void validate() const;
};

enum class TrackStatus : std::uint8_t {
  Converged,
  // Terminal corrector stalled at a least-squares stationary point with a
  // residual above newton_tol. Expected for noisy overdetermined systems,
  // which have no exact root.
  ConvergedLeastSquares,
  // Terminal corrector neither reached newton_tol nor stalled.
  NotConverged,
  Diverged,
  SingularJacobian,
  // Reserved for adaptive stepping; never produced by fixed stepping.
  MaxStepsExceeded,
};

const char* to_string(TrackStatus status);

struct TrackResult {
  TrackStatus status = TrackStatus::NotConverged;
  VecX x_final;
  double final_residual_norm = 0.0;
  int steps_taken = 0;
};

// Thrown from predict_step / newton_correct when the smallest pivot of the
// column-pivoted QR of J_H (an estimate of its smallest singular value) falls
// below singular_tol.
class SingularJacobianError : public Error {
 public:
  explicit SingularJacobianError(double smallest_pivot);
  double smallest_pivot() const { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

// Integrates dx/dt = -J_H(x, t)^+ dH/dt from t to t + dt.
VecX predict_step(const Homotopy& H, const VecX& x, double t, double dt,
                  Predictor predictor = Predictor::RungeKutta4, double singular_tol = 1e-12);

struct CorrectResult {
  VecX x;
  bool converged = false;
  // Last Gauss-Newton update was negligible relative to |x|.
  bool stalled = false;
  int iterations = 0;
  double residual_norm = 0.0;
};

CorrectResult newton_correct(const Homotopy& H, const VecX& x, double t,
                             const TrackerConfig& config);
CorrectResult newton_correct(const Homotopy& H, const VecX& x, double t,
                             const TrackerConfig& config, int max_iters);

TrackResult track_path(const Homotopy& H, const VecX& x0,
                       const TrackerConfig& config);

struct LmResult {
  VecX x;
  double residual_norm = 0.0;
  int iterations = 0;
};

// Levenberg-Marquardt on 0.5 |F(x)|^2 with damping (J^T J + lambda I).
LmResult lm_refine(const PolySystem& F, const VecX& x0, int max_iters = 100);

}  // namespace simhc
