#include "simhc/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>

namespace simhc {

namespace {

// Least-squares solve of J dx = rhs: dx = J^+ rhs for full column rank J.
VecX pinv_solve(const MatX& J, const VecX& rhs, double singular_tol) {
  const Eigen::ColPivHouseholderQR<MatX> qr(J);
  const double pivot = qr.matrixQR().diagonal().cwiseAbs().minCoeff();
  if (!(pivot >= singular_tol)) throw SingularJacobianError(pivot);
  return qr.solve(rhs);
}

VecX velocity(const Homotopy& H, const VecX& x, double t, double singular_tol) {
  return -pinv_solve(homotopy_jac(H, x, t), homotopy_dt(H, x), singular_tol);
}

bool finite(const VecX& x) { return x.allFinite(); }

}  // namespace

SingularJacobianError::SingularJacobianError(double smallest_pivot)
    : Error(ErrorCode::Degenerate,
            "singular Jacobian (smallest pivot " + std::to_string(smallest_pivot) + ")"),
      smallest_pivot_(smallest_pivot) {}

Homotopy::Homotopy(const PolySystem& start, const PolySystem& target)
    : start_(&start), target_(&target) {
  if (start.n_vars() != target.n_vars() || start.n_eqs() != target.n_eqs()) {
    throw Error(ErrorCode::InvalidArgument,
                "start and target systems have different shapes");
  }
}

VecX homotopy_eval(const Homotopy& H, const VecX& x, double t) {
  return (1.0 - t) * H.start().evaluate(x) + t * H.target().evaluate(x);
}

MatX homotopy_jac(const Homotopy& H, const VecX& x, double t) {
  return (1.0 - t) * H.start().jacobian(x) + t * H.target().jacobian(x);
}

VecX homotopy_dt(const Homotopy& H, const VecX& x) {
  return H.target().evaluate(x) - H.start().evaluate(x);
}

TrackerConfig TrackerConfig::upnp_defaults() {
  TrackerConfig c;
  c.step_size = 0.02;
  return c;
}

TrackerConfig TrackerConfig::grps_defaults() {
  TrackerConfig c;
  c.step_size = 0.05;
  return c;
}

void TrackerConfig::validate() const {
  if (!(step_size > 0.0 && step_size <= 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "step_size must lie in (0, 0.5]");
  }
  if (max_newton_iters < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_newton_iters must be >= 1");
  }
  if (!(newton_tol > 0.0) || !(divergence_radius > 0.0) || !(singular_tol >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tracker tolerances must be positive");
  }
}

const char* to_string(Predictor predictor) {
  return predictor == Predictor::Euler ? "euler" : "rk4";
}

Predictor predictor_from_string(const std::string& name) {
  if (name == "euler") return Predictor::Euler;
  if (name == "rk4") return Predictor::RungeKutta4;
  throw Error(ErrorCode::InvalidArgument, "unknown predictor '" + name + "'");
}

const char* to_string(TrackStatus status) {
  switch (status) {
    case TrackStatus::Converged: return "converged";
    case TrackStatus::ConvergedLeastSquares: return "converged_least_squares";
    case TrackStatus::NotConverged: return "not_converged";
    case TrackStatus::Diverged: return "diverged";
    case TrackStatus::SingularJacobian: return "singular_jacobian";
    case TrackStatus::MaxStepsExceeded: return "max_steps_exceeded";
  }
  return "unknown";
}

VecX predict_step(const Homotopy& H, const VecX& x, double t, double dt, Predictor predictor,
                  double singular_tol) {
  if (predictor == Predictor::Euler) return x + dt * velocity(H, x, t, singular_tol);
  const double h2 = 0.5 * dt;
  const VecX k1 = velocity(H, x, t, singular_tol);
  const VecX k2 = velocity(H, x + h2 * k1, t + h2, singular_tol);
  const VecX k3 = velocity(H, x + h2 * k2, t + h2, singular_tol);
  const VecX k4 = velocity(H, x + dt * k3, t + dt, singular_tol);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

CorrectResult newton_correct(const Homotopy& H, const VecX& x, double t,
                             const TrackerConfig& config) {
  return newton_correct(H, x, t, config, config.max_newton_iters);
}

CorrectResult newton_correct(const Homotopy& H, const VecX& x, double t,
                             const TrackerConfig& config, int max_iters) {
  constexpr double kStallRelStep = 1e-9;
  CorrectResult out;
  out.x = x;
  VecX r = homotopy_eval(H, out.x, t);
  out.residual_norm = r.norm();
  while (out.iterations < max_iters && !(out.residual_norm <= config.newton_tol)) {
    const VecX dx = pinv_solve(homotopy_jac(H, out.x, t), r, config.singular_tol);
    out.x -= dx;
    ++out.iterations;
    r = homotopy_eval(H, out.x, t);
    out.residual_norm = r.norm();
    out.stalled = dx.norm() <= kStallRelStep * std::max(1.0, out.x.norm());
    if (!finite(out.x) || out.stalled) break;
  }
  out.converged = out.residual_norm <= config.newton_tol;
  return out;
}

TrackResult track_path(const Homotopy& H, const VecX& x0, const TrackerConfig& config) {
  config.validate();
  if (x0.size() != H.n_vars()) {
    throw Error(ErrorCode::InvalidArgument, "start point has the wrong dimension");
  }
  TrackResult result;
  result.x_final = x0;

  auto diverged = [&](const VecX& x) {
    return !finite(x) || x.norm() > config.divergence_radius;
  };
  auto finish = [&](TrackStatus status, const VecX& x) {
    result.status = status;
    result.x_final = x;
    result.final_residual_norm = H.target().evaluate(x).norm();
    return result;
  };

  VecX x = x0;
  try {
    if (!(H.start().evaluate(x).norm() <= config.newton_tol)) {
      x = newton_correct(H, x, 0.0, config).x;
    }
    if (!(H.start().evaluate(x).norm() <= 10.0 * config.newton_tol * std::max(1.0, x.norm()))) {
      throw Error(ErrorCode::InvalidArgument, "start point is not a root of the start system");
    }

    const int n_steps = static_cast<int>(std::ceil(1.0 / config.step_size - 1e-9));
    double t = 0.0;
    for (int k = 0; k < n_steps; ++k) {
      const double t_next = (k + 1 == n_steps) ? 1.0 : t + config.step_size;
      x = predict_step(H, x, t, t_next - t, config.predictor, config.singular_tol);
      if (diverged(x)) return finish(TrackStatus::Diverged, x);
      x = newton_correct(H, x, t_next, config).x;
      if (diverged(x)) return finish(TrackStatus::Diverged, x);
      t = t_next;
      result.steps_taken = k + 1;
    }

    const CorrectResult polish = newton_correct(H, x, 1.0, config, 3 * config.max_newton_iters);
    x = polish.x;
    if (diverged(x)) return finish(TrackStatus::Diverged, x);
    const double residual = H.target().evaluate(x).norm();
    if (residual <= config.newton_tol * std::max(1.0, x.norm())) {
      return finish(TrackStatus::Converged, x);
    }
    return finish(polish.stalled ? TrackStatus::ConvergedLeastSquares : TrackStatus::NotConverged, x);
  } catch (const SingularJacobianError&) {
    return finish(TrackStatus::SingularJacobian, x);
  }
}

LmResult lm_refine(const PolySystem& F, const VecX& x0, int max_iters) {
  LmResult out;
  out.x = x0;
  VecX r = F.evaluate(out.x);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  const int n = F.n_vars();
  for (; out.iterations < max_iters; ++out.iterations) {
    const MatX J = F.jacobian(out.x);
    const MatX JtJ = J.transpose() * J;
    const VecX g = J.transpose() * r;
    const VecX step = -(JtJ + lambda * MatX::Identity(n, n)).ldlt().solve(g);
    if (!step.allFinite() || step.norm() < 1e-12) break;
    const VecX x_new = out.x + step;
    const VecX r_new = F.evaluate(x_new);
    const double cost_new = r_new.squaredNorm();
    if (cost_new < cost) {
      out.x = x_new;
      r = r_new;
      cost = cost_new;
      lambda /= 10.0;
    } else {
      lambda *= 10.0;
      if (lambda > 1e16) break;
    }
  }
  out.residual_norm = std::sqrt(cost);
  return out;
}

}  // namespace simhc
