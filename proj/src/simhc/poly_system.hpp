#pragma once

#include <Eigen/Core>

namespace simhc {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// A square or overdetermined polynomial system F: R^n_vars -> R^n_eqs with
// an analytic Jacobian. Implementations are immutable after construction.
class PolySystem {
 public:
  virtual ~PolySystem() = default;

  virtual int n_vars() const = 0;
  virtual int n_eqs() const = 0;
  virtual VecX evaluate(const VecX& x) const = 0;
  virtual MatX jacobian(const VecX& x) const = 0;
};

}  // namespace simhc
