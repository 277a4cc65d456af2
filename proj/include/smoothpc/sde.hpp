#pragma once

#include "smoothpc/geometry.hpp"

namespace smoothpc {

/// Smallest time at which scores are evaluated; b_t vanishes at t = 0.
inline constexpr double kDefaultMinTime = 1e-5;

/// Variance-preserving SDE dX = -1/2 beta(t) X dt + sqrt(beta(t)) dW with a
/// linear beta(t) on t in [0, 1]. Perturbation kernel N(a_t x0, b_t^2 I).
class VpSchedule {
 public:
  VpSchedule() = default;
  /// Throws InvalidParameter unless 0 < beta_min <= beta_max.
  VpSchedule(double beta_min, double beta_max);

  double beta_min() const noexcept { return beta_min_; }
  double beta_max() const noexcept { return beta_max_; }

  double beta(double t) const;
  /// Integral of beta over [0, t].
  double integrated_beta(double t) const;

  /// a_t = exp(-1/2 int_0^t beta).
  double drift_coef(double t) const;
  /// b_t = sqrt(1 - a_t^2).
  double diffusion_std(double t) const;
  /// g_t = sqrt(beta(t)).
  double sde_diffusion(double t) const;
  /// f_t(x) = -1/2 beta(t) x, elementwise.
  Matrix sde_drift(const Matrix& x, double t) const;

  /// a_t x0 + b_t noise.
  Matrix perturb(const Matrix& x0, double t, const Matrix& noise) const;

  /// Score of the perturbation kernel, -(xt - a_t x0) / b_t^2.
  /// Throws SingularTime when b_t == 0.
  Matrix conditional_score_target(const Matrix& x0, const Matrix& xt, double t) const;

 private:
  double beta_min_ = 0.1;
  double beta_max_ = 20.0;
};

}  // namespace smoothpc
