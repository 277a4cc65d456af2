#include "smoothpc/sde.hpp"

#include <cmath>
#include <string>

#include "smoothpc/error.hpp"

namespace smoothpc {

namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw InvalidParameter("time " + std::to_string(t) + " outside [0, 1]");
  }
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInput(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()) + ")");
  }
}

}  // namespace

VpSchedule::VpSchedule(double beta_min, double beta_max)
    : beta_min_(beta_min), beta_max_(beta_max) {
  if (!(beta_min > 0.0) || !(beta_max >= beta_min) || !std::isfinite(beta_max)) {
    throw InvalidParameter("schedule needs 0 < beta_min <= beta_max");
  }
}

double VpSchedule::beta(double t) const {
  check_time(t);
  return beta_min_ + t * (beta_max_ - beta_min_);
}

double VpSchedule::integrated_beta(double t) const {
  check_time(t);
  return beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t;
}

double VpSchedule::drift_coef(double t) const { return std::exp(-0.5 * integrated_beta(t)); }

double VpSchedule::diffusion_std(double t) const {
  // 1 - a^2 = -expm1(-int beta) keeps precision for small t
  return std::sqrt(-std::expm1(-integrated_beta(t)));
}

double VpSchedule::sde_diffusion(double t) const { return std::sqrt(beta(t)); }

Matrix VpSchedule::sde_drift(const Matrix& x, double t) const { return (-0.5 * beta(t)) * x; }

Matrix VpSchedule::perturb(const Matrix& x0, double t, const Matrix& noise) const {
  check_same_shape(x0, noise, "perturb");
  const double a = drift_coef(t);
  const double b = diffusion_std(t);
  return a * x0 + b * noise;
}

Matrix VpSchedule::conditional_score_target(const Matrix& x0, const Matrix& xt, double t) const {
  check_same_shape(x0, xt, "conditional_score_target");
  const double a = drift_coef(t);
  const double b = diffusion_std(t);
  if (b == 0.0) throw SingularTime("conditional score undefined at t=" + std::to_string(t));
  return -(xt - a * x0) / (b * b);
}

}  // namespace smoothpc
