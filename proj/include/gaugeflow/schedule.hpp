#pragma once

#include <Eigen/Core>
#include <vector>

namespace gaugeflow {

enum class ScheduleKind { VarianceExploding, LinearDrift };
enum class BetaKind { Constant, Linear };

// Forward-SDE schedule dx = f(x,t) dt + g(t) dw on t in [0, 1].
//
// VarianceExploding:  f = 0,            g(t) = g_base^t
// LinearDrift:        f = -1/2 beta(t) x, g(t) = sqrt(beta(t))
// with beta(t) = beta_scale (Constant) or beta_scale * t (Linear).
struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::VarianceExploding;
  double g_base = 25.0;
  BetaKind beta_kind = BetaKind::Constant;
  double beta_scale = 1.0;
  double t_min = 1e-3;
  double t_max = 1.0;

  void validate() const;

  double beta(double t) const;
  double g(double t) const;
  double g2(double t) const;

  // sigma^2(t) = integral of g^2 over [0, t]; closed form.
  double noise_scale(double t) const;
  double sigma(double t) const { return std::sqrt(noise_scale(t)); }

  // Transition-kernel parameters of the linear SDE: x_t | x_0 is Gaussian
  // with mean mean_scale(t) * x_0 and covariance
  // mean_scale(t)^2 * C_0 + added_variance(t) * I.
  double mean_scale(double t) const;
  double added_variance(double t) const;

  Eigen::VectorXd drift(const Eigen::VectorXd& x, double t) const;
  // Jacobian of the drift is a multiple of the identity; return the scalar.
  double drift_jacobian_scalar(double t) const;
};

enum class GridSpacing { Linear, LogUniform };

// Strictly decreasing checkpoint times from t_max (= 1) down to t_min.
struct TimeGrid {
  std::vector<double> checkpoints;
  GridSpacing spacing = GridSpacing::LogUniform;

  static TimeGrid make(double t_min, int n, GridSpacing spacing);
  void validate() const;
};

}  // namespace gaugeflow
