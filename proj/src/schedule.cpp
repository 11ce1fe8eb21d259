#include "gaugeflow/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace gaugeflow {

void ScheduleConfig::validate() const {
  if (!(g_base > 0.0)) throw std::invalid_argument("schedule.g_base must be > 0");
  if (!(t_min > 0.0 && t_min < t_max))
    throw std::invalid_argument("schedule.t_min must satisfy 0 < t_min < t_max");
  if (!(t_max <= 1.0)) throw std::invalid_argument("schedule.t_max must be <= 1");
  if (kind == ScheduleKind::LinearDrift) {
    if (!(beta_scale > 0.0))
      throw std::invalid_argument("schedule.beta_scale must be > 0 for LinearDrift");
  }
}

double ScheduleConfig::beta(double t) const {
  return beta_kind == BetaKind::Constant ? beta_scale : beta_scale * t;
}

double ScheduleConfig::g(double t) const {
  if (kind == ScheduleKind::VarianceExploding) return std::pow(g_base, t);
  return std::sqrt(beta(t));
}

double ScheduleConfig::g2(double t) const {
  if (kind == ScheduleKind::VarianceExploding) return std::pow(g_base, 2.0 * t);
  return beta(t);
}

double ScheduleConfig::noise_scale(double t) const {
  if (t < 0.0 || t > 1.0)
    throw std::domain_error("noise_scale: t outside [0, 1]");
  if (kind == ScheduleKind::VarianceExploding) {
    const double lg = std::log(g_base);
    if (std::abs(lg) < 1e-14) return t;  // g == 1
    return (std::pow(g_base, 2.0 * t) - 1.0) / (2.0 * lg);
  }
  // integral of beta
  return beta_kind == BetaKind::Constant ? beta_scale * t
                                         : 0.5 * beta_scale * t * t;
}

double ScheduleConfig::mean_scale(double t) const {
  if (kind == ScheduleKind::VarianceExploding) return 1.0;
  return std::exp(-0.5 * noise_scale(t));
}

double ScheduleConfig::added_variance(double t) const {
  if (kind == ScheduleKind::VarianceExploding) return noise_scale(t);
  return 1.0 - std::exp(-noise_scale(t));
}

Eigen::VectorXd ScheduleConfig::drift(const Eigen::VectorXd& x, double t) const {
  if (kind == ScheduleKind::VarianceExploding)
    return Eigen::VectorXd::Zero(x.size());
  return (-0.5 * beta(t)) * x;
}

double ScheduleConfig::drift_jacobian_scalar(double t) const {
  if (kind == ScheduleKind::VarianceExploding) return 0.0;
  return -0.5 * beta(t);
}

TimeGrid TimeGrid::make(double t_min, int n, GridSpacing spacing) {
  if (n < 2) throw std::invalid_argument("TimeGrid: need at least 2 checkpoints");
  if (!(t_min > 0.0 && t_min < 1.0))
    throw std::invalid_argument("TimeGrid: t_min must be in (0, 1)");
  TimeGrid grid;
  grid.spacing = spacing;
  grid.checkpoints.resize(n);
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    grid.checkpoints[i] = spacing == GridSpacing::Linear
                              ? 1.0 - s * (1.0 - t_min)
                              : std::pow(t_min, s);
  }
  grid.checkpoints.front() = 1.0;
  grid.checkpoints.back() = t_min;
  return grid;
}

void TimeGrid::validate() const {
  if (checkpoints.size() < 2) throw std::invalid_argument("TimeGrid: too few checkpoints");
  if (checkpoints.front() != 1.0)
    throw std::invalid_argument("TimeGrid: first checkpoint must be 1");
  for (std::size_t i = 1; i < checkpoints.size(); ++i)
    if (!(checkpoints[i] < checkpoints[i - 1]))
      throw std::invalid_argument("TimeGrid: checkpoints must strictly decrease");
  if (!(checkpoints.back() > 0.0))
    throw std::invalid_argument("TimeGrid: t_min must be positive");
}

}  // namespace gaugeflow
