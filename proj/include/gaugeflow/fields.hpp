#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <span>

#include "gaugeflow/mixture.hpp"
#include "gaugeflow/schedule.hpp"

namespace gaugeflow {

enum class RemainderKind { Zero, ConstantDirection, LinearMatrix, CurlQuadratic };

// Remainder family r(x, t) added on top of the true score.
//
//   Zero               r = 0
//   ConstantDirection  r = r_of_t(t) * epsilon_vec
//   LinearMatrix       r = matrix_of_t(t) * x
//   CurlQuadratic      r = (0, ..., 0, epsilon * x_0), needs D >= 3
struct RemainderSpec {
  RemainderKind kind = RemainderKind::Zero;
  std::function<double(double)> r_of_t;
  Eigen::VectorXd epsilon_vec;
  double epsilon = 0.0;
  std::function<Eigen::MatrixXd(double)> matrix_of_t;

  static RemainderSpec zero();
  static RemainderSpec constant_direction(Eigen::VectorXd eps,
                                          std::function<double(double)> r_of_t);
  static RemainderSpec linear(std::function<Eigen::MatrixXd(double)> matrix_of_t);
  static RemainderSpec linear_constant(const Eigen::MatrixXd& matrix);
  static RemainderSpec curl_quadratic(double eps);

  Eigen::VectorXd value(const Eigen::VectorXd& x, double t) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, double t) const;
  // Analytic divergence; no stochastic estimation here.
  double divergence(const Eigen::VectorXd& x, double t) const;
  // Conservative regardless of t (Zero and ConstantDirection families).
  bool always_conservative() const;
};

// The model field s_theta(x, t) = +/- grad log p_t(x) + r(x, t) together with
// the backward-ODE field f_tilde = f - 1/2 g^2 s_theta.
struct FieldSpec {
  std::shared_ptr<const MixtureDensity> density;
  ScheduleConfig schedule;
  RemainderSpec remainder;
  bool negate_base = false;

  Eigen::VectorXd score_part(const Eigen::VectorXd& x, double t) const;
  Eigen::MatrixXd score_part_jacobian(const Eigen::VectorXd& x, double t) const;

  Eigen::VectorXd value(const Eigen::VectorXd& x, double t) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, double t) const;

  Eigen::VectorXd backward(const Eigen::VectorXd& x, double t) const;
  Eigen::MatrixXd backward_jacobian(const Eigen::VectorXd& x, double t) const;
  double backward_divergence(const Eigen::VectorXd& x, double t) const;
};

// Section-4-style linear remainder for a 2D diagonal Gaussian target: the
// off-diagonal entries carry the diffused marginal variances,
// R_t = [[0, -s1(t)], [s2(t), 0]].
RemainderSpec section4_remainder(double c1, double c2, const ScheduleConfig& cfg);

struct ConservativityReport {
  double max_asymmetry = 0.0;
  bool is_conservative = false;
};

// max over xs of ||J - J^T||_F / max(1, ||J||_F) for J = jacobian of the field.
ConservativityReport conservativity_check(const FieldSpec& fs,
                                          std::span<const Eigen::VectorXd> xs,
                                          double t, double tol);

}  // namespace gaugeflow
