#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gaugeflow/fields.hpp"
#include "gaugeflow/flow.hpp"
#include "gaugeflow/mixture.hpp"
#include "gaugeflow/parallel.hpp"

namespace gaugeflow {

// Residual statistics of div r + r . score over points drawn from p_t.
struct GaugeReport {
  double t = 0.0;
  double residual_max = 0.0;
  double residual_rms = 0.0;
  int n_points = 0;
};

// div r(x, t) + r(x, t)^T grad log p_t(x); zero identically iff the remainder
// leaves the marginal density evolution unchanged.
double gauge_residual(const RemainderSpec& r, const MixtureDensity& p_t,
                      const Eigen::VectorXd& x, double t);

std::vector<GaugeReport> gauge_check(const RemainderSpec& r,
                                     const MixtureDensity& p0,
                                     const ScheduleConfig& cfg,
                                     std::span<const double> ts, int n_mc,
                                     std::uint64_t seed,
                                     Execution exec = Execution::Parallel);
std::vector<GaugeReport> gauge_check_serial(const RemainderSpec& r,
                                            const MixtureDensity& p0,
                                            const ScheduleConfig& cfg,
                                            std::span<const double> ts, int n_mc,
                                            std::uint64_t seed);

using PointField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Monte Carlo estimate of <u, v> in L^2(p_t).
McEstimate l2p_inner(const PointField& u, const PointField& v,
                     const MixtureDensity& p_t, int n_mc, std::uint64_t seed,
                     Execution exec = Execution::Parallel);

// v(x) = A x split as A = S + R with S symmetric and R x satisfying the gauge
// condition under N(0, precision^-1): tr R = 0 and R^T P + P R = 0.
struct LinearDecomposition {
  Eigen::MatrixXd S;
  Eigen::MatrixXd R;
  double residual = 0.0;
};

LinearDecomposition decompose_linear(const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& precision);

// max over xs of |tr grad s_theta - tr grad^2 log p_t|.
double trace_invariance_check(const FieldSpec& fs,
                              std::span<const Eigen::VectorXd> xs, double t);

// Bracket of the linear fields u = Bx, v = Cx, represented by its matrix.
Eigen::MatrixXd lie_bracket_linear(const Eigen::MatrixXd& B,
                                   const Eigen::MatrixXd& C);

// Time-dependent field with an analytic spatial Jacobian.
struct TimeField {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> value;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, double)> jacobian;
};

// [u, v](x, t) - d/dt (beta u - alpha v)(x, t) with beta = 1 - alpha; the time
// derivative uses central differences, falling back to one-sided stencils of
// the same order at the domain edges.
Eigen::VectorXd lifted_commutation_residual(const TimeField& u,
                                            const TimeField& v, double alpha,
                                            const Eigen::VectorXd& x, double t,
                                            double t_lo, double t_hi);

}  // namespace gaugeflow
