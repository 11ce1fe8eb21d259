#include "gaugeflow/gauge.hpp"

#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

#include "gaugeflow/rng.hpp"

namespace gaugeflow {

double gauge_residual(const RemainderSpec& r, const MixtureDensity& p_t,
                      const Eigen::VectorXd& x, double t) {
  return r.divergence(x, t) + r.value(x, t).dot(p_t.score(x));
}

namespace {

std::vector<GaugeReport> gauge_check_impl(const RemainderSpec& r,
                                          const MixtureDensity& p0,
                                          const ScheduleConfig& cfg,
                                          std::span<const double> ts, int n_mc,
                                          std::uint64_t seed, Execution exec) {
  if (n_mc <= 0) throw std::invalid_argument("gauge_check: n_mc must be > 0");
  std::vector<GaugeReport> reports;
  reports.reserve(ts.size());
  std::vector<double> residuals(static_cast<std::size_t>(n_mc));
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    const double t = ts[ti];
    const MixtureDensity p_t = diffuse(p0, cfg, t);
    for_each_index(n_mc, exec, [&](int i) {
      RngStream rng(seed, (static_cast<std::uint64_t>(ti) << 32) |
                              static_cast<std::uint64_t>(i));
      const Eigen::VectorXd x = p_t.sample(rng);
      residuals[static_cast<std::size_t>(i)] = gauge_residual(r, p_t, x, t);
    });
    GaugeReport rep;
    rep.t = t;
    rep.n_points = n_mc;
    double sumsq = 0.0;
    for (double res : residuals) {
      rep.residual_max = std::max(rep.residual_max, std::abs(res));
      sumsq += res * res;
    }
    rep.residual_rms = std::sqrt(sumsq / n_mc);
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace

std::vector<GaugeReport> gauge_check(const RemainderSpec& r,
                                     const MixtureDensity& p0,
                                     const ScheduleConfig& cfg,
                                     std::span<const double> ts, int n_mc,
                                     std::uint64_t seed, Execution exec) {
  return gauge_check_impl(r, p0, cfg, ts, n_mc, seed, exec);
}

std::vector<GaugeReport> gauge_check_serial(const RemainderSpec& r,
                                            const MixtureDensity& p0,
                                            const ScheduleConfig& cfg,
                                            std::span<const double> ts,
                                            int n_mc, std::uint64_t seed) {
  if (n_mc <= 0) throw std::invalid_argument("gauge_check: n_mc must be > 0");
  std::vector<GaugeReport> reports;
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    const double t = ts[ti];
    const MixtureDensity p_t = diffuse(p0, cfg, t);
    GaugeReport rep;
    rep.t = t;
    rep.n_points = n_mc;
    double sumsq = 0.0;
    for (int i = 0; i < n_mc; ++i) {
      RngStream rng(seed, (static_cast<std::uint64_t>(ti) << 32) |
                              static_cast<std::uint64_t>(i));
      const Eigen::VectorXd x = p_t.sample(rng);
      const double res = gauge_residual(r, p_t, x, t);
      rep.residual_max = std::max(rep.residual_max, std::abs(res));
      sumsq += res * res;
    }
    rep.residual_rms = std::sqrt(sumsq / n_mc);
    reports.push_back(rep);
  }
  return reports;
}

McEstimate l2p_inner(const PointField& u, const PointField& v,
                     const MixtureDensity& p_t, int n_mc, std::uint64_t seed,
                     Execution exec) {
  if (n_mc < 2)
    throw std::invalid_argument("l2p_inner: n_mc must be >= 2 for a variance");
  std::vector<double> dots(static_cast<std::size_t>(n_mc));
  for_each_index(n_mc, exec, [&](int i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    const Eigen::VectorXd x = p_t.sample(rng);
    dots[static_cast<std::size_t>(i)] = u(x).dot(v(x));
  });
  double mean = 0.0;
  for (double d : dots) mean += d;
  mean /= n_mc;
  double var = 0.0;
  for (double d : dots) var += (d - mean) * (d - mean);
  var /= (n_mc - 1);
  return {mean, std::sqrt(var / n_mc)};
}

LinearDecomposition decompose_linear(const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& precision) {
  const int D = static_cast<int>(A.rows());
  if (A.cols() != D || precision.rows() != D || precision.cols() != D)
    throw std::invalid_argument("decompose_linear: square matrices required");
  if ((precision - precision.transpose()).norm() > 1e-10 * precision.norm())
    throw std::invalid_argument("decompose_linear: precision must be symmetric");

  // Unknown vec(R), row-major index (i, j) -> i*D + j. Constraints:
  //   antisym:  R_ij - R_ji = A_ij - A_ji          (i < j)
  //   gauge:    (R^T P + P R)_ij = 0               (i <= j)
  //   trace:    sum_i R_ii = 0
  const int n_anti = D * (D - 1) / 2;
  const int n_sym = D * (D + 1) / 2;
  const int rows = n_anti + n_sym + 1;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, D * D);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  auto idx = [D](int i, int j) { return i * D + j; };

  int row = 0;
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) {
      M(row, idx(i, j)) = 1.0;
      M(row, idx(j, i)) = -1.0;
      b(row) = A(i, j) - A(j, i);
      ++row;
    }
  // (R^T P)_ij = sum_k R_ki P_kj ; (P R)_ij = sum_k P_ik R_kj
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) {
      for (int k = 0; k < D; ++k) {
        M(row, idx(k, i)) += precision(k, j);
        M(row, idx(k, j)) += precision(i, k);
      }
      ++row;
    }
  for (int i = 0; i < D; ++i) M(row, idx(i, i)) = 1.0;

  // Minimum-norm least squares: ties broken by the smallest ||R||_F.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
  const Eigen::VectorXd r = cod.solve(b);
  const double residual = (M * r - b).cwiseAbs().maxCoeff();
  if (residual > 1e-6)
    throw std::runtime_error("decomposition infeasible in linear class");

  LinearDecomposition out;
  out.R.resize(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) out.R(i, j) = r[idx(i, j)];
  out.S = A - out.R;
  out.residual = residual;
  return out;
}

double trace_invariance_check(const FieldSpec& fs,
                              std::span<const Eigen::VectorXd> xs, double t) {
  double worst = 0.0;
  for (const auto& x : xs) {
    const double tr_model = fs.jacobian(x, t).trace();
    const double tr_hessian = fs.score_part_jacobian(x, t).trace();
    worst = std::max(worst, std::abs(tr_model - tr_hessian));
  }
  return worst;
}

Eigen::MatrixXd lie_bracket_linear(const Eigen::MatrixXd& B,
                                   const Eigen::MatrixXd& C) {
  return C * B - B * C;
}

Eigen::VectorXd lifted_commutation_residual(const TimeField& u,
                                            const TimeField& v, double alpha,
                                            const Eigen::VectorXd& x, double t,
                                            double t_lo, double t_hi) {
  const double beta = 1.0 - alpha;
  const Eigen::VectorXd bracket =
      v.jacobian(x, t) * u.value(x, t) - u.jacobian(x, t) * v.value(x, t);

  auto w = [&](double s) -> Eigen::VectorXd {
    return beta * u.value(x, s) - alpha * v.value(x, s);
  };
  const double h = std::cbrt(2.2e-16) * std::max(1.0, std::abs(t));
  Eigen::VectorXd dw;
  if (t - h >= t_lo && t + h <= t_hi) {
    dw = (w(t + h) - w(t - h)) / (2.0 * h);
  } else if (t + 2.0 * h <= t_hi) {
    // second-order one-sided stencil at the lower edge
    dw = (-3.0 * w(t) + 4.0 * w(t + h) - w(t + 2.0 * h)) / (2.0 * h);
  } else if (t - 2.0 * h >= t_lo) {
    dw = (3.0 * w(t) - 4.0 * w(t - h) + w(t - 2.0 * h)) / (2.0 * h);
  } else {
    throw std::invalid_argument(
        "lifted_commutation_residual: time domain too narrow for differencing");
  }
  return bracket - dw;
}

}  // namespace gaugeflow
