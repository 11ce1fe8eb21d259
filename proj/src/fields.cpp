#include "gaugeflow/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace gaugeflow {

RemainderSpec RemainderSpec::zero() { return RemainderSpec{}; }

RemainderSpec RemainderSpec::constant_direction(
    Eigen::VectorXd eps, std::function<double(double)> r_of_t) {
  RemainderSpec r;
  r.kind = RemainderKind::ConstantDirection;
  r.epsilon_vec = std::move(eps);
  r.r_of_t = r_of_t ? std::move(r_of_t) : [](double) { return 1.0; };
  return r;
}

RemainderSpec RemainderSpec::linear(
    std::function<Eigen::MatrixXd(double)> matrix_of_t) {
  RemainderSpec r;
  r.kind = RemainderKind::LinearMatrix;
  r.matrix_of_t = std::move(matrix_of_t);
  return r;
}

RemainderSpec RemainderSpec::linear_constant(const Eigen::MatrixXd& matrix) {
  return linear([m = matrix](double) { return m; });
}

RemainderSpec RemainderSpec::curl_quadratic(double eps) {
  RemainderSpec r;
  r.kind = RemainderKind::CurlQuadratic;
  r.epsilon = eps;
  return r;
}

Eigen::VectorXd RemainderSpec::value(const Eigen::VectorXd& x, double t) const {
  switch (kind) {
    case RemainderKind::Zero:
      return Eigen::VectorXd::Zero(x.size());
    case RemainderKind::ConstantDirection: {
      if (epsilon_vec.size() != x.size())
        throw std::invalid_argument("remainder: epsilon dimension mismatch");
      return r_of_t(t) * epsilon_vec;
    }
    case RemainderKind::LinearMatrix: {
      const Eigen::MatrixXd m = matrix_of_t(t);
      if (m.cols() != x.size())
        throw std::invalid_argument("remainder: matrix dimension mismatch");
      return m * x;
    }
    case RemainderKind::CurlQuadratic: {
      if (x.size() < 3)
        throw std::invalid_argument("remainder: curl family needs D >= 3");
      Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
      v[x.size() - 1] = epsilon * x[0];
      return v;
    }
  }
  throw std::logic_error("remainder: unknown kind");
}

Eigen::MatrixXd RemainderSpec::jacobian(const Eigen::VectorXd& x,
                                        double t) const {
  const auto d = x.size();
  switch (kind) {
    case RemainderKind::Zero:
    case RemainderKind::ConstantDirection:
      return Eigen::MatrixXd::Zero(d, d);
    case RemainderKind::LinearMatrix:
      return matrix_of_t(t);
    case RemainderKind::CurlQuadratic: {
      if (d < 3)
        throw std::invalid_argument("remainder: curl family needs D >= 3");
      Eigen::MatrixXd j = Eigen::MatrixXd::Zero(d, d);
      j(d - 1, 0) = epsilon;
      return j;
    }
  }
  throw std::logic_error("remainder: unknown kind");
}

double RemainderSpec::divergence(const Eigen::VectorXd& x, double t) const {
  switch (kind) {
    case RemainderKind::Zero:
    case RemainderKind::ConstantDirection:
    case RemainderKind::CurlQuadratic:
      return 0.0;
    case RemainderKind::LinearMatrix:
      return matrix_of_t(t).trace();
  }
  throw std::logic_error("remainder: unknown kind");
}

bool RemainderSpec::always_conservative() const {
  return kind == RemainderKind::Zero || kind == RemainderKind::ConstantDirection;
}

Eigen::VectorXd FieldSpec::score_part(const Eigen::VectorXd& x, double t) const {
  const double sign = negate_base ? -1.0 : 1.0;
  return sign * density->score_at(x, schedule.mean_scale(t),
                                  schedule.added_variance(t));
}

Eigen::MatrixXd FieldSpec::score_part_jacobian(const Eigen::VectorXd& x,
                                               double t) const {
  const double sign = negate_base ? -1.0 : 1.0;
  return sign * density->score_jacobian_at(x, schedule.mean_scale(t),
                                           schedule.added_variance(t));
}

Eigen::VectorXd FieldSpec::value(const Eigen::VectorXd& x, double t) const {
  return score_part(x, t) + remainder.value(x, t);
}

Eigen::MatrixXd FieldSpec::jacobian(const Eigen::VectorXd& x, double t) const {
  return score_part_jacobian(x, t) + remainder.jacobian(x, t);
}

Eigen::VectorXd FieldSpec::backward(const Eigen::VectorXd& x, double t) const {
  return schedule.drift(x, t) - 0.5 * schedule.g2(t) * value(x, t);
}

Eigen::MatrixXd FieldSpec::backward_jacobian(const Eigen::VectorXd& x,
                                             double t) const {
  Eigen::MatrixXd j = -0.5 * schedule.g2(t) * jacobian(x, t);
  const double fj = schedule.drift_jacobian_scalar(t);
  if (fj != 0.0) j.diagonal().array() += fj;
  return j;
}

double FieldSpec::backward_divergence(const Eigen::VectorXd& x, double t) const {
  return backward_jacobian(x, t).trace();
}

RemainderSpec section4_remainder(double c1, double c2,
                                 const ScheduleConfig& cfg) {
  return RemainderSpec::linear([c1, c2, cfg](double t) {
    const double a2 = cfg.mean_scale(t) * cfg.mean_scale(t);
    const double v = cfg.added_variance(t);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2, 2);
    r(0, 1) = -(a2 * c1 + v);
    r(1, 0) = a2 * c2 + v;
    return r;
  });
}

ConservativityReport conservativity_check(const FieldSpec& fs,
                                          std::span<const Eigen::VectorXd> xs,
                                          double t, double tol) {
  if (xs.empty()) throw std::invalid_argument("conservativity_check: no points");
  ConservativityReport rep;
  for (const auto& x : xs) {
    const Eigen::MatrixXd j = fs.jacobian(x, t);
    const double asym = (j - j.transpose()).norm() / std::max(1.0, j.norm());
    rep.max_asymmetry = std::max(rep.max_asymmetry, asym);
  }
  rep.is_conservative = rep.max_asymmetry <= tol;
  return rep;
}

}  // namespace gaugeflow
