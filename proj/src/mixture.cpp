#include "gaugeflow/mixture.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gaugeflow {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

bool is_diagonal(const Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

MixtureDensity::MixtureDensity(std::vector<double> weights,
                               std::vector<Eigen::VectorXd> means,
                               std::vector<Eigen::MatrixXd> covariances) {
  const std::size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("mixture: no components");
  if (means.size() != n || covariances.size() != n)
    throw std::invalid_argument("mixture: component count mismatch");
  dim_ = static_cast<int>(means[0].size());

  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture: weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("mixture: weights must sum to 1");

  min_eig_ = std::numeric_limits<double>::infinity();
  comps_.resize(n);
  cum_weights_.resize(n);
  double cum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (means[k].size() != dim_ || covariances[k].rows() != dim_ ||
        covariances[k].cols() != dim_)
      throw std::invalid_argument("mixture: dimension mismatch");
    const Eigen::MatrixXd& c = covariances[k];
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("mixture: covariance not symmetric");

    Component comp;
    comp.log_w = std::log(weights[k]);
    comp.mean = means[k];
    if (is_diagonal(c)) {
      comp.eig = c.diagonal();
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
      comp.eig = es.eigenvalues();
      comp.basis = es.eigenvectors();
    }
    for (int i = 0; i < dim_; ++i) {
      if (comp.eig[i] < -1e-10)
        throw std::invalid_argument("mixture: covariance not PSD");
      if (comp.eig[i] < 0.0) comp.eig[i] = 0.0;
      min_eig_ = std::min(min_eig_, comp.eig[i]);
    }
    comps_[k] = std::move(comp);
    cum += weights[k];
    cum_weights_[k] = cum;
  }
  cum_weights_.back() = 1.0;

  shared_isotropic_ = true;
  const double e0 = comps_[0].eig[0];
  for (const auto& c : comps_) {
    if (c.basis.size() > 0 || (c.eig.array() != e0).any()) {
      shared_isotropic_ = false;
      break;
    }
  }
  if (shared_isotropic_) {
    iso_eig_ = e0;
    means_mat_.resize(dim_, static_cast<Eigen::Index>(n));
    mean_norms2_.resize(static_cast<Eigen::Index>(n));
    log_weights_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
      means_mat_.col(static_cast<Eigen::Index>(k)) = comps_[k].mean;
      mean_norms2_[static_cast<Eigen::Index>(k)] = comps_[k].mean.squaredNorm();
      log_weights_[static_cast<Eigen::Index>(k)] = comps_[k].log_w;
    }
  }
}

MixtureDensity MixtureDensity::single(const Eigen::VectorXd& mean,
                                      const Eigen::MatrixXd& cov) {
  return MixtureDensity({1.0}, {mean}, {cov});
}

double MixtureDensity::effective_isotropic_eig(double alpha, double v) const {
  const double e = alpha * alpha * iso_eig_ + v;
  if (e <= 0.0)
    throw std::domain_error("density not absolutely continuous; evaluate at t>0");
  return e;
}

double MixtureDensity::component_log_densities(const Eigen::VectorXd& x,
                                               double alpha, double v,
                                               Eigen::VectorXd& out) const {
  if (x.size() != dim_) throw std::invalid_argument("mixture: dimension mismatch");
  const double a2 = alpha * alpha;
  if (shared_isotropic_) {
    const double e = effective_isotropic_eig(alpha, v);
    // quad_k = |x|^2 - 2 alpha <x, m_k> + alpha^2 |m_k|^2
    out = log_weights_ -
          (0.5 / e) *
              (x.squaredNorm() - 2.0 * alpha * (means_mat_.transpose() * x).array() +
               a2 * mean_norms2_.array())
                  .matrix();
    out.array() -= 0.5 * dim_ * (std::log(e) + kLog2Pi);
    return out.maxCoeff();
  }
  if (a2 * min_eig_ + v <= 0.0)
    throw std::domain_error("density not absolutely continuous; evaluate at t>0");
  out.resize(static_cast<Eigen::Index>(comps_.size()));
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd d(dim_), z(dim_);
  for (std::size_t k = 0; k < comps_.size(); ++k) {
    const Component& c = comps_[k];
    d = x - alpha * c.mean;
    if (c.basis.size() > 0) z.noalias() = c.basis.transpose() * d;
    const Eigen::VectorXd& w = c.basis.size() > 0 ? z : d;
    double quad = 0.0, logdet = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const double e = a2 * c.eig[i] + v;
      quad += w[i] * w[i] / e;
      logdet += std::log(e);
    }
    out[static_cast<Eigen::Index>(k)] =
        c.log_w - 0.5 * (quad + logdet + dim_ * kLog2Pi);
    best = std::max(best, out[static_cast<Eigen::Index>(k)]);
  }
  return best;
}

void MixtureDensity::responsibilities(const Eigen::VectorXd& x, double alpha,
                                      double v, Eigen::VectorXd& out) const {
  const double best = component_log_densities(x, alpha, v, out);
  out = (out.array() - best).exp();
  out /= out.sum();
}

double MixtureDensity::log_density_at(const Eigen::VectorXd& x, double alpha,
                                      double v) const {
  Eigen::VectorXd logs;
  const double best = component_log_densities(x, alpha, v, logs);
  return best + std::log((logs.array() - best).exp().sum());
}

Eigen::VectorXd MixtureDensity::score_at(const Eigen::VectorXd& x, double alpha,
                                         double v) const {
  Eigen::VectorXd gamma;
  responsibilities(x, alpha, v, gamma);
  if (shared_isotropic_) {
    const double e = effective_isotropic_eig(alpha, v);
    return -(x - alpha * (means_mat_ * gamma)) / e;
  }
  const double a2 = alpha * alpha;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(dim_);
  Eigen::VectorXd d(dim_), z(dim_), g(dim_);
  for (std::size_t k = 0; k < comps_.size(); ++k) {
    const Component& c = comps_[k];
    const double w = gamma[static_cast<Eigen::Index>(k)];
    d = x - alpha * c.mean;
    if (c.basis.size() > 0) {
      z.noalias() = c.basis.transpose() * d;
      for (int i = 0; i < dim_; ++i) z[i] /= a2 * c.eig[i] + v;
      g.noalias() = c.basis * z;
      s.noalias() -= w * g;
    } else {
      for (int i = 0; i < dim_; ++i) s[i] -= w * d[i] / (a2 * c.eig[i] + v);
    }
  }
  return s;
}

Eigen::MatrixXd MixtureDensity::score_jacobian_at(const Eigen::VectorXd& x,
                                                  double alpha, double v) const {
  Eigen::VectorXd gamma;
  responsibilities(x, alpha, v, gamma);
  Eigen::MatrixXd h;
  if (shared_isotropic_) {
    const double e = effective_isotropic_eig(alpha, v);
    const Eigen::VectorXd m1 = means_mat_ * gamma;  // sum gamma_k m_k
    const Eigen::MatrixXd m2 =
        means_mat_ * gamma.asDiagonal() * means_mat_.transpose();
    const Eigen::VectorXd s = -(x - alpha * m1) / e;
    // sum gamma_k d_k d_k^T with d_k = x - alpha m_k
    Eigen::MatrixXd dd = x * x.transpose();
    dd.noalias() -= alpha * (x * m1.transpose() + m1 * x.transpose());
    dd.noalias() += (alpha * alpha) * m2;
    h = dd / (e * e);
    h.diagonal().array() -= 1.0 / e;
    h.noalias() -= s * s.transpose();
  } else {
    const double a2 = alpha * alpha;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(dim_);
    h = Eigen::MatrixXd::Zero(dim_, dim_);
    Eigen::VectorXd d(dim_), z(dim_), g(dim_);
    for (std::size_t k = 0; k < comps_.size(); ++k) {
      const Component& c = comps_[k];
      const double w = gamma[static_cast<Eigen::Index>(k)];
      d = x - alpha * c.mean;
      if (c.basis.size() > 0) {
        z.noalias() = c.basis.transpose() * d;
        for (int i = 0; i < dim_; ++i) z[i] /= a2 * c.eig[i] + v;
        g.noalias() = -(c.basis * z);
        for (int i = 0; i < dim_; ++i)
          h.noalias() -= (w / (a2 * c.eig[i] + v)) * c.basis.col(i) *
                         c.basis.col(i).transpose();
      } else {
        for (int i = 0; i < dim_; ++i) {
          const double e = a2 * c.eig[i] + v;
          g[i] = -d[i] / e;
          h(i, i) -= w / e;
        }
      }
      h.noalias() += w * g * g.transpose();
      s.noalias() += w * g;
    }
    h.noalias() -= s * s.transpose();
  }
  // enforce exact symmetry against accumulation round-off
  h = 0.5 * (h + h.transpose()).eval();
  return h;
}

Eigen::VectorXd MixtureDensity::sample(RngStream& rng) const {
  const double u = rng.next_double();
  std::size_t k = 0;
  while (k + 1 < cum_weights_.size() && u >= cum_weights_[k]) ++k;
  const Component& c = comps_[k];
  Eigen::VectorXd z(dim_);
  for (int i = 0; i < dim_; ++i)
    z[i] = std::sqrt(c.eig[i]) * rng.next_gaussian();
  if (c.basis.size() > 0) return c.mean + c.basis * z;
  return c.mean + z;
}

Eigen::VectorXd MixtureDensity::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim_);
  for (std::size_t k = 0; k < comps_.size(); ++k)
    m += std::exp(comps_[k].log_w) * comps_[k].mean;
  return m;
}

Eigen::MatrixXd MixtureDensity::covariance() const {
  const Eigen::VectorXd mbar = mean();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim_, dim_);
  for (int k = 0; k < n_components(); ++k) {
    const double w = weight(k);
    c += w * component_covariance(k);
    const Eigen::VectorXd dm = comps_[static_cast<std::size_t>(k)].mean - mbar;
    c.noalias() += w * dm * dm.transpose();
  }
  return c;
}

double MixtureDensity::weight(int k) const {
  return std::exp(comps_[static_cast<std::size_t>(k)].log_w);
}

const Eigen::VectorXd& MixtureDensity::component_mean(int k) const {
  return comps_[static_cast<std::size_t>(k)].mean;
}

Eigen::MatrixXd MixtureDensity::component_covariance(int k) const {
  const Component& c = comps_[static_cast<std::size_t>(k)];
  if (c.basis.size() == 0) return c.eig.asDiagonal();
  return c.basis * c.eig.asDiagonal() * c.basis.transpose();
}

MixtureDensity diffuse(const MixtureDensity& p0, const ScheduleConfig& cfg,
                       double t) {
  if (t < 0.0 || t > 1.0) throw std::domain_error("diffuse: t outside [0, 1]");
  const double alpha = cfg.mean_scale(t);
  const double v = cfg.added_variance(t);
  MixtureDensity p = p0;
  p.min_eig_ = std::numeric_limits<double>::infinity();
  for (auto& c : p.comps_) {
    c.mean *= alpha;
    for (int i = 0; i < p.dim_; ++i) {
      c.eig[i] = alpha * alpha * c.eig[i] + v;
      p.min_eig_ = std::min(p.min_eig_, c.eig[i]);
    }
  }
  if (p.shared_isotropic_) {
    p.iso_eig_ = alpha * alpha * p.iso_eig_ + v;
    p.means_mat_ *= alpha;
    p.mean_norms2_ *= alpha * alpha;
  }
  return p;
}

MixtureDensity kernel_mixture(const Eigen::MatrixXd& points, double bandwidth) {
  if (points.rows() == 0) throw std::invalid_argument("kernel_mixture: no points");
  if (bandwidth < 0.0)
    throw std::invalid_argument("kernel_mixture: bandwidth must be >= 0");
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  std::vector<double> w(static_cast<std::size_t>(n), 1.0 / n);
  std::vector<Eigen::VectorXd> means(static_cast<std::size_t>(n));
  std::vector<Eigen::MatrixXd> covs(
      static_cast<std::size_t>(n),
      Eigen::MatrixXd::Identity(d, d) * (bandwidth * bandwidth));
  for (int i = 0; i < n; ++i)
    means[static_cast<std::size_t>(i)] = points.row(i).transpose();
  return MixtureDensity(std::move(w), std::move(means), std::move(covs));
}

}  // namespace gaugeflow
