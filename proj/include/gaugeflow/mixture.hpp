#pragma once

#include <Eigen/Core>
#include <vector>

#include "gaugeflow/rng.hpp"
#include "gaugeflow/schedule.hpp"

namespace gaugeflow {

// Gaussian mixture with closed-form log-density, score and score Jacobian.
//
// Each component covariance is eigendecomposed once at construction; a
// diffused copy reuses the same eigenbasis with shifted eigenvalues, so
// evaluating the diffused mixture at any time costs no refactorization.
// Evaluation takes (mean_scale, added_variance) directly: component k is
// treated as N(alpha * m_k, alpha^2 C_k + v I).
//
// Mixtures whose components all share one isotropic covariance (kernel
// mixtures) go through a vectorized path: responsibilities reduce to one
// matrix-vector product with the stacked means.
class MixtureDensity {
 public:
  MixtureDensity(std::vector<double> weights, std::vector<Eigen::VectorXd> means,
                 std::vector<Eigen::MatrixXd> covariances);

  static MixtureDensity single(const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov);

  int dim() const { return dim_; }
  int n_components() const { return static_cast<int>(comps_.size()); }

  // True when every component covariance is strictly positive definite.
  bool absolutely_continuous() const { return min_eig_ > 1e-300; }

  double log_density(const Eigen::VectorXd& x) const {
    return log_density_at(x, 1.0, 0.0);
  }
  Eigen::VectorXd score(const Eigen::VectorXd& x) const {
    return score_at(x, 1.0, 0.0);
  }
  Eigen::MatrixXd score_jacobian(const Eigen::VectorXd& x) const {
    return score_jacobian_at(x, 1.0, 0.0);
  }

  // Diffusion-scaled evaluation: component k becomes
  // N(alpha m_k, alpha^2 C_k + v I).
  double log_density_at(const Eigen::VectorXd& x, double alpha, double v) const;
  Eigen::VectorXd score_at(const Eigen::VectorXd& x, double alpha, double v) const;
  // Exact Hessian of the log-density (always exactly symmetric).
  Eigen::MatrixXd score_jacobian_at(const Eigen::VectorXd& x, double alpha,
                                    double v) const;

  Eigen::VectorXd sample(RngStream& rng) const;

  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;

  double weight(int k) const;
  const Eigen::VectorXd& component_mean(int k) const;
  Eigen::MatrixXd component_covariance(int k) const;

 private:
  struct Component {
    double log_w;
    Eigen::VectorXd mean;
    Eigen::VectorXd eig;    // covariance eigenvalues (coordinate order if diagonal)
    Eigen::MatrixXd basis;  // eigenvectors; 0x0 when the covariance is diagonal
  };

  MixtureDensity() = default;

  friend MixtureDensity diffuse(const MixtureDensity&, const ScheduleConfig&,
                                double);

  // log N_k(x) for all components; returns the max entry.
  double component_log_densities(const Eigen::VectorXd& x, double alpha,
                                 double v, Eigen::VectorXd& out) const;
  // Fills responsibilities gamma (normalized) into `out`.
  void responsibilities(const Eigen::VectorXd& x, double alpha, double v,
                        Eigen::VectorXd& out) const;
  double effective_isotropic_eig(double alpha, double v) const;

  int dim_ = 0;
  double min_eig_ = 0.0;
  std::vector<Component> comps_;
  std::vector<double> cum_weights_;

  // shared-isotropic fast path
  bool shared_isotropic_ = false;
  double iso_eig_ = 0.0;
  Eigen::MatrixXd means_mat_;     // D x K
  Eigen::VectorXd mean_norms2_;   // K
  Eigen::VectorXd log_weights_;   // K
};

// Marginal of the forward SDE at time t started from p0.
MixtureDensity diffuse(const MixtureDensity& p0, const ScheduleConfig& cfg,
                       double t);

// Equal-weight mixture with one isotropic component per row of `points`.
MixtureDensity kernel_mixture(const Eigen::MatrixXd& points, double bandwidth);

}  // namespace gaugeflow
