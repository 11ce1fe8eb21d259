#include "gaugeflow/idest.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "gaugeflow/mixture.hpp"
#include "gaugeflow/rng.hpp"

namespace gaugeflow {

SingularTrajectory singular_trajectories(const TrajectoryRecord& rec) {
  if (!rec.has_Y)
    throw std::invalid_argument(
        "singular_trajectories: trajectory has no sensitivity block");
  const int n = static_cast<int>(rec.checkpoints.size());
  const int D = static_cast<int>(rec.states.front().size());

  SingularTrajectory st;
  st.ts = rec.checkpoints;
  st.sigmas = rec.noise_sigma;
  st.sv.resize(n, D);
  for (int i = 0; i < n; ++i) {
    if (!rec.Y[static_cast<std::size_t>(i)].allFinite())
      throw DivergenceError("singular_trajectories: non-finite Y");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rec.Y[static_cast<std::size_t>(i)]);
    st.sv.row(i) = svd.singularValues();  // Eigen returns descending order
  }
  if (rec.has_mu) {
    Eigen::MatrixXd mu(n, D);
    for (int i = 0; i < n; ++i)
      mu.row(i) = rec.jacobian_eigs[static_cast<std::size_t>(i)];
    st.mu = std::move(mu);
  }
  if (!rec.jacobians.empty()) {
    st.commutator_norm.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const Eigen::MatrixXd& y = rec.Y[static_cast<std::size_t>(i)];
      const Eigen::MatrixXd p = y * y.transpose();
      const Eigen::MatrixXd& j = rec.jacobians[static_cast<std::size_t>(i)];
      st.commutator_norm[static_cast<std::size_t>(i)] = (j * p - p * j).norm();
    }
  }
  return st;
}

double lemma_check(const SingularTrajectory& st, int eps_index) {
  if (!st.mu)
    throw std::invalid_argument("lemma requires conservative field");
  const int n = static_cast<int>(st.ts.size());
  const int D = static_cast<int>(st.sv.cols());
  if (eps_index < 0 || eps_index >= n - 1)
    throw std::invalid_argument("lemma_check: eps_index out of range");

  // sv rows are descending while the reconstruction pairs the largest
  // eigenvalue of Y Y^T with the smallest eigenvalue of grad f_tilde (larger
  // contraction rates shrink lambda faster), so mu columns are flipped.
  const Eigen::MatrixXd& mu = *st.mu;
  double worst = 0.0;
  for (int i = 0; i < D; ++i) {
    const int mu_col = D - 1 - i;
    const double lam_eps = st.sv(eps_index, i) * st.sv(eps_index, i);
    double integral = 0.0;  // int_t^eps mu_i ds, accumulated cell by cell
    for (int j = eps_index + 1; j < n; ++j) {
      // trapezoid in u = ln t: int mu dt = int mu(t) t du
      const double u_prev = std::log(st.ts[static_cast<std::size_t>(j - 1)]);
      const double u_cur = std::log(st.ts[static_cast<std::size_t>(j)]);
      const double f_prev =
          mu(j - 1, mu_col) * st.ts[static_cast<std::size_t>(j - 1)];
      const double f_cur = mu(j, mu_col) * st.ts[static_cast<std::size_t>(j)];
      integral += 0.5 * (f_prev + f_cur) * (u_prev - u_cur);
      const double lam_rec = lam_eps * std::exp(-2.0 * integral);
      const double lam = st.sv(j, i) * st.sv(j, i);
      worst = std::max(worst, std::abs(lam_rec - lam) / std::abs(lam));
    }
  }
  return worst;
}

IdEstimate estimate_id(const SingularTrajectory& st, double slope_threshold,
                       double fit_decades) {
  const int n = static_cast<int>(st.ts.size());
  const int D = static_cast<int>(st.sv.cols());
  const double sigma_min = st.sigmas.back();
  const double sigma_cut = sigma_min * std::pow(10.0, fit_decades);
  if (st.sigmas.front() < sigma_cut)
    throw std::invalid_argument(
        "estimate_id: checkpoints span fewer decades than fit_decades");

  std::vector<int> window;
  for (int i = 0; i < n; ++i)
    if (st.sigmas[static_cast<std::size_t>(i)] <= sigma_cut) window.push_back(i);
  if (window.size() < 3)
    throw std::invalid_argument("estimate_id: too few checkpoints in window");

  IdEstimate est;
  est.threshold = slope_threshold;
  est.slopes.resize(D);
  const auto m = static_cast<double>(window.size());
  for (int i = 0; i < D; ++i) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int j : window) {
      const double x = std::log(st.sigmas[static_cast<std::size_t>(j)]);
      const double y = std::log(st.sv(j, i));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    est.slopes[i] = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  est.d_hat = 0;
  for (int i = 0; i < D; ++i)
    if (std::abs(est.slopes[i]) < slope_threshold) ++est.d_hat;
  return est;
}

ManifoldExperimentResult run_manifold_experiment(
    const ManifoldExperimentConfig& cfg, Execution exec) {
  cfg.manifold.validate();
  cfg.schedule.validate();
  const Eigen::MatrixXd centers =
      sample_manifold(cfg.manifold, cfg.manifold.n_centers,
                      RngStream::mix(cfg.seed + 1));
  auto p0 = std::make_shared<MixtureDensity>(
      kernel_mixture(centers, cfg.manifold.kernel_bandwidth));
  const MixtureDensity p1 = diffuse(*p0, cfg.schedule, 1.0);

  FieldSpec fs;
  fs.density = p0;
  fs.schedule = cfg.schedule;
  fs.remainder = cfg.remainder;

  const TimeGrid grid = TimeGrid::make(cfg.schedule.t_min, cfg.n_checkpoints,
                                       GridSpacing::LogUniform);
  std::vector<Eigen::VectorXd> inits(static_cast<std::size_t>(cfg.n_samples));
  for (int i = 0; i < cfg.n_samples; ++i) {
    RngStream rng(cfg.seed, 100 + static_cast<std::uint64_t>(i));
    inits[static_cast<std::size_t>(i)] = p1.sample(rng);
  }

  AugmentFlags flags;
  flags.sensitivity = true;
  flags.liouville = true;
  const auto recs =
      integrate_ensemble(fs, cfg.integrator, grid, inits, flags, exec);

  ManifoldExperimentResult result;
  result.per_sample.reserve(recs.size());
  result.trajectories.reserve(recs.size());
  std::map<int, int> votes;
  for (const auto& rec : recs) {
    SingularTrajectory st = singular_trajectories(rec);
    const IdEstimate est =
        estimate_id(st, cfg.slope_threshold, cfg.fit_decades);
    votes[est.d_hat] += 1;
    result.per_sample.push_back(est);
    result.trajectories.push_back(std::move(st));
  }
  int best_count = -1;
  for (const auto& [d, count] : votes)
    if (count > best_count) {
      best_count = count;
      result.modal_d = d;
    }
  result.agreement = static_cast<double>(best_count) / cfg.n_samples;

  bool conservative = cfg.remainder.always_conservative();
  if (cfg.remainder.kind == RemainderKind::LinearMatrix) {
    conservative = true;
    for (double t : grid.checkpoints) {
      const Eigen::MatrixXd m = cfg.remainder.matrix_of_t(t);
      if ((m - m.transpose()).norm() > 1e-10 * std::max(1.0, m.norm())) {
        conservative = false;
        break;
      }
    }
  }
  if (cfg.remainder.kind == RemainderKind::CurlQuadratic &&
      cfg.remainder.epsilon != 0.0)
    conservative = false;
  if (!conservative) result.note = "non-conservative field: estimate unreliable";
  return result;
}

}  // namespace gaugeflow
