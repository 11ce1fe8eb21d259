#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gaugeflow/flow.hpp"
#include "gaugeflow/manifold.hpp"

namespace gaugeflow {

// Per-checkpoint singular values of the sensitivity matrix, each row sorted
// descending, plus (symmetric-field case) the eigenvalues of grad f_tilde.
struct SingularTrajectory {
  std::vector<double> ts;
  std::vector<double> sigmas;  // sigma(t) per checkpoint
  Eigen::MatrixXd sv;          // checkpoints x D, descending per row
  std::optional<Eigen::MatrixXd> mu;  // checkpoints x D, descending per row
  std::vector<double> commutator_norm;  // ||[Y Y^T, grad f_tilde]||_F diagnostic
};

struct IdEstimate {
  int d_hat = 0;
  Eigen::VectorXd slopes;
  double threshold = 0.5;
};

SingularTrajectory singular_trajectories(const TrajectoryRecord& rec);

// Verifies the eigenvalue reconstruction lambda_i(t) =
// lambda_i(eps) * exp(-2 int_t^eps mu_i ds) against the recorded singular
// values; returns the max relative error over i and t <= ts[eps_index].
double lemma_check(const SingularTrajectory& st, int eps_index);

// Least-squares slope of log sv_i against log sigma(t) over the final
// fit_decades decades of sigma; d_hat counts the saturating values
// (|slope| < slope_threshold).
IdEstimate estimate_id(const SingularTrajectory& st,
                       double slope_threshold = 0.5, double fit_decades = 1.0);

struct ManifoldExperimentConfig {
  ManifoldSpec manifold;
  RemainderSpec remainder;
  ScheduleConfig schedule;
  IntegratorConfig integrator;
  int n_checkpoints = 64;
  int n_samples = 20;
  std::uint64_t seed = 0;
  double slope_threshold = 0.5;
  double fit_decades = 1.0;
};

struct ManifoldExperimentResult {
  std::vector<IdEstimate> per_sample;
  int modal_d = 0;
  double agreement = 0.0;
  std::string note;  // set when the field is not conservative
  std::vector<SingularTrajectory> trajectories;
};

ManifoldExperimentResult run_manifold_experiment(
    const ManifoldExperimentConfig& cfg, Execution exec = Execution::Parallel);

}  // namespace gaugeflow
