#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gaugeflow/fields.hpp"
#include "gaugeflow/parallel.hpp"
#include "gaugeflow/schedule.hpp"

namespace gaugeflow {

enum class IntegrationMethod { RK4Fixed, RK45Adaptive };
enum class Direction { Backward, Forward };
enum class ProbeDist { Gaussian, Rademacher };

struct IntegratorConfig {
  IntegrationMethod method = IntegrationMethod::RK45Adaptive;
  int n_steps = 256;  // RK4Fixed: total step budget over the whole span
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  Direction direction = Direction::Backward;

  void validate() const;
};

struct HutchinsonOptions {
  int n_probes = 8;
  ProbeDist dist = ProbeDist::Gaussian;
  std::uint64_t seed = 0;
};

struct AugmentFlags {
  bool logdet = false;
  bool sensitivity = false;
  bool liouville = false;
  std::optional<HutchinsonOptions> hutchinson;
};

// Checkpointed solution of the (augmented) probability-flow ODE. Scalars are
// accumulated along the traversal direction; entry i holds the value at
// checkpoints[i].
struct TrajectoryRecord {
  std::vector<double> checkpoints;  // traversal order
  std::vector<double> noise_sigma;  // sigma(t) at each checkpoint
  std::vector<Eigen::VectorXd> states;
  std::vector<double> logdet;               // integral of div f_tilde
  std::vector<Eigen::MatrixXd> Y;           // sensitivity matrices
  std::vector<double> liouville;            // integral of tr grad f_tilde
  std::vector<Eigen::MatrixXd> jacobians;   // grad f_tilde at checkpoints
  std::vector<Eigen::VectorXd> jacobian_eigs;  // descending; symmetric case only
  bool has_logdet = false;
  bool has_Y = false;
  bool has_liouville = false;
  bool has_mu = false;

  double logdet_increment() const;
  double liouville_integral() const;
};

struct StiffnessError : std::runtime_error {
  explicit StiffnessError(const std::string& what) : std::runtime_error(what) {}
};
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

using OdeRhs =
    std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;
using OdeObserver = std::function<void(int, double, const Eigen::VectorXd&)>;

// Low-level driver: marches y through the strictly increasing `times`,
// invoking the observer at every entry (including the first).
void integrate_rhs(const OdeRhs& rhs, Eigen::VectorXd& y,
                   std::span<const double> times, const IntegratorConfig& icfg,
                   const OdeObserver& observe = {});

TrajectoryRecord integrate(const FieldSpec& fs, const IntegratorConfig& icfg,
                           const TimeGrid& grid, const Eigen::VectorXd& x_init,
                           const AugmentFlags& augment = {});

// log p(x0, t_min) estimated by integrating the model field forward to t = 1
// and adding the analytic terminal log-density.
double likelihood(const FieldSpec& fs, const IntegratorConfig& icfg,
                  const Eigen::VectorXd& x0);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// eps^T J eps evaluated pairwise-symmetrized: antisymmetric parts of J cancel
// exactly, entry by entry.
double quadform_pairwise(const Eigen::MatrixXd& j, const Eigen::VectorXd& eps);

McEstimate hutchinson_trace(const Eigen::MatrixXd& jacobian, int n_probes,
                            ProbeDist dist, std::uint64_t seed,
                            Execution exec = Execution::Parallel);
McEstimate hutchinson_trace_serial(const Eigen::MatrixXd& jacobian,
                                   int n_probes, ProbeDist dist,
                                   std::uint64_t seed);

// | log |det Y_end| - liouville integral |.
double liouville_check(const TrajectoryRecord& rec);

// OpenMP ensemble kernel and its plain serial reference.
std::vector<TrajectoryRecord> integrate_ensemble(
    const FieldSpec& fs, const IntegratorConfig& icfg, const TimeGrid& grid,
    const std::vector<Eigen::VectorXd>& inits, const AugmentFlags& augment,
    Execution exec = Execution::Parallel);
std::vector<TrajectoryRecord> integrate_ensemble_serial(
    const FieldSpec& fs, const IntegratorConfig& icfg, const TimeGrid& grid,
    const std::vector<Eigen::VectorXd>& inits, const AugmentFlags& augment);

}  // namespace gaugeflow
