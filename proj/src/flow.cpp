#include "gaugeflow/flow.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "gaugeflow/mixture.hpp"
#include "gaugeflow/rng.hpp"

namespace gaugeflow {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Dopri5 {
  const OdeRhs& rhs;
  double rel_tol, abs_tol;
  Eigen::VectorXd k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, yerr;

  Dopri5(const OdeRhs& f, double rel, double abs, Eigen::Index n)
      : rhs(f), rel_tol(rel), abs_tol(abs) {
    for (auto* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &ytmp, &ynew, &yerr})
      v->resize(n);
  }

  // One trial step; returns the scaled error norm and fills ynew.
  double attempt(double t, const Eigen::VectorXd& y, double h) {
    rhs(t, y, k1);
    ytmp = y + h * (a21 * k1);
    rhs(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, ynew, k7);
    yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale =
          abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double r = yerr[i] / scale;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(y.size()));
  }
};

void rk4_step(const OdeRhs& rhs, double t, double h, Eigen::VectorXd& y,
              Eigen::VectorXd& k1, Eigen::VectorXd& k2, Eigen::VectorXd& k3,
              Eigen::VectorXd& k4, Eigen::VectorXd& ytmp) {
  rhs(t, y, k1);
  ytmp = y + 0.5 * h * k1;
  rhs(t + 0.5 * h, ytmp, k2);
  ytmp = y + 0.5 * h * k2;
  rhs(t + 0.5 * h, ytmp, k3);
  ytmp = y + h * k3;
  rhs(t + h, ytmp, k4);
  y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

[[noreturn]] void throw_stiffness(double t) {
  std::ostringstream os;
  os << "adaptive step underflow (stiffness) at integrator time " << t;
  throw StiffnessError(os.str());
}

[[noreturn]] void throw_divergence(double t) {
  std::ostringstream os;
  os << "non-finite state at integrator time " << t;
  throw DivergenceError(os.str());
}

}  // namespace

void IntegratorConfig::validate() const {
  if (method == IntegrationMethod::RK4Fixed && n_steps < 1)
    throw std::invalid_argument("integrator.n_steps must be >= 1");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
    throw std::invalid_argument("integrator tolerances must be > 0");
}

void integrate_rhs(const OdeRhs& rhs, Eigen::VectorXd& y,
                   std::span<const double> times, const IntegratorConfig& icfg,
                   const OdeObserver& observe) {
  icfg.validate();
  if (times.size() < 2)
    throw std::invalid_argument("integrate_rhs: need at least 2 time points");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("integrate_rhs: times must strictly increase");

  const double span = times.back() - times.front();
  if (observe) observe(0, times.front(), y);

  if (icfg.method == IntegrationMethod::RK4Fixed) {
    Eigen::VectorXd k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()),
        ytmp(y.size());
    for (std::size_t seg = 0; seg + 1 < times.size(); ++seg) {
      const double a = times[seg], b = times[seg + 1];
      const int n = std::max(
          1, static_cast<int>(std::lround(icfg.n_steps * (b - a) / span)));
      const double h = (b - a) / n;
      double t = a;
      for (int s = 0; s < n; ++s) {
        rk4_step(rhs, t, h, y, k1, k2, k3, k4, ytmp);
        t = a + (s + 1) * h;
      }
      if (!y.allFinite()) throw_divergence(b);
      if (observe) observe(static_cast<int>(seg) + 1, b, y);
    }
    return;
  }

  Dopri5 stepper(rhs, icfg.rel_tol, icfg.abs_tol, y.size());
  const double h_min = std::max(1e-12, 1e-14 * span);
  double t = times.front();
  double h = span / 100.0;
  for (std::size_t seg = 0; seg + 1 < times.size(); ++seg) {
    const double target = times[seg + 1];
    while (t < target) {
      bool clipped = false;
      double h_try = h;
      if (t + h_try >= target) {
        h_try = target - t;
        clipped = true;
      }
      const double err = stepper.attempt(t, y, h_try);
      if (!std::isfinite(err) || !stepper.ynew.allFinite()) {
        h = 0.5 * h_try;
        if (h < h_min) throw_divergence(t);
        continue;
      }
      if (err <= 1.0) {
        t = clipped ? target : t + h_try;
        y = stepper.ynew;
        const double grow =
            err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h = std::max(h_try * grow, h_min);
      } else {
        h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        if (h < h_min) throw_stiffness(t);
      }
    }
    if (observe) observe(static_cast<int>(seg) + 1, target, y);
  }
}

double TrajectoryRecord::logdet_increment() const {
  if (!has_logdet) throw std::logic_error("trajectory has no logdet block");
  return logdet.back();
}

double TrajectoryRecord::liouville_integral() const {
  if (!has_liouville) throw std::logic_error("trajectory has no liouville block");
  return liouville.back();
}

TrajectoryRecord integrate(const FieldSpec& fs, const IntegratorConfig& icfg,
                           const TimeGrid& grid, const Eigen::VectorXd& x_init,
                           const AugmentFlags& augment) {
  grid.validate();
  const int D = static_cast<int>(x_init.size());
  const bool backward = icfg.direction == Direction::Backward;

  // Traversal order of the SDE times; the integrator marches in tau with
  // tau = 1 - t (backward) or tau = t (forward), so tau always increases.
  std::vector<double> t_points(grid.checkpoints);
  if (!backward) std::reverse(t_points.begin(), t_points.end());
  std::vector<double> tau_points(t_points.size());
  for (std::size_t i = 0; i < t_points.size(); ++i)
    tau_points[i] = backward ? 1.0 - t_points[i] : t_points[i];

  const bool need_jac = augment.sensitivity || augment.liouville ||
                        augment.logdet;
  const int n_logdet = augment.logdet ? 1 : 0;
  const int n_sens = augment.sensitivity ? D * D : 0;
  const int n_liou = augment.liouville ? 1 : 0;
  const int off_logdet = D;
  const int off_sens = D + n_logdet;
  const int off_liou = off_sens + n_sens;
  const int n_total = D + n_logdet + n_sens + n_liou;

  auto probe_counter = std::make_shared<std::uint64_t>(0);

  OdeRhs rhs = [&, probe_counter](double tau, const Eigen::VectorXd& y,
                                  Eigen::VectorXd& dy) {
    const double t = backward ? 1.0 - tau : tau;
    const double sgn = backward ? -1.0 : 1.0;  // dt/dtau
    const Eigen::VectorXd x = y.head(D);
    dy.head(D) = sgn * fs.backward(x, t);
    if (!need_jac) return;
    const Eigen::MatrixXd j = fs.backward_jacobian(x, t);
    if (augment.logdet) {
      double div;
      if (augment.hutchinson) {
        const auto& opt = *augment.hutchinson;
        double acc = 0.0;
        Eigen::VectorXd eps(D);
        for (int p = 0; p < opt.n_probes; ++p) {
          RngStream rng(opt.seed, (*probe_counter)++);
          for (int i = 0; i < D; ++i)
            eps[i] = opt.dist == ProbeDist::Gaussian ? rng.next_gaussian()
                                                     : rng.next_rademacher();
          acc += quadform_pairwise(j, eps);
        }
        div = acc / opt.n_probes;
      } else {
        div = j.trace();
      }
      dy[off_logdet] = sgn * div;
    }
    if (augment.sensitivity) {
      const Eigen::Map<const Eigen::MatrixXd> ymat(y.data() + off_sens, D, D);
      Eigen::Map<Eigen::MatrixXd> dymat(dy.data() + off_sens, D, D);
      dymat.noalias() = sgn * (j * ymat);
    }
    if (augment.liouville) dy[off_liou] = sgn * j.trace();
  };

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_total);
  y.head(D) = x_init;
  if (augment.sensitivity) {
    Eigen::Map<Eigen::MatrixXd> ymat(y.data() + off_sens, D, D);
    ymat.setIdentity();
  }

  TrajectoryRecord rec;
  rec.has_logdet = augment.logdet;
  rec.has_Y = augment.sensitivity;
  rec.has_liouville = augment.liouville;
  const std::size_t n_cp = t_points.size();
  rec.checkpoints.reserve(n_cp);
  rec.states.reserve(n_cp);

  bool all_symmetric = true;
  OdeObserver observe = [&](int idx, double /*tau*/, const Eigen::VectorXd& yy) {
    const double t = t_points[static_cast<std::size_t>(idx)];
    rec.checkpoints.push_back(t);
    rec.noise_sigma.push_back(fs.schedule.sigma(t));
    rec.states.push_back(yy.head(D));
    if (augment.logdet) rec.logdet.push_back(yy[off_logdet]);
    if (augment.liouville) rec.liouville.push_back(yy[off_liou]);
    if (augment.sensitivity) {
      const Eigen::Map<const Eigen::MatrixXd> ymat(yy.data() + off_sens, D, D);
      rec.Y.push_back(ymat);
      const Eigen::MatrixXd j = fs.backward_jacobian(yy.head(D), t);
      rec.jacobians.push_back(j);
      if ((j - j.transpose()).norm() > 1e-9 * std::max(1.0, j.norm()))
        all_symmetric = false;
    }
  };

  integrate_rhs(rhs, y, tau_points, icfg, observe);

  if (augment.sensitivity && all_symmetric) {
    rec.has_mu = true;
    rec.jacobian_eigs.reserve(rec.jacobians.size());
    for (const auto& j : rec.jacobians) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
      rec.jacobian_eigs.push_back(es.eigenvalues().reverse());
    }
  }
  return rec;
}

double likelihood(const FieldSpec& fs, const IntegratorConfig& icfg,
                  const Eigen::VectorXd& x0) {
  IntegratorConfig fwd = icfg;
  fwd.direction = Direction::Forward;
  TimeGrid grid;
  grid.checkpoints = {1.0, fs.schedule.t_min};
  AugmentFlags flags;
  flags.logdet = true;
  const TrajectoryRecord rec = integrate(fs, fwd, grid, x0, flags);
  const MixtureDensity p1 = diffuse(*fs.density, fs.schedule, 1.0);
  return p1.log_density(rec.states.back()) + rec.logdet_increment();
}

double quadform_pairwise(const Eigen::MatrixXd& j, const Eigen::VectorXd& eps) {
  const Eigen::Index n = j.rows();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += j(i, i) * eps[i] * eps[i];
    for (Eigen::Index k = i + 1; k < n; ++k)
      acc += (j(i, k) + j(k, i)) * eps[i] * eps[k];
  }
  return acc;
}

namespace {

McEstimate hutchinson_impl(const Eigen::MatrixXd& jacobian, int n_probes,
                           ProbeDist dist, std::uint64_t seed, Execution exec) {
  if (n_probes < 2)
    throw std::invalid_argument("hutchinson_trace: need at least 2 probes");
  const int D = static_cast<int>(jacobian.rows());
  std::vector<double> vals(static_cast<std::size_t>(n_probes));
  for_each_index(n_probes, exec, [&](int p) {
    RngStream rng(seed, static_cast<std::uint64_t>(p));
    Eigen::VectorXd eps(D);
    for (int i = 0; i < D; ++i)
      eps[i] = dist == ProbeDist::Gaussian ? rng.next_gaussian()
                                           : rng.next_rademacher();
    vals[static_cast<std::size_t>(p)] = quadform_pairwise(jacobian, eps);
  });
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= n_probes;
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= (n_probes - 1);
  return {mean, std::sqrt(var / n_probes)};
}

}  // namespace

McEstimate hutchinson_trace(const Eigen::MatrixXd& jacobian, int n_probes,
                            ProbeDist dist, std::uint64_t seed, Execution exec) {
  return hutchinson_impl(jacobian, n_probes, dist, seed, exec);
}

McEstimate hutchinson_trace_serial(const Eigen::MatrixXd& jacobian,
                                   int n_probes, ProbeDist dist,
                                   std::uint64_t seed) {
  if (n_probes < 2)
    throw std::invalid_argument("hutchinson_trace: need at least 2 probes");
  const int D = static_cast<int>(jacobian.rows());
  double sum = 0.0, sumsq = 0.0;
  std::vector<double> vals(static_cast<std::size_t>(n_probes));
  for (int p = 0; p < n_probes; ++p) {
    RngStream rng(seed, static_cast<std::uint64_t>(p));
    Eigen::VectorXd eps(D);
    for (int i = 0; i < D; ++i)
      eps[i] = dist == ProbeDist::Gaussian ? rng.next_gaussian()
                                           : rng.next_rademacher();
    vals[static_cast<std::size_t>(p)] = quadform_pairwise(jacobian, eps);
  }
  for (double v : vals) sum += v;
  const double mean = sum / n_probes;
  for (double v : vals) sumsq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sumsq / (n_probes - 1) / n_probes)};
}

double liouville_check(const TrajectoryRecord& rec) {
  if (!rec.has_Y || !rec.has_liouville)
    throw std::invalid_argument(
        "liouville_check: trajectory needs sensitivity and liouville blocks");
  const double det = rec.Y.back().partialPivLu().determinant();
  return std::abs(std::log(std::abs(det)) - rec.liouville_integral());
}

std::vector<TrajectoryRecord> integrate_ensemble(
    const FieldSpec& fs, const IntegratorConfig& icfg, const TimeGrid& grid,
    const std::vector<Eigen::VectorXd>& inits, const AugmentFlags& augment,
    Execution exec) {
  std::vector<TrajectoryRecord> out(inits.size());
  for_each_index(static_cast<int>(inits.size()), exec, [&](int i) {
    out[static_cast<std::size_t>(i)] =
        integrate(fs, icfg, grid, inits[static_cast<std::size_t>(i)], augment);
  });
  return out;
}

std::vector<TrajectoryRecord> integrate_ensemble_serial(
    const FieldSpec& fs, const IntegratorConfig& icfg, const TimeGrid& grid,
    const std::vector<Eigen::VectorXd>& inits, const AugmentFlags& augment) {
  std::vector<TrajectoryRecord> out;
  out.reserve(inits.size());
  for (const auto& x : inits)
    out.push_back(integrate(fs, icfg, grid, x, augment));
  return out;
}

}  // namespace gaugeflow
