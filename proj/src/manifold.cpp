#include "gaugeflow/manifold.hpp"

#include <cmath>
#include <stdexcept>

#include "gaugeflow/rng.hpp"

namespace gaugeflow {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double ManifoldSpec::param(const std::string& name, double fallback) const {
  auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

void ManifoldSpec::validate() const {
  if (intrinsic_dim < 1) throw std::invalid_argument("manifold: intrinsic_dim < 1");
  if (ambient_dim < intrinsic_dim)
    throw std::invalid_argument("manifold: ambient_dim < intrinsic_dim");
  if (n_centers < 1) throw std::invalid_argument("manifold: n_centers < 1");
  if (kernel_bandwidth < 0.0)
    throw std::invalid_argument("manifold: kernel_bandwidth < 0");
  switch (kind) {
    case ManifoldKind::EmbeddedGaussian:
      if (!(param("variance", 1.0) > 0.0))
        throw std::invalid_argument("manifold: variance must be > 0");
      break;
    case ManifoldKind::Sphere:
      if (intrinsic_dim >= ambient_dim)
        throw std::invalid_argument("manifold: sphere needs d < D");
      if (intrinsic_dim + 1 > ambient_dim)
        throw std::invalid_argument("manifold: sphere S^d needs D >= d+1");
      if (!(param("radius", 1.0) > 0.0))
        throw std::invalid_argument("manifold: radius must be > 0");
      break;
    case ManifoldKind::Torus:
      if (intrinsic_dim != 2)
        throw std::invalid_argument("manifold: torus has intrinsic_dim 2");
      if (ambient_dim < 3) throw std::invalid_argument("manifold: torus needs D >= 3");
      if (!(param("R", 2.0) > 0.0 && param("r", 0.5) > 0.0))
        throw std::invalid_argument("manifold: torus radii must be > 0");
      if (!(param("r", 0.5) < param("R", 2.0)))
        throw std::invalid_argument("manifold: torus needs r < R");
      break;
    case ManifoldKind::SwissRoll:
      if (intrinsic_dim != 2)
        throw std::invalid_argument("manifold: swiss roll has intrinsic_dim 2");
      if (ambient_dim < 3)
        throw std::invalid_argument("manifold: swiss roll needs D >= 3");
      if (!(param("scale", 1.0) > 0.0))
        throw std::invalid_argument("manifold: scale must be > 0");
      break;
  }
}

Eigen::MatrixXd sample_manifold(const ManifoldSpec& spec, int n,
                                std::uint64_t seed) {
  spec.validate();
  if (n <= 0) throw std::invalid_argument("sample_manifold: n must be > 0");
  const int D = spec.ambient_dim;
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(n, D);

  for (int i = 0; i < n; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    switch (spec.kind) {
      case ManifoldKind::EmbeddedGaussian: {
        const double sd = std::sqrt(spec.param("variance", 1.0));
        for (int j = 0; j < spec.intrinsic_dim; ++j)
          pts(i, j) = sd * rng.next_gaussian();
        break;
      }
      case ManifoldKind::Sphere: {
        const double radius = spec.param("radius", 1.0);
        const int m = spec.intrinsic_dim + 1;
        Eigen::VectorXd z(m);
        double norm2 = 0.0;
        do {
          norm2 = 0.0;
          for (int j = 0; j < m; ++j) {
            z[j] = rng.next_gaussian();
            norm2 += z[j] * z[j];
          }
        } while (norm2 == 0.0);
        const double scale = radius / std::sqrt(norm2);
        for (int j = 0; j < m; ++j) pts(i, j) = scale * z[j];
        break;
      }
      case ManifoldKind::Torus: {
        const double R = spec.param("R", 2.0);
        const double r = spec.param("r", 0.5);
        const double phi = 2.0 * kPi * rng.next_double();
        // area element on the torus is proportional to R + r cos(theta)
        double theta;
        do {
          theta = 2.0 * kPi * rng.next_double();
        } while (rng.next_double() * (R + r) > R + r * std::cos(theta));
        pts(i, 0) = (R + r * std::cos(theta)) * std::cos(phi);
        pts(i, 1) = (R + r * std::cos(theta)) * std::sin(phi);
        pts(i, 2) = r * std::sin(theta);
        break;
      }
      case ManifoldKind::SwissRoll: {
        const double scale = spec.param("scale", 1.0);
        const double height = spec.param("height", 21.0);
        const double a = 1.5 * kPi * (1.0 + 2.0 * rng.next_double());
        pts(i, 0) = scale * a * std::cos(a);
        pts(i, 1) = scale * height * rng.next_double();
        pts(i, 2) = scale * a * std::sin(a);
        break;
      }
    }
  }
  return pts;
}

}  // namespace gaugeflow
