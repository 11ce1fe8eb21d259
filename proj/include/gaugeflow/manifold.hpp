#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>

namespace gaugeflow {

enum class ManifoldKind { EmbeddedGaussian, Sphere, Torus, SwissRoll };

// Point-cloud generator for low-dimensional manifolds embedded in R^D.
// Unused ambient coordinates are exactly zero.
struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::EmbeddedGaussian;
  int intrinsic_dim = 2;
  int ambient_dim = 5;
  std::map<std::string, double> params;  // radius / R / r / variance / scale
  int n_centers = 512;
  double kernel_bandwidth = 0.0;

  double param(const std::string& name, double fallback) const;
  void validate() const;
};

// n i.i.d. points (rows), reproducible from the seed. Sphere and torus are
// sampled uniformly with respect to surface area; the swiss roll uses the
// usual spiral parametrization with uniform parameters.
Eigen::MatrixXd sample_manifold(const ManifoldSpec& spec, int n,
                                std::uint64_t seed);

}  // namespace gaugeflow
