#pragma once

#include <cmath>
#include <functional>

namespace gaugeflow {

// Adaptive Simpson quadrature on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12, int max_depth = 40);

namespace detail {
double simpson_step(const std::function<double(double)>& f, double a, double fa,
                    double b, double fb, double m, double fm, double whole,
                    double tol, int depth);
}

}  // namespace gaugeflow
