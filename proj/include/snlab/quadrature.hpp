#pragma once

#include <functional>

namespace snlab {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;   // estimated absolute error
    int evaluations = 0;
    bool converged = false;
};

// Adaptive Gauss-Kronrod (G7,K15) on [a,b] with recursive bisection.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol = 1e-12, double rel_tol = 1e-12, int max_depth = 48);

}  // namespace snlab
