#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "snlab/loop.hpp"
#include "snlab/metric.hpp"

namespace snlab {

struct GeodesicState {
    Vec2 x;
    Vec2 v;
    double t = 0.0;
};

// row-major 4x4, used for the fundamental solution of the variational equation
struct Mat4 {
    std::array<double, 16> m{};

    static Mat4 identity();
    double& at(int r, int c) { return m[4 * r + c]; }
    double at(int r, int c) const { return m[4 * r + c]; }
    double det() const;
};

// Classical RK4 on the Euler-Lagrange system (x' = v, v' = a(x,v)).
std::vector<GeodesicState> integrate_geodesic(const MetricSpec& spec, GeodesicState initial,
                                              double duration, double step);

struct VariationalResult {
    GeodesicState endpoint;
    Mat4 fundamental;          // D phi^T at the initial condition
    double liouville_logdet;   // int tr A dt accumulated along the orbit
};

VariationalResult integrate_variational(const MetricSpec& spec, GeodesicState initial,
                                        double duration, double step);

// Fundamental matrix of the flow linearized along an existing trajectory.
Mat4 linearize_along(const MetricSpec& spec, const std::vector<GeodesicState>& trajectory);

enum class OrbitClass { Hyperbolic, Parabolic, Elliptic, Degenerate };

struct FloquetReport {
    double period = 0.0;
    std::array<std::complex<double>, 4> eigenvalues{};
    std::complex<double> mu;       // transverse multiplier with |mu| >= 1
    OrbitClass classification = OrbitClass::Degenerate;
    double lambda_orbit = 0.0;     // log|mu| / period when hyperbolic
    double det_residual = 0.0;     // |det(monodromy) - 1|
    double unit_pair_defect = 0.0; // max |eig - 1| over the discarded pair
    double closure_defect = 0.0;   // endpoint mismatch of the closed orbit
    bool valid = false;
    std::string note;
};

struct MonodromyOpts {
    double step = 1e-3;
    bool refine = true;          // Newton shooting before the monodromy pass
    int refine_iters = 8;
    double closure_tol = 1e-6;
    double hyperbolic_threshold = 1e-4;   // |mu| > 1 + threshold
    double real_tol = 1e-6;               // |Im mu| <= real_tol * |mu|
    double pattern_tol = 1e-3;            // reciprocal-pair and unit-pair check
};

// Floquet analysis of the closed geodesic approximated by a minimizing loop.
FloquetReport monodromy_of_closed(const MetricSpec& spec, const MinimizerResult& orbit,
                                  const MonodromyOpts& opts = {});
FloquetReport monodromy_of_state(const MetricSpec& spec, GeodesicState init, Vec2 shift,
                                 double period, const MonodromyOpts& opts = {});

}  // namespace snlab
