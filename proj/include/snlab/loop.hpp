#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "snlab/metric.hpp"
#include "snlab/rational.hpp"

namespace snlab {

// Sampled closed curve in the universal cover with winding class z; the
// closure point is implicit: x_N = x_0 + z.
struct DiscreteLoop {
    LatticeVector cls;
    std::vector<Vec2> pts;

    int n() const { return static_cast<int>(pts.size()); }
};

DiscreteLoop init_loop(LatticeVector z, Vec2 offset, int N);

// Open sampled curve with both endpoints held fixed during minimization.
struct DiscretePath {
    std::vector<Vec2> pts;

    int n_segments() const { return static_cast<int>(pts.size()) - 1; }
};

// Discrete functionals. Energy uses the uniform-parameter convention
//   E = (1/N) sum_i L(mid_i, N dx_i),
// so that a constant-speed loop satisfies length^2 = 2 E.
namespace kernels {

double loop_energy_serial(const MetricSpec&, const DiscreteLoop&);
double loop_energy_parallel(const MetricSpec&, const DiscreteLoop&);
double loop_length_serial(const MetricSpec&, const DiscreteLoop&);
double loop_length_parallel(const MetricSpec&, const DiscreteLoop&);
// returns energy, writes dE/dx_i
double loop_energy_grad_serial(const MetricSpec&, const DiscreteLoop&, std::vector<Vec2>& grad);
double loop_energy_grad_parallel(const MetricSpec&, const DiscreteLoop&, std::vector<Vec2>& grad);

double path_energy(const MetricSpec&, const DiscretePath&, bool parallel);
double path_length(const MetricSpec&, const DiscretePath&, bool parallel);
double path_energy_grad(const MetricSpec&, const DiscretePath&, std::vector<Vec2>& grad, bool parallel);

}  // namespace kernels

double discrete_energy(const MetricSpec&, const DiscreteLoop&);
double discrete_length(const MetricSpec&, const DiscreteLoop&);

struct MinimizeOpts {
    double tol_grad = 1e-10;      // exit when |grad|_inf <= tol_grad * grad_scale
    int max_iter = 200000;
    int levels = 3;               // N-doubling refinements (N, 2N, 4N, ...)
    double tol_refine = 1e-6;     // relative |sigma_2N - sigma_N| stop
    bool parallel = true;
    bool precondition = true;
    int verbosity = 0;
};

struct MinimizerResult {
    double sigma = 0.0;          // discrete length at the finest level
    double sigma_extrap = 0.0;   // Richardson-extrapolated estimate
    double error_bar = 0.0;      // heuristic absolute bar for sigma_extrap
    bool converged = false;
    double grad_norm = 0.0;      // |grad E|_inf at exit
    int N = 0;
    std::vector<std::pair<int, double>> history;  // (N, sigma_N)
    DiscreteLoop loop;
    int iterations = 0;
};

MinimizerResult minimize_loop(const MetricSpec&, DiscreteLoop initial, const MinimizeOpts& opts = {});

struct PathResult {
    double length = 0.0;
    bool converged = false;
    double grad_norm = 0.0;
    DiscretePath path;
    int iterations = 0;
};

PathResult minimize_path(const MetricSpec&, DiscretePath initial, const MinimizeOpts& opts = {});

struct PeriodicFamily {
    std::vector<MinimizerResult> orbits;  // distinct minimizing orbits, best first
    double sigma = 0.0;                   // best length found
    int restarts = 0;
};

// Multi-start enumeration of distinct shortest closed geodesics in class z.
// Offsets are spread transverse to z across one lattice strip; the seed only
// jitters them (deterministic given (spec, z, restarts, seed)).
PeriodicFamily find_periodic_minimizers(const MetricSpec&, LatticeVector z, int restarts,
                                        const MinimizeOpts& opts = {}, std::uint64_t seed = 1,
                                        double cluster_tol = 1e-2, double length_window = 1e-4);

// symmetric Hausdorff distance between projected loop images on T^2
double loop_hausdorff(const DiscreteLoop& a, const DiscreteLoop& b);

}  // namespace snlab
