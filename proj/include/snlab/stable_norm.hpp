#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "snlab/geodesic.hpp"
#include "snlab/loop.hpp"
#include "snlab/metric.hpp"

namespace snlab {

struct TableEntry {
    LatticeVector z;
    double sigma = 0.0;          // best discrete length
    double sigma_extrap = 0.0;
    double error_bar = 0.0;
    bool converged = false;
    double grad_norm = 0.0;
    int N = 0;
    int orbit_count = 0;
    bool failed = false;
    std::string note;
    DiscreteLoop best_loop;
    std::optional<FloquetReport> floquet;
};

struct BuildOpts {
    int restarts = 8;
    std::uint64_t seed = 1;
    MinimizeOpts minimize{};
    bool with_floquet = false;
    bool parallel = true;
};

struct StableNormTable {
    std::string metric_hash;
    int Q = 0;
    std::uint64_t seed = 1;
    std::vector<TableEntry> entries;  // sorted by angle of z

    const TableEntry* find(LatticeVector z) const;
};

StableNormTable build_table(const MetricSpec& spec, int Q, const BuildOpts& opts = {});

// Certified two-sided bound for sigma at a query direction: chord of the
// tabulated unit ball from the enclosing primitive pair (upper), extended
// neighbor-edge supporting lines (lower).
struct Sandwich {
    Vec2 xi;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<LatticeVector> support;  // classes used by the bounds

    double width() const { return upper - lower; }
    double mid() const { return 0.5 * (lower + upper); }
};

Sandwich sigma_at(const StableNormTable& table, Vec2 xi);

// Memoized sigma over lattice classes, shared by the defect machinery.
// Discretization scales with |z| and the requested per-unit-length accuracy.
class SigmaCache {
  public:
    SigmaCache(const MetricSpec& spec, MinimizeOpts base = {});

    struct Value {
        double sigma = 0.0;     // extrapolated estimate
        double bar = 0.0;
        double raw = 0.0;       // finest-level discrete length
        bool converged = false;
    };
    // accuracy: absolute bar target per unit of |z| (best effort, recorded)
    Value sigma(LatticeVector z, double accuracy = 1e-9);
    const MinimizerResult* result(LatticeVector z) const;
    const MetricSpec& spec() const { return spec_; }

    // Directed sandwich via Stern-Brocot descent around the direction of xi;
    // tightens until width <= width_target * |xi| or the class cap is hit.
    Sandwich directed_sandwich(Vec2 xi, double width_target, double len_cap = 4096.0);

    size_t size() const { return memo_.size(); }

  private:
    MetricSpec spec_;
    MinimizeOpts base_;
    std::map<std::pair<std::int64_t, std::int64_t>, MinimizerResult> memo_;
    std::mutex mu_;
};

// Forward directional derivative at a rational direction via the lattice
// limit d_n = sigma(n z + w) - n sigma(z), monotone non-increasing in n.
struct DPlusTrace {
    LatticeVector z;
    LatticeVector w;
    std::vector<int> n_list;
    std::vector<double> d;        // d_n values
    std::vector<double> bars;
    double estimate = 0.0;        // last trace value
    double bar = 0.0;
    bool reliable = false;
};

DPlusTrace forward_derivative_at_lattice(SigmaCache& cache, LatticeVector z, LatticeVector w,
                                         const std::vector<int>& n_list);

struct DefectValue {
    double value = 0.0;
    double bar = 0.0;
    bool inconclusive = false;   // bar exceeds requested resolution
    std::string note;
};

// Convexity defect of sigma at a rational direction z (v snapped to a nearby
// exact rational transverse step): sigma(z+v) - sigma(z) - D+sigma(z)[v].
DefectValue defect_sigma(SigmaCache& cache, LatticeVector z, Vec2 v,
                         const std::vector<int>& n_list = {2, 4, 8, 16});

// Beta defect at a direction with derivative (irrational slope, or rational
// with a foliation): beta(xi+v) - beta(xi) - Dbeta(xi)[v], beta = sigma^2/2.
// Dbeta is a Richardson-extrapolated symmetric difference of sandwich
// midpoints; all bars propagate sandwich widths.
DefectValue defect_beta(SigmaCache& cache, Vec2 xi, Vec2 v, double width_target = 3e-8);

// beta derivative helper (exposed for diagnostics)
struct BetaDerivative {
    double value = 0.0;
    double bar = 0.0;
};
BetaDerivative beta_derivative(SigmaCache& cache, Vec2 xi, Vec2 dir, double width_target = 3e-8);

}  // namespace snlab
