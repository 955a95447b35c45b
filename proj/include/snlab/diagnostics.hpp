#pragma once

#include <optional>
#include <string>
#include <vector>

#include "snlab/stable_norm.hpp"

namespace snlab {

// Lemma-style radial decomposition: xi + v = P1(v) + P2(v), P1 along xi,
// P2 orthogonal to it.
std::pair<Vec2, Vec2> radial_decompose(Vec2 xi, Vec2 v);

enum class ProfileMode { SigmaDefectRational, BetaDefectIrrational };

struct DefectSample {
    double t = 0.0;
    double delta = 0.0;
    double bar = 0.0;
    bool censored = false;  // |delta| <= bar: only the bar is informative
};

struct DefectProfile {
    Vec2 xi;
    Vec2 vhat;
    ProfileMode mode = ProfileMode::BetaDefectIrrational;
    std::vector<DefectSample> samples;  // t decreasing
    bool uninformative = false;         // every sample censored and no scale
};

struct ProfileOpts {
    double t0 = 0.1;
    int octaves = 8;               // t_i = t0 * 2^-i, i = 0..octaves-1
    std::vector<int> n_list{2, 4, 8, 16};
    double beta_width_target = 3e-8;
};

DefectProfile profile_defect(SigmaCache& cache, Vec2 xi, Vec2 vhat, const ProfileOpts& opts = {});

enum class FitModel { QuadraticPinch, ExponentialFlat, Undetermined };

struct FitReport {
    FitModel model = FitModel::Undetermined;
    // quadratic band: C_lo t^2 <= delta <= C_hi t^2 over uncensored samples
    double C_lo = 0.0, C_hi = 0.0;
    // exponential model delta = t^pow * C * exp(-lambda / t^pow)
    double C_exp = 0.0, lambda = 0.0;
    double resid_quad = 0.0, resid_exp = 0.0;
    int n_uncensored = 0;
    bool censor_decisive = false;  // censoring pattern alone selected the model
    std::string note;
};

// Fits both model forms on uncensored samples (log-space least squares) and
// charges each model for censored samples it overshoots. c_ref anchors the
// quadratic scale when nothing is measurable (metric curvature scale).
FitReport fit_models(const DefectProfile& profile, double c_ref = 0.0);

enum class DirectionClass { KamLike, HyperbolicLike, Undetermined };

struct ClassifyOpts {
    ProfileOpts profile{};
    int restarts = 8;
    std::uint64_t seed = 1;
    double rational_q_cap = 64;   // snap xi to a lattice direction up to this q
};

struct DirectionVerdict {
    DirectionClass cls = DirectionClass::Undetermined;
    Vec2 xi;
    bool rational = false;
    LatticeVector z;  // valid when rational
    DefectProfile side_plus, side_minus;
    FitReport fit_plus, fit_minus;
    std::optional<FloquetReport> floquet;
    std::string caveat;
};

DirectionVerdict classify_direction(SigmaCache& cache, Vec2 xi, const ClassifyOpts& opts = {});

struct HeteroclinicSegment {
    DiscretePath path;
    double length = 0.0;
    int window = 0;            // periods of shadowing on each side
    LatticeVector cls;         // z of the orbits
    bool converged = false;
    // decay of d(path(t), orbit) sampled from each end inward
    std::vector<double> decay_start, decay_end;
    double fitted_rate = 0.0;  // exp rate of the end decay, per unit length
    double floquet_rate = 0.0; // lambda_orbit of the source orbit, if available
    bool decay_consistent = false;  // fitted within a factor 2 of Floquet
};

// Windowed minimizing curve from orbitA to orbitB + m*z (images on T^2 differ).
HeteroclinicSegment find_heteroclinic(const MetricSpec& spec, const MinimizerResult& orbitA,
                                      const MinimizerResult& orbitB, int window_m,
                                      const MinimizeOpts& opts = {});

struct BrokenCurveResult {
    DiscretePath curve;
    double length = 0.0;
    double bound_rhs = 0.0;     // sigma(nz) + D+ estimate + splice tail terms
    LatticeVector target_cls;   // n z + s z_perp
    Vec2 displacement;          // measured end-to-end displacement
    bool class_ok = false;
    std::vector<double> splice_windows;  // S_i in arc-length units
};

struct BrokenCurveOpts {
    MinimizeOpts minimize{};
    int restarts = 8;
    std::uint64_t seed = 1;
    std::vector<int> n_list{2, 4, 8, 16};
};

// Splices periodic arcs and heteroclinic windows into an (n z + s z_perp)-
// periodic curve; its measured length upper-bounds sigma(n z + s z_perp).
BrokenCurveResult broken_curve(const MetricSpec& spec, SigmaCache& cache, LatticeVector z, int s,
                               int n, const std::vector<int>& partition,
                               const BrokenCurveOpts& opts = {});

}  // namespace snlab
