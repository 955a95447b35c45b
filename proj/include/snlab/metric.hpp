#pragma once

#include <string>
#include <vector>

#include "snlab/fourier.hpp"
#include "snlab/vec2.hpp"

namespace snlab {

enum class MetricVariant { FlatNorm, Conformal, Rotational };

// A point metric family on T^2:
//   FlatNorm    F(x,v) = sqrt(v^T G v) + <d,v>        (x-independent, Randers-type)
//   Conformal   F(x,v) = sqrt(f(x)) |v|               (f a 2-D trig polynomial)
//   Rotational  F(x,v) = sqrt(f(x2)) |v|              (f a 1-D trig polynomial)
struct MetricSpec {
    MetricVariant variant = MetricVariant::Conformal;

    Mat2 G = Mat2::identity();  // FlatNorm only
    Vec2 drift{0.0, 0.0};       // FlatNorm only
    FourierSeries factor;       // Conformal / Rotational

    static MetricSpec euclidean();
    static MetricSpec flat(Mat2 G, Vec2 drift);
    static MetricSpec conformal(FourierSeries f);
    static MetricSpec rotational(FourierSeries f);

    bool reversible() const;
    std::string describe() const;
};

struct TangentSample {
    Vec2 x;
    Vec2 v;
};

struct FDerivs {
    Vec2 dF_dx;
    Vec2 dF_dv;
};

struct LagrangianData {
    double L = 0.0;   // F^2/2
    Vec2 dL_dx;
    Vec2 dL_dv;
    Mat2 d2L_dv2;     // fiber Hessian, symmetric positive definite for v != 0
    Mat2 d2L_dvdx;    // (i,j) entry: d^2 L / dv_i dx_j
};

// Euler-Lagrange acceleration a(x,v) with d/dt(dL/dv) = dL/dx and its
// analytic Jacobian blocks (used by the variational equation).
struct ElField {
    Vec2 acc;
    Mat2 dacc_dx;
    Mat2 dacc_dv;
};

struct ValidationReport {
    bool valid = false;
    double min_f = 0.0;        // polished minimum of the conformal factor
    double max_f = 0.0;
    double certified_min_f = 0.0;
    double randers_margin = 0.0;  // 1 - |d|_{G^{-1}}, FlatNorm only
    std::vector<std::string> messages;
};

// Certified global comparison constants: alpha*|v| <= F(x,v) <= beta*|v|.
struct MetricBounds {
    double alpha = 0.0;
    double beta = 0.0;
};

double eval_F(const MetricSpec& spec, const TangentSample& s);
FDerivs eval_dF(const MetricSpec& spec, const TangentSample& s);
LagrangianData eval_lagrangian(const MetricSpec& spec, const TangentSample& s);
ElField eval_el_field(const MetricSpec& spec, const TangentSample& s);
ValidationReport validate_spec(const MetricSpec& spec);
MetricBounds metric_bounds(const MetricSpec& spec);

// FNV-1a hash of the canonical description, used to key persisted tables
std::string metric_hash(const MetricSpec& spec);

}  // namespace snlab
