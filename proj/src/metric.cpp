#include "snlab/metric.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace snlab {

namespace {

void require_nonzero(const Vec2& v) {
    if (v.x == 0.0 && v.y == 0.0)
        throw std::domain_error("metric evaluation requires v != 0");
}

// dual norm of the drift covector: sqrt(d^T G^{-1} d)
double drift_dual_norm(const Mat2& G, Vec2 d) {
    Vec2 gd = G.solve(d);
    return std::sqrt(std::max(0.0, dot(d, gd)));
}

double spd_min_eig(const Mat2& G) {
    double tr = G.trace(), de = G.det();
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - de));
    return tr / 2.0 - disc;
}

double spd_max_eig(const Mat2& G) {
    double tr = G.trace(), de = G.det();
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - de));
    return tr / 2.0 + disc;
}

}  // namespace

MetricSpec MetricSpec::euclidean() {
    return flat(Mat2::identity(), {0.0, 0.0});
}

MetricSpec MetricSpec::flat(Mat2 G, Vec2 drift) {
    MetricSpec s;
    s.variant = MetricVariant::FlatNorm;
    s.G = G;
    s.drift = drift;
    return s;
}

MetricSpec MetricSpec::conformal(FourierSeries f) {
    if (f.dim() != 2) throw std::invalid_argument("conformal factor must be a 2-D series");
    MetricSpec s;
    s.variant = MetricVariant::Conformal;
    s.factor = std::move(f);
    return s;
}

MetricSpec MetricSpec::rotational(FourierSeries f) {
    if (f.dim() != 1) throw std::invalid_argument("rotational factor must be a 1-D series");
    MetricSpec s;
    s.variant = MetricVariant::Rotational;
    s.factor = std::move(f);
    return s;
}

bool MetricSpec::reversible() const {
    if (variant == MetricVariant::FlatNorm) return drift.x == 0.0 && drift.y == 0.0;
    return true;
}

std::string MetricSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (variant) {
        case MetricVariant::FlatNorm:
            os << "flat G=[" << G.m00 << "," << G.m01 << "," << G.m10 << "," << G.m11
               << "] d=[" << drift.x << "," << drift.y << "]";
            break;
        case MetricVariant::Conformal:
            os << "conformal";
            break;
        case MetricVariant::Rotational:
            os << "rotational";
            break;
    }
    if (variant != MetricVariant::FlatNorm) {
        os << " c=" << factor.constant();
        for (const auto& t : factor.terms())
            os << " (" << t.k1 << "," << t.k2 << "," << t.cos_amp << "," << t.sin_amp << ")";
    }
    return os.str();
}

double eval_F(const MetricSpec& spec, const TangentSample& s) {
    require_nonzero(s.v);
    switch (spec.variant) {
        case MetricVariant::FlatNorm: {
            double q = std::sqrt(dot(s.v, spec.G * s.v));
            return q + dot(spec.drift, s.v);
        }
        case MetricVariant::Conformal:
        case MetricVariant::Rotational:
            return std::sqrt(spec.factor.eval(s.x)) * norm(s.v);
    }
    return 0.0;
}

FDerivs eval_dF(const MetricSpec& spec, const TangentSample& s) {
    require_nonzero(s.v);
    FDerivs d;
    switch (spec.variant) {
        case MetricVariant::FlatNorm: {
            Vec2 Gv = spec.G * s.v;
            double q = std::sqrt(dot(s.v, Gv));
            d.dF_dx = {0.0, 0.0};
            d.dF_dv = Gv / q + spec.drift;
            break;
        }
        case MetricVariant::Conformal:
        case MetricVariant::Rotational: {
            double f = spec.factor.eval(s.x);
            Vec2 gf = spec.factor.grad(s.x);
            double nv = norm(s.v);
            double sf = std::sqrt(f);
            d.dF_dx = gf * (nv / (2.0 * sf));
            d.dF_dv = s.v * (sf / nv);
            break;
        }
    }
    return d;
}

LagrangianData eval_lagrangian(const MetricSpec& spec, const TangentSample& s) {
    LagrangianData out;
    switch (spec.variant) {
        case MetricVariant::FlatNorm: {
            require_nonzero(s.v);
            Vec2 Gv = spec.G * s.v;
            double q = std::sqrt(dot(s.v, Gv));
            double F = q + dot(spec.drift, s.v);
            Vec2 dFdv = Gv / q + spec.drift;
            out.L = 0.5 * F * F;
            out.dL_dx = {0.0, 0.0};
            out.dL_dv = dFdv * F;
            // d2L/dv2 = dF (x) dF + F * (G/q - Gv Gv^T / q^3)
            Mat2 hf = spec.G * (1.0 / q) - outer(Gv, Gv) * (1.0 / (q * q * q));
            out.d2L_dv2 = outer(dFdv, dFdv) + hf * F;
            out.d2L_dvdx = Mat2{};
            break;
        }
        case MetricVariant::Conformal:
        case MetricVariant::Rotational: {
            // L = f(x) |v|^2 / 2, smooth also at v = 0
            double f = spec.factor.eval(s.x);
            Vec2 gf = spec.factor.grad(s.x);
            double v2 = norm2(s.v);
            out.L = 0.5 * f * v2;
            out.dL_dx = gf * (0.5 * v2);
            out.dL_dv = s.v * f;
            out.d2L_dv2 = Mat2::identity() * f;
            out.d2L_dvdx = outer(s.v, gf);
            break;
        }
    }
    return out;
}

ElField eval_el_field(const MetricSpec& spec, const TangentSample& s) {
    ElField out;
    switch (spec.variant) {
        case MetricVariant::FlatNorm:
            // x-independent metric: straight lines
            out.acc = {0.0, 0.0};
            out.dacc_dx = Mat2{};
            out.dacc_dv = Mat2{};
            break;
        case MetricVariant::Conformal:
        case MetricVariant::Rotational: {
            double f = spec.factor.eval(s.x);
            Vec2 gf = spec.factor.grad(s.x);
            Mat2 hf = spec.factor.hess(s.x);
            double v2 = norm2(s.v);
            double gv = dot(gf, s.v);
            Vec2 acc = (gf * (0.5 * v2) - s.v * gv) / f;
            out.acc = acc;
            out.dacc_dx = (hf * (0.5 * v2) - outer(s.v, hf * s.v)) * (1.0 / f) - outer(acc, gf / f);
            out.dacc_dv = (outer(gf, s.v) - outer(s.v, gf) - Mat2::identity() * gv) * (1.0 / f);
            break;
        }
    }
    return out;
}

ValidationReport validate_spec(const MetricSpec& spec) {
    ValidationReport r;
    r.valid = true;
    if (spec.variant == MetricVariant::FlatNorm) {
        double mineig = spd_min_eig(spec.G);
        if (!(spec.G.m01 == spec.G.m10)) {
            r.valid = false;
            r.messages.push_back("matrix not symmetric");
        }
        if (mineig <= 0.0) {
            r.valid = false;
            r.messages.push_back("matrix not positive definite: min eigenvalue " + std::to_string(mineig));
        }
        if (r.valid) {
            double dn = drift_dual_norm(spec.G, spec.drift);
            r.randers_margin = 1.0 - dn;
            if (dn >= 1.0) {
                r.valid = false;
                r.messages.push_back("Randers condition violated: |d|_G = " + std::to_string(dn) + " >= 1");
            }
        }
        r.min_f = mineig;
        r.max_f = spd_max_eig(spec.G);
        r.certified_min_f = mineig;
    } else {
        auto m = spec.factor.global_min();
        r.min_f = m.min_value;
        r.certified_min_f = m.certified_floor;
        r.max_f = spec.factor.constant() + spec.factor.amp_l1();
        if (m.certified_floor <= 0.0) {
            r.valid = false;
            std::ostringstream os;
            os << "conformal factor not certified positive: grid min " << m.min_value
               << ", certified floor " << m.certified_floor;
            r.messages.push_back(os.str());
        }
    }
    return r;
}

MetricBounds metric_bounds(const MetricSpec& spec) {
    MetricBounds b;
    if (spec.variant == MetricVariant::FlatNorm) {
        double lo = std::sqrt(spd_min_eig(spec.G));
        double hi = std::sqrt(spd_max_eig(spec.G));
        double dn = norm(spec.drift);
        b.alpha = lo - dn;  // F(v) >= sqrt(min eig)|v| - |d||v|
        b.beta = hi + dn;
    } else {
        auto m = spec.factor.global_min();
        b.alpha = std::sqrt(std::max(0.0, m.certified_floor));
        b.beta = std::sqrt(spec.factor.constant() + spec.factor.amp_l1());
    }
    return b;
}

std::string metric_hash(const MetricSpec& spec) {
    std::string s = spec.describe();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace snlab
