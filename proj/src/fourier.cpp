#include "snlab/fourier.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace snlab {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

FourierSeries::FourierSeries(int dim, double constant, std::vector<FourierTerm> terms)
    : dim_(dim), constant_(constant), terms_(std::move(terms)) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("FourierSeries: dim must be 1 or 2");
    if (dim == 1) {
        for (const auto& t : terms_)
            if (t.k1 != 0) throw std::invalid_argument("FourierSeries: 1-D series requires k1 == 0");
    }
}

// Phases are reduced to [0,1) before scaling by 2*pi, so evaluation is exactly
// 1-periodic in each coordinate (integer translations reduce to identical bits).
double FourierSeries::eval(Vec2 x) const {
    Vec2 xr = wrap_torus(x);
    double s = constant_;
    for (const auto& t : terms_) {
        double phase = two_pi * wrap01(t.k1 * xr.x + t.k2 * xr.y);
        s += t.cos_amp * std::cos(phase) + t.sin_amp * std::sin(phase);
    }
    return s;
}

double FourierSeries::eval_grad(Vec2 x, Vec2& g) const {
    Vec2 xr = wrap_torus(x);
    double s = constant_;
    g = {0.0, 0.0};
    for (const auto& t : terms_) {
        double phase = two_pi * wrap01(t.k1 * xr.x + t.k2 * xr.y);
        double cp = std::cos(phase), sp = std::sin(phase);
        s += t.cos_amp * cp + t.sin_amp * sp;
        double d = -t.cos_amp * sp + t.sin_amp * cp;
        g.x += two_pi * t.k1 * d;
        g.y += two_pi * t.k2 * d;
    }
    return s;
}

Vec2 FourierSeries::grad(Vec2 x) const {
    Vec2 xr = wrap_torus(x);
    Vec2 g{0.0, 0.0};
    for (const auto& t : terms_) {
        double phase = two_pi * wrap01(t.k1 * xr.x + t.k2 * xr.y);
        double d = -t.cos_amp * std::sin(phase) + t.sin_amp * std::cos(phase);
        g.x += two_pi * t.k1 * d;
        g.y += two_pi * t.k2 * d;
    }
    return g;
}

Mat2 FourierSeries::hess(Vec2 x) const {
    Vec2 xr = wrap_torus(x);
    Mat2 h;
    for (const auto& t : terms_) {
        double phase = two_pi * wrap01(t.k1 * xr.x + t.k2 * xr.y);
        double dd = -t.cos_amp * std::cos(phase) - t.sin_amp * std::sin(phase);
        double w = two_pi * two_pi * dd;
        h.m00 += w * t.k1 * t.k1;
        h.m01 += w * t.k1 * t.k2;
        h.m10 += w * t.k1 * t.k2;
        h.m11 += w * t.k2 * t.k2;
    }
    return h;
}

double FourierSeries::lip_coeff() const {
    double s = 0.0;
    for (const auto& t : terms_)
        s += std::hypot(double(t.k1), double(t.k2)) * std::hypot(t.cos_amp, t.sin_amp);
    return s;
}

double FourierSeries::amp_l1() const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::hypot(t.cos_amp, t.sin_amp);
    return s;
}

FourierSeries::MinResult FourierSeries::global_min(int grid_n) const {
    const int n1 = (dim_ == 2) ? grid_n : 1;
    const int n2 = grid_n;
    double best = eval({0.0, 0.0});
    Vec2 arg{0.0, 0.0};
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            Vec2 p{double(i) / n1, double(j) / n2};
            double v = eval(p);
            if (v < best) { best = v; arg = p; }
        }
    }
    // local polish: damped Newton on grad f = 0, fall back to gradient steps
    Vec2 p = arg;
    for (int it = 0; it < 60; ++it) {
        Vec2 g = grad(p);
        if (dim_ == 1) g.x = 0.0;
        if (std::abs(g.x) + std::abs(g.y) < 1e-15) break;
        Mat2 h = hess(p);
        Vec2 step;
        bool newton_ok = false;
        if (dim_ == 1) {
            if (h.m11 > 0.0) { step = {0.0, -g.y / h.m11}; newton_ok = true; }
        } else if (h.det() > 0.0 && h.m00 > 0.0) {
            step = h.solve(g) * -1.0;
            newton_ok = true;
        }
        if (!newton_ok) step = g * (-0.25 / (1.0 + lip_coeff()));
        double cur = eval(p);
        double t = 1.0;
        for (int ls = 0; ls < 30; ++ls) {
            Vec2 q = p + step * t;
            if (eval(q) < cur) { p = q; break; }
            t *= 0.5;
        }
        if (t < 1e-9) break;
    }
    double polished = eval(p);
    if (polished > best) { polished = best; p = arg; }
    double h = 1.0 / n2;
    double sup_grad = two_pi * lip_coeff();
    return {polished, p, best - sup_grad * h * 0.5 * (dim_ == 2 ? std::numbers::sqrt2 : 1.0)};
}

}  // namespace snlab
