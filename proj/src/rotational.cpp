#include "snlab/rotational.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace snlab {

RotationalOracle::RotationalOracle(FourierSeries f, double quad_tol)
    : f_(std::move(f)), quad_tol_(quad_tol) {
    if (f_.dim() != 1) throw std::invalid_argument("RotationalOracle: f must be 1-D");
    auto m = f_.global_min(1024);
    if (m.certified_floor <= 0.0)
        throw std::invalid_argument("RotationalOracle: f must be positive");
    min_f_ = m.min_value;
    min_loc_ = wrap01(m.argmin.y);
    t_star_ = std::sqrt(min_f_);
    g_star_ = 0.0;  // set after split points exist

    // split the quadrature interval at local minima of f (all roots of f' with
    // f'' > 0); the integrands concentrate there as |t| -> t_star
    const int scan = 2048;
    split_.push_back(0.0);
    double prev = f_.deriv1(0.0);
    for (int i = 1; i <= scan; ++i) {
        double s = double(i) / scan;
        double d = f_.deriv1(s);
        if (prev < 0.0 && d >= 0.0) {
            // bisection polish of the minimum
            double lo = double(i - 1) / scan, hi = s;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                if (f_.deriv1(mid) < 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            split_.push_back(0.5 * (lo + hi));
        }
        prev = d;
    }
    split_.push_back(1.0);
    std::sort(split_.begin(), split_.end());

    // one-sided tangent slope of {sigma=1} at the e1 endpoints:
    //   G(t) - t_star I1(t) -> g(t_star) = int sqrt(f - min f)
    g_star_ = integrate_split([&](double s) {
                  return std::sqrt(std::max(0.0, f_.eval1(s) - min_f_));
              }).value;
}

QuadResult RotationalOracle::integrate_split(const std::function<double(double)>& fn) const {
    QuadResult total;
    total.converged = true;
    for (size_t i = 0; i + 1 < split_.size(); ++i) {
        QuadResult r = integrate(fn, split_[i], split_[i + 1], quad_tol_, quad_tol_);
        total.value += r.value;
        total.error += r.error;
        total.evaluations += r.evaluations;
        total.converged = total.converged && r.converged;
    }
    return total;
}

double RotationalOracle::g_func(double t) const {
    const double t2 = t * t;
    return integrate_split([&](double s) { return std::sqrt(std::max(0.0, f_.eval1(s) - t2)); }).value;
}

double RotationalOracle::g_deriv(double t) const {
    const double t2 = t * t;
    return -integrate_split([&](double s) { return t / std::sqrt(std::max(1e-300, f_.eval1(s) - t2)); })
                .value;
}

double RotationalOracle::G_func(double t) const {
    const double t2 = t * t;
    return integrate_split([&](double s) {
               double fv = f_.eval1(s);
               return fv / std::sqrt(std::max(1e-300, fv - t2));
           })
        .value;
}

RotationalOracle::Point RotationalOracle::point(double t) const {
    if (std::abs(t) >= t_star_)
        throw std::domain_error("oracle point: |t| < sqrt(min f) required");
    const double t2 = t * t;
    auto I1 = integrate_split(
        [&](double s) { return t / std::sqrt(std::max(1e-300, f_.eval1(s) - t2)); });
    auto G = integrate_split([&](double s) {
        double fv = f_.eval1(s);
        return fv / std::sqrt(std::max(1e-300, fv - t2));
    });
    Point out;
    out.t = t;
    out.p = Vec2{I1.value, 1.0} / G.value;
    out.quad_error = (I1.error + G.error) / std::max(1.0, G.value);
    out.ok = I1.converged && G.converged;
    return out;
}

RotationalOracle::Curve RotationalOracle::unit_circle(int M) const {
    if (M < 32) throw std::invalid_argument("unit_circle: M >= 32");
    Curve c;
    c.upper.reserve(M + 2);
    // analytic branch endpoints (the second component vanishes there)
    Point left;
    left.t = -t_star_;
    left.p = {-1.0 / t_star_, 0.0};
    left.ok = true;
    c.upper.push_back(left);
    for (int j = 0; j < M; ++j) {
        // cosine spacing clusters samples toward the endpoints
        double u = std::cos(double(M - j) / (M + 1) * std::numbers::pi);
        double t = t_star_ * u * (1.0 - 1e-12);
        c.upper.push_back(point(t));
    }
    Point right;
    right.t = t_star_;
    right.p = {1.0 / t_star_, 0.0};
    right.ok = true;
    c.upper.push_back(right);

    // closed polyline: upper branch then its central reflection
    for (const auto& pt : c.upper) c.polyline.push_back(pt.p);
    for (size_t j = c.upper.size() - 2; j >= 1; --j) c.polyline.push_back(-c.upper[j].p);

    // convexity: all consecutive cross products one sign (counterclockwise)
    c.convex = true;
    const int n = static_cast<int>(c.polyline.size());
    for (int j = 0; j < n; ++j) {
        Vec2 a = c.polyline[j];
        Vec2 b = c.polyline[(j + 1) % n];
        Vec2 d = c.polyline[(j + 2) % n];
        if (cross(b - a, d - b) < -1e-12) c.convex = false;
    }
    return c;
}

double RotationalOracle::sigma(Vec2 xi) const {
    if (xi.x == 0.0 && xi.y == 0.0) throw std::domain_error("oracle sigma: xi != 0");
    if (xi.y == 0.0) return t_star_ * std::abs(xi.x);  // e1-axis closed form
    double sgn = xi.y > 0.0 ? 1.0 : -1.0;
    Vec2 q = xi * sgn;  // upper branch
    // point(t) = (I1, 1)/G has slope I1(t) monotone increasing in t; find t
    // with I1(t) = q.x / q.y by bisection
    const double target = q.x / q.y;
    double lo = -t_star_ * (1.0 - 1e-15), hi = t_star_ * (1.0 - 1e-15);
    const double t2s = [&](double t) { return t * t; };
    auto I1 = [&](double t) {
        return integrate_split(
                   [&](double s) { return t / std::sqrt(std::max(1e-300, f_.eval1(s) - t2s(t))); })
            .value;
    };
    // Beyond the numerically reachable part of the branch the curve hugs its
    // one-sided tangent to far below double precision; use the tangent value.
    if (I1(hi) < target) return t_star_ * q.x + g_star_ * q.y;
    if (I1(lo) > target) return -t_star_ * q.x + g_star_ * q.y;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (I1(mid) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-16 * t_star_) break;
    }
    double t = 0.5 * (lo + hi);
    return q.y * G_func(t);  // q = sigma * (I1,1)/G  =>  sigma = q.y * G
}

std::vector<RotationalOracle::AlphaPoint> RotationalOracle::alpha_level_set(double a, int M) const {
    if (a <= 0.0) throw std::domain_error("alpha_level_set: a > 0");
    std::vector<AlphaPoint> out;
    const double bmax = std::sqrt(2.0 * a * min_f_);
    for (int j = 0; j < M; ++j) {
        double b = -bmax + (2.0 * bmax) * (j + 0.5) / M;
        if (b * b >= 2.0 * a * min_f_) continue;  // no invariant graph there
        AlphaPoint ap;
        auto up = integrate_split(
            [&](double s) { return std::sqrt(std::max(0.0, 2.0 * a * f_.eval1(s) - b * b)); });
        ap.eta = {b, up.value};
        // gradient image: scaling to a = 1/2 gives the sigma = 1 circle, then
        // scale back by sqrt(2a)
        double scale = std::sqrt(2.0 * a);
        double t = b / scale;
        double G = G_func(t);
        double gp = g_deriv(t);
        ap.grad_image = Vec2{-gp, 1.0} / G * scale;
        ap.ok = up.converged;
        out.push_back(ap);
    }
    return out;
}

}  // namespace snlab
