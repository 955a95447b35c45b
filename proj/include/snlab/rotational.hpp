#pragma once

#include <vector>

#include "snlab/fourier.hpp"
#include "snlab/quadrature.hpp"
#include "snlab/vec2.hpp"

namespace snlab {

// Closed-form stable norm of the rotational metric g = f(x2) <.,.>, used as
// ground truth against the variational pipeline. The unit circle {sigma_g=1}
// is the union of the two curves
//   t -> +- ( I1(t), 1 ) / G(t),   |t| <= sqrt(min f),
// with I1(t) = int_0^1 t/sqrt(f-t^2) dx2 and G(t) = int_0^1 f/sqrt(f-t^2) dx2.
class RotationalOracle {
  public:
    explicit RotationalOracle(FourierSeries f, double quad_tol = 1e-12);

    double min_f() const { return min_f_; }
    double t_star() const { return t_star_; }  // sqrt(min f)

    struct Point {
        Vec2 p;
        double t = 0.0;
        double quad_error = 0.0;
        bool ok = false;
    };

    // point on the upper branch of {sigma=1}; |t| < sqrt(min f)
    Point point(double t) const;

    // g(t) = int_0^1 sqrt(f - t^2), and the identity partner
    // G(t) = g(t) - t g'(t) = int f/sqrt(f - t^2)
    double g_func(double t) const;
    double g_deriv(double t) const;   // g'(t) = -I1(t)
    double G_func(double t) const;

    struct Curve {
        std::vector<Point> upper;  // ordered by t, includes analytic endpoints
        std::vector<Vec2> polyline;  // closed convex polyline, both branches
        bool convex = false;
    };
    Curve unit_circle(int M) const;

    // radial evaluation: sigma(xi) with the e1-axis closed form
    double sigma(Vec2 xi) const;

    // level set {alpha = a} of Mather's alpha function in momentum space:
    // points (b, +-int sqrt(2 a f - b^2)) for b^2 < 2 a min f
    struct AlphaPoint {
        Vec2 eta;
        Vec2 grad_image;  // nabla alpha, lands on {sigma = sqrt(2a)}
        bool ok = false;
    };
    std::vector<AlphaPoint> alpha_level_set(double a, int M) const;

    // int_0^1 sqrt(f - min f): the one-sided tangent slope of {sigma=1} at
    // the +-e1 endpoints (equals D+sigma(e1)[e2] in the single-orbit case)
    double tangent_slope() const { return g_star_; }

  private:
    FourierSeries f_;
    double quad_tol_;
    double min_f_;
    double t_star_;
    double min_loc_;
    double g_star_ = 0.0;
    std::vector<double> split_;  // quadrature split points (minima of f)

    QuadResult integrate_split(const std::function<double(double)>& fn) const;
};

}  // namespace snlab
