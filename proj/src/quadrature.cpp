#include "snlab/quadrature.hpp"

#include <cmath>

namespace snlab {

namespace {

// G7,K15 nodes/weights on [-1,1]; nodes[0..6] are the Gauss points.
constexpr double kNodes[15] = {
    0.0,
    -0.405845151377397166906606412076961, 0.405845151377397166906606412076961,
    -0.741531185599394439863864773280788, 0.741531185599394439863864773280788,
    -0.949107912342758524526189684047851, 0.949107912342758524526189684047851,
    -0.207784955007898467600689403773245, 0.207784955007898467600689403773245,
    -0.586087235467691130294144838258730, 0.586087235467691130294144838258730,
    -0.864864423359769072789712788640926, 0.864864423359769072789712788640926,
    -0.991455371120812639206854697526329, 0.991455371120812639206854697526329};

constexpr double kWg[7] = {
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.381830050505118944950369775488975,
    0.279705391489276667901467771423780, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082, 0.129484966168869693270611432679082};

constexpr double kWk[15] = {
    0.209482141084727828012999174891714,
    0.190350578064785409913256402421014, 0.190350578064785409913256402421014,
    0.140653259715525918745189590510238, 0.140653259715525918745189590510238,
    0.063092092629978553290700663189204, 0.063092092629978553290700663189204,
    0.204432940075298892414161999234649, 0.204432940075298892414161999234649,
    0.169004726639267902826583426598550, 0.169004726639267902826583426598550,
    0.104790010322250183839876322541518, 0.104790010322250183839876322541518,
    0.022935322010529224963732008058970, 0.022935322010529224963732008058970};

struct Panel {
    double value, error;
};

Panel gk15(const std::function<double(double)>& f, double a, double b, int& evals) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fg = 0.0, fk = 0.0;
    for (int i = 0; i < 15; ++i) {
        double y = f(c + h * kNodes[i]);
        if (i < 7) fg += kWg[i] * y;
        fk += kWk[i] * y;
    }
    evals += 15;
    double value = fk * h;
    double err = std::abs((fk - fg) * h);
    return {value, err};
}

void adapt(const std::function<double(double)>& f, double a, double b, double tol,
           int depth, int max_depth, QuadResult& out) {
    Panel p = gk15(f, a, b, out.evaluations);
    if (p.error <= tol || depth >= max_depth) {
        out.value += p.value;
        out.error += p.error;
        if (depth >= max_depth && p.error > tol) out.converged = false;
        return;
    }
    double m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth + 1, max_depth, out);
    adapt(f, m, b, 0.5 * tol, depth + 1, max_depth, out);
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol, int max_depth) {
    QuadResult out;
    out.converged = true;
    int dummy = 0;
    Panel rough = gk15(f, a, b, dummy);
    double tol = std::max(abs_tol, rel_tol * std::abs(rough.value));
    adapt(f, a, b, tol, 0, max_depth, out);
    return out;
}

}  // namespace snlab
