#include "snlab/geodesic.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace snlab {

namespace {

// augmented state: x (2), v (2), Y (16, row-major), s = int tr A dt
struct AugState {
    std::array<double, 21> y{};
};

Vec2 accel(const MetricSpec& spec, Vec2 x, Vec2 v) {
    return eval_el_field(spec, {x, v}).acc;
}

void rhs_plain(const MetricSpec& spec, const double* y, double* dy) {
    Vec2 x{y[0], y[1]}, v{y[2], y[3]};
    Vec2 a = accel(spec, x, v);
    dy[0] = v.x;
    dy[1] = v.y;
    dy[2] = a.x;
    dy[3] = a.y;
}

// Jacobian blocks of the EL field:  A = [[0, I], [dacc_dx, dacc_dv]]
void rhs_variational(const MetricSpec& spec, const double* y, double* dy) {
    Vec2 x{y[0], y[1]}, v{y[2], y[3]};
    ElField f = eval_el_field(spec, {x, v});
    dy[0] = v.x;
    dy[1] = v.y;
    dy[2] = f.acc.x;
    dy[3] = f.acc.y;
    const double A[4][4] = {
        {0, 0, 1, 0},
        {0, 0, 0, 1},
        {f.dacc_dx.m00, f.dacc_dx.m01, f.dacc_dv.m00, f.dacc_dv.m01},
        {f.dacc_dx.m10, f.dacc_dx.m11, f.dacc_dv.m10, f.dacc_dv.m11}};
    // dY = A Y
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += A[r][k] * y[4 + 4 * k + c];
            dy[4 + 4 * r + c] = s;
        }
    dy[20] = f.dacc_dv.trace();  // tr A
}

template <int DIM, typename Rhs>
void rk4_step(const Rhs& rhs, double* y, double h) {
    double k1[DIM], k2[DIM], k3[DIM], k4[DIM], tmp[DIM];
    rhs(y, k1);
    for (int i = 0; i < DIM; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    rhs(tmp, k2);
    for (int i = 0; i < DIM; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (int i = 0; i < DIM; ++i) tmp[i] = y[i] + h * k3[i];
    rhs(tmp, k4);
    for (int i = 0; i < DIM; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

int step_count(double duration, double step) {
    if (step <= 0.0) throw std::invalid_argument("integration step must be positive");
    return std::max(1, (int)std::llround(std::ceil(duration / step - 1e-12)));
}

}  // namespace

Mat4 Mat4::identity() {
    Mat4 I;
    for (int i = 0; i < 4; ++i) I.m[5 * i] = 1.0;
    return I;
}

double Mat4::det() const {
    Eigen::Matrix4d M;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) M(r, c) = at(r, c);
    return M.determinant();
}

std::vector<GeodesicState> integrate_geodesic(const MetricSpec& spec, GeodesicState initial,
                                              double duration, double step) {
    if (initial.v.x == 0.0 && initial.v.y == 0.0)
        throw std::domain_error("integrate_geodesic: v != 0 required");
    const int n = step_count(duration, step);
    const double h = duration / n;
    std::vector<GeodesicState> out;
    out.reserve(n + 1);
    double y[4] = {initial.x.x, initial.x.y, initial.v.x, initial.v.y};
    out.push_back(initial);
    auto rhs = [&](const double* yy, double* dy) { rhs_plain(spec, yy, dy); };
    for (int i = 0; i < n; ++i) {
        rk4_step<4>(rhs, y, h);
        out.push_back({{y[0], y[1]}, {y[2], y[3]}, initial.t + (i + 1) * h});
    }
    return out;
}

VariationalResult integrate_variational(const MetricSpec& spec, GeodesicState initial,
                                        double duration, double step) {
    if (initial.v.x == 0.0 && initial.v.y == 0.0)
        throw std::domain_error("integrate_variational: v != 0 required");
    const int n = step_count(duration, step);
    const double h = duration / n;
    AugState s;
    s.y[0] = initial.x.x;
    s.y[1] = initial.x.y;
    s.y[2] = initial.v.x;
    s.y[3] = initial.v.y;
    for (int i = 0; i < 4; ++i) s.y[4 + 5 * i] = 1.0;
    auto rhs = [&](const double* yy, double* dy) { rhs_variational(spec, yy, dy); };
    for (int i = 0; i < n; ++i) rk4_step<21>(rhs, s.y.data(), h);
    VariationalResult out;
    out.endpoint = {{s.y[0], s.y[1]}, {s.y[2], s.y[3]}, initial.t + duration};
    for (int i = 0; i < 16; ++i) out.fundamental.m[i] = s.y[4 + i];
    out.liouville_logdet = s.y[20];
    return out;
}

Mat4 linearize_along(const MetricSpec& spec, const std::vector<GeodesicState>& trajectory) {
    if (trajectory.size() < 2) throw std::invalid_argument("linearize_along: empty trajectory");
    const double duration = trajectory.back().t - trajectory.front().t;
    const double step = trajectory[1].t - trajectory[0].t;
    return integrate_variational(spec, trajectory.front(), duration, step).fundamental;
}

namespace {

// One Gauss-Newton step of periodic-orbit shooting: unknowns (x0, v0, T),
// residuals (x(T)-x0-shift, v(T)-v0, F(x0,v0)-1, phase gauge).
bool shoot_refine(const MetricSpec& spec, GeodesicState& init, Vec2 shift, double& period,
                  double step, int iters, double tol) {
    Vec2 tau = unit(init.v);  // phase gauge direction
    Vec2 x_ref = init.x;
    for (int it = 0; it < iters; ++it) {
        VariationalResult var = integrate_variational(spec, init, period, step);
        Vec2 cx = var.endpoint.x - init.x - shift;
        Vec2 cv = var.endpoint.v - init.v;
        double cF = eval_F(spec, {init.x, init.v}) - 1.0;
        double cg = dot(init.x - x_ref, tau);
        double res = std::max({std::abs(cx.x), std::abs(cx.y), std::abs(cv.x), std::abs(cv.y),
                               std::abs(cF)});
        if (res < tol) return true;

        Eigen::Matrix<double, 6, 5> J = Eigen::Matrix<double, 6, 5>::Zero();
        // d(endpoint)/d(init) - identity-block for the defect
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) J(r, c) = var.fundamental.at(r, c) - (r == c ? 1.0 : 0.0);
        // d/dT = flow field at endpoint
        Vec2 a_end = accel(spec, var.endpoint.x, var.endpoint.v);
        J(0, 4) = var.endpoint.v.x;
        J(1, 4) = var.endpoint.v.y;
        J(2, 4) = a_end.x;
        J(3, 4) = a_end.y;
        FDerivs dF = eval_dF(spec, {init.x, init.v});
        J(4, 0) = dF.dF_dx.x;
        J(4, 1) = dF.dF_dx.y;
        J(4, 2) = dF.dF_dv.x;
        J(4, 3) = dF.dF_dv.y;
        J(5, 0) = tau.x;
        J(5, 1) = tau.y;

        Eigen::Matrix<double, 6, 1> r6;
        r6 << cx.x, cx.y, cv.x, cv.y, cF, cg;
        Eigen::Matrix<double, 5, 1> delta =
            J.colPivHouseholderQr().solve(-r6);
        init.x += Vec2{delta(0), delta(1)};
        init.v += Vec2{delta(2), delta(3)};
        period += delta(4);
        if (period <= 0.0) return false;
    }
    return false;
}

}  // namespace

FloquetReport monodromy_of_state(const MetricSpec& spec, GeodesicState init, Vec2 shift,
                                 double period, const MonodromyOpts& opts) {
    FloquetReport rep;
    rep.period = period;

    if (opts.refine)
        shoot_refine(spec, init, shift, rep.period, opts.step, opts.refine_iters,
                     1e-12);

    VariationalResult var = integrate_variational(spec, init, rep.period, opts.step);
    Vec2 cx = var.endpoint.x - init.x - shift;
    Vec2 cv = var.endpoint.v - init.v;
    rep.closure_defect = std::max({std::abs(cx.x), std::abs(cx.y), std::abs(cv.x), std::abs(cv.y)});
    if (rep.closure_defect > opts.closure_tol) {
        rep.note = "orbit closure defect above tolerance";
        return rep;
    }

    Eigen::Matrix4d M;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) M(r, c) = var.fundamental.at(r, c);
    rep.det_residual = std::abs(M.determinant() - 1.0);

    Eigen::EigenSolver<Eigen::Matrix4d> es(M);
    std::array<std::complex<double>, 4> eig;
    for (int i = 0; i < 4; ++i) eig[i] = es.eigenvalues()[i];
    // discard the two eigenvalues closest to 1 (flow direction + energy)
    std::array<int, 4> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(eig[a] - 1.0) < std::abs(eig[b] - 1.0);
    });
    rep.eigenvalues = {eig[idx[0]], eig[idx[1]], eig[idx[2]], eig[idx[3]]};
    rep.unit_pair_defect = std::max(std::abs(eig[idx[0]] - 1.0), std::abs(eig[idx[1]] - 1.0));
    std::complex<double> m1 = eig[idx[2]], m2 = eig[idx[3]];
    rep.mu = std::abs(m1) >= std::abs(m2) ? m1 : m2;

    const double scale = std::max(1.0, std::abs(rep.mu));
    if (rep.unit_pair_defect > opts.pattern_tol * scale ||
        std::abs(m1 * m2 - 1.0) > opts.pattern_tol * scale) {
        rep.note = "eigenvalue pattern is not {1, 1, mu, 1/mu}";
        return rep;
    }
    rep.valid = true;

    const double abs_mu = std::abs(rep.mu);
    const bool real_mu = std::abs(rep.mu.imag()) <= opts.real_tol * abs_mu;
    if (real_mu && std::abs(rep.mu.real()) > 1.0 + opts.hyperbolic_threshold) {
        rep.classification = OrbitClass::Hyperbolic;
        rep.lambda_orbit = std::log(abs_mu) / rep.period;
    } else if (!real_mu && std::abs(abs_mu - 1.0) <= opts.hyperbolic_threshold) {
        rep.classification = OrbitClass::Elliptic;
    } else if (real_mu && std::abs(abs_mu - 1.0) <= opts.hyperbolic_threshold) {
        rep.classification = OrbitClass::Parabolic;
    } else {
        rep.classification = OrbitClass::Degenerate;
        rep.valid = false;
        rep.note = "multiplier between parabolic and hyperbolic thresholds";
    }
    return rep;
}

FloquetReport monodromy_of_closed(const MetricSpec& spec, const MinimizerResult& orbit,
                                  const MonodromyOpts& opts) {
    const DiscreteLoop& loop = orbit.loop;
    const int N = loop.n();
    if (N < 4) throw std::invalid_argument("monodromy_of_closed: loop too coarse");
    // initial condition from the discrete loop: point 0, central-difference
    // tangent normalized to unit F-speed; period = arc length
    Vec2 x0 = loop.pts[0];
    Vec2 zv = loop.cls.vec();
    Vec2 xp = loop.pts[1];
    Vec2 xm = loop.pts[N - 1] - zv;
    Vec2 dir = xp - xm;
    double F = eval_F(spec, {x0, dir});
    GeodesicState init{x0, dir / F, 0.0};
    double period = orbit.sigma_extrap > 0 ? orbit.sigma_extrap : orbit.sigma;
    return monodromy_of_state(spec, init, zv, period, opts);
}

}  // namespace snlab
