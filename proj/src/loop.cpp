#include "snlab/loop.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace snlab {

namespace {

constexpr int kBlock = 1024;          // fixed reduction block; keeps sums
                                      // bitwise identical for any thread count
constexpr int kParallelCutoff = 4096;

struct SegEval {
    double L;
    Vec2 Lx;
    Vec2 Lv;
};

// Lagrangian of one segment: L(mid, v) with v = N*dx.
inline SegEval seg_lagrangian(const MetricSpec& spec, Vec2 mid, Vec2 v) {
    SegEval e;
    switch (spec.variant) {
        case MetricVariant::FlatNorm: {
            Vec2 Gv = spec.G * v;
            double q = std::sqrt(dot(v, Gv));
            double F = q + dot(spec.drift, v);
            e.L = 0.5 * F * F;
            e.Lx = {0.0, 0.0};
            e.Lv = (Gv / q + spec.drift) * F;
            break;
        }
        case MetricVariant::Conformal:
        case MetricVariant::Rotational: {
            Vec2 gf;
            double f = spec.factor.eval_grad(mid, gf);
            double v2 = norm2(v);
            e.L = 0.5 * f * v2;
            e.Lx = gf * (0.5 * v2);
            e.Lv = v * f;
            break;
        }
    }
    return e;
}

inline double seg_length(const MetricSpec& spec, Vec2 mid, Vec2 dx) {
    switch (spec.variant) {
        case MetricVariant::FlatNorm: {
            double q = std::sqrt(dot(dx, spec.G * dx));
            return q + dot(spec.drift, dx);
        }
        case MetricVariant::Conformal:
        case MetricVariant::Rotational:
            return std::sqrt(spec.factor.eval(mid)) * norm(dx);
    }
    return 0.0;
}

inline void check_segment(Vec2 dx) {
    if (dx.x == 0.0 && dx.y == 0.0)
        throw std::domain_error("degenerate segment (consecutive points equal)");
}

// Closed-curve geometry: nseg segments over pts with closure pts[0] + zshift.
// Open-path geometry: nseg = pts.size()-1 and zshift ignored.
struct Geometry {
    const Vec2* pts;
    int npts;
    int nseg;
    bool closed;
    Vec2 zshift;

    inline void segment(int i, Vec2& a, Vec2& b) const {
        a = pts[i];
        b = (i + 1 < npts) ? pts[i + 1] : (closed ? pts[0] + zshift : pts[npts - 1]);
    }
};

Geometry loop_geom(const std::vector<Vec2>& pts, LatticeVector cls) {
    return {pts.data(), (int)pts.size(), (int)pts.size(), true, cls.vec()};
}

Geometry path_geom(const std::vector<Vec2>& pts) {
    return {pts.data(), (int)pts.size(), (int)pts.size() - 1, false, {0, 0}};
}

template <typename Fn>
double blocked_sum(int nseg, bool parallel, Fn&& per_segment) {
    const int nblocks = (nseg + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel && nseg >= kParallelCutoff)
#endif
    for (int b = 0; b < nblocks; ++b) {
        double s = 0.0;
        const int lo = b * kBlock, hi = std::min(nseg, lo + kBlock);
        for (int i = lo; i < hi; ++i) s += per_segment(i);
        partial[b] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

double energy_impl(const MetricSpec& spec, const Geometry& g, bool parallel) {
    const double M = g.nseg;
    return blocked_sum(g.nseg, parallel, [&](int i) {
        Vec2 a, b;
        g.segment(i, a, b);
        Vec2 dx = b - a;
        check_segment(dx);
        return seg_lagrangian(spec, (a + b) * 0.5, dx * M).L / M;
    });
}

double length_impl(const MetricSpec& spec, const Geometry& g, bool parallel) {
    return blocked_sum(g.nseg, parallel, [&](int i) {
        Vec2 a, b;
        g.segment(i, a, b);
        Vec2 dx = b - a;
        check_segment(dx);
        return seg_length(spec, (a + b) * 0.5, dx);
    });
}

// Energy and dE/dx. For closed curves every point is free; for open paths the
// endpoint gradients are zeroed (they are held fixed).
double energy_grad_impl(const MetricSpec& spec, const Geometry& g, std::vector<Vec2>& grad,
                        std::vector<Vec2>& lo_buf, std::vector<Vec2>& hi_buf, bool parallel) {
    const int S = g.nseg;
    const double M = S;
    lo_buf.resize(S);
    hi_buf.resize(S);
    grad.resize(g.npts);

    const int nblocks = (S + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel && S >= kParallelCutoff)
#endif
    for (int b = 0; b < nblocks; ++b) {
        double s = 0.0;
        const int blo = b * kBlock, bhi = std::min(S, blo + kBlock);
        for (int i = blo; i < bhi; ++i) {
            Vec2 a, bp;
            g.segment(i, a, bp);
            Vec2 dx = bp - a;
            check_segment(dx);
            SegEval e = seg_lagrangian(spec, (a + bp) * 0.5, dx * M);
            s += e.L / M;
            Vec2 half_lx = e.Lx * (0.5 / M);
            lo_buf[i] = half_lx - e.Lv;
            hi_buf[i] = half_lx + e.Lv;
        }
        partial[b] = s;
    }
    double E = 0.0;
    for (double p : partial) E += p;

    if (g.closed) {
        const int N = g.npts;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel && N >= kParallelCutoff)
#endif
        for (int j = 0; j < N; ++j) grad[j] = lo_buf[j] + hi_buf[(j + N - 1) % N];
    } else {
        grad[0] = {0, 0};
        grad[g.npts - 1] = {0, 0};
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel && S >= kParallelCutoff)
#endif
        for (int j = 1; j < g.npts - 1; ++j) grad[j] = lo_buf[j] + hi_buf[j - 1];
    }
    return E;
}

// ---- tridiagonal smoothing preconditioner ----------------------------------

void thomas_solve(const std::vector<double>& diag, std::vector<double>& rhs_x,
                  std::vector<double>& rhs_y, std::vector<double>& cp) {
    const int n = static_cast<int>(diag.size());
    cp.resize(n);
    double beta = diag[0];
    rhs_x[0] /= beta;
    rhs_y[0] /= beta;
    for (int i = 1; i < n; ++i) {
        cp[i] = -1.0 / beta;
        beta = diag[i] + cp[i];
        rhs_x[i] = (rhs_x[i] + rhs_x[i - 1]) / beta;
        rhs_y[i] = (rhs_y[i] + rhs_y[i - 1]) / beta;
    }
    for (int i = n - 2; i >= 0; --i) {
        rhs_x[i] -= cp[i + 1] * rhs_x[i + 1];
        rhs_y[i] -= cp[i + 1] * rhs_y[i + 1];
    }
}

// M ~ discrete Laplacian (+ small shift when periodic); periodic corners via
// the Sherman-Morrison rank-1 correction.
class TridiagPreconditioner {
  public:
    void setup(int n, bool periodic) {
        n_ = n;
        periodic_ = periodic;
        double eps = periodic ? 48.0 / (double(n) * n) : 0.0;
        diag_.assign(n, 2.0 + eps);
        if (periodic) {
            diag_[0] = 1.0 + eps;
            diag_[n - 1] = 1.0 + eps;
            qx_.assign(n, 0.0);
            qx_[0] = 1.0;
            qx_[n - 1] = -1.0;
            std::vector<double> dummy(qx_);
            thomas_solve(diag_, qx_, dummy, cp_);
            denom_ = 1.0 + (qx_[0] - qx_[n - 1]);  // 1 + v^T q
        }
    }

    void apply(const std::vector<Vec2>& r, std::vector<Vec2>& y) {
        const int n = n_;
        rx_.resize(n);
        ry_.resize(n);
        for (int i = 0; i < n; ++i) {
            rx_[i] = r[i].x;
            ry_[i] = r[i].y;
        }
        thomas_solve(diag_, rx_, ry_, cp_);
        if (periodic_) {
            double fx = (rx_[0] - rx_[n - 1]) / denom_;
            double fy = (ry_[0] - ry_[n - 1]) / denom_;
            for (int i = 0; i < n; ++i) {
                rx_[i] -= fx * qx_[i];
                ry_[i] -= fy * qx_[i];
            }
        }
        y.resize(n);
        for (int i = 0; i < n; ++i) y[i] = {rx_[i], ry_[i]};
    }

  private:
    int n_ = 0;
    bool periodic_ = true;
    double denom_ = 1.0;
    std::vector<double> diag_, cp_, qx_, rx_, ry_;
};

// ---- preconditioned Polak-Ribiere CG with Armijo backtracking --------------

struct CgResult {
    double gnorm = 0.0;
    int iterations = 0;
    bool converged = false;
};

template <typename EvalFn>
CgResult cg_minimize(EvalFn&& eval, std::vector<Vec2>& X, int free_lo, int free_hi,
                     TridiagPreconditioner* precond, double tol_grad, int max_iter) {
    const size_t n = X.size();
    std::vector<Vec2> g(n), h(n), dir(n), g_prev, h_prev, trial(n), g_trial(n);
    CgResult out;
    double E = eval(X, g);
    double step = 1.0;
    double gh_prev = 0.0;

    auto free_inf_norm = [&](const std::vector<Vec2>& v) {
        double m = 0.0;
        for (int i = free_lo; i < free_hi; ++i)
            m = std::max(m, std::max(std::abs(v[i].x), std::abs(v[i].y)));
        return m;
    };

    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        out.gnorm = free_inf_norm(g);
        if (out.gnorm <= tol_grad) {
            out.converged = true;
            return out;
        }
        if (precond)
            precond->apply(g, h);
        else
            h = g;
        for (int i = 0; i < free_lo; ++i) h[i] = {0, 0};
        for (int i = free_hi; i < (int)n; ++i) h[i] = {0, 0};

        double gh = 0.0;
        for (int i = free_lo; i < free_hi; ++i) gh += dot(g[i], h[i]);
        double beta = 0.0;
        if (!g_prev.empty() && gh_prev > 0.0) {
            double num = 0.0;
            for (int i = free_lo; i < free_hi; ++i) num += dot(g[i], h[i] - h_prev[i]);
            beta = std::max(0.0, num / gh_prev);
        }
        if (g_prev.empty() || beta == 0.0) {
            for (size_t i = 0; i < n; ++i) dir[i] = -h[i];
        } else {
            for (size_t i = 0; i < n; ++i) dir[i] = -h[i] + dir[i] * beta;
        }
        double slope = 0.0;
        for (int i = free_lo; i < free_hi; ++i) slope += dot(g[i], dir[i]);
        if (slope >= 0.0) {
            for (size_t i = 0; i < n; ++i) dir[i] = -h[i];
            slope = -gh;
        }
        g_prev = g;
        h_prev = h;
        gh_prev = gh;

        double t = std::min(step * 2.0, 1e8);
        bool accepted = false;
        for (int ls = 0; ls < 64; ++ls) {
            for (size_t i = 0; i < n; ++i) trial[i] = X[i] + dir[i] * t;
            double Et;
            try {
                Et = eval(trial, g_trial);
            } catch (const std::domain_error&) {
                t *= 0.25;
                continue;
            }
            if (Et <= E + 1e-4 * t * slope) {
                X.swap(trial);
                g.swap(g_trial);
                E = Et;
                step = t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            out.gnorm = free_inf_norm(g);
            out.converged = out.gnorm <= tol_grad * 4.0;
            return out;
        }
    }
    out.gnorm = free_inf_norm(g);
    out.converged = false;
    return out;
}

DiscreteLoop refine_double(const DiscreteLoop& loop) {
    const int N = loop.n();
    DiscreteLoop out;
    out.cls = loop.cls;
    out.pts.resize(2 * N);
    const Vec2 zv = loop.cls.vec();
    for (int i = 0; i < N; ++i) {
        Vec2 a = loop.pts[i];
        Vec2 b = (i + 1 < N) ? loop.pts[i + 1] : loop.pts[0] + zv;
        out.pts[2 * i] = a;
        out.pts[2 * i + 1] = (a + b) * 0.5;
    }
    return out;
}

}  // namespace

DiscreteLoop init_loop(LatticeVector z, Vec2 offset, int N) {
    if (z.is_zero()) throw std::invalid_argument("init_loop: z must be nonzero");
    if (N < 2) throw std::invalid_argument("init_loop: N >= 2");
    DiscreteLoop loop;
    loop.cls = z;
    loop.pts.resize(N);
    Vec2 zv = z.vec();
    for (int i = 0; i < N; ++i) loop.pts[i] = offset + zv * (double(i) / N);
    return loop;
}

namespace kernels {

double loop_energy_serial(const MetricSpec& s, const DiscreteLoop& l) {
    return energy_impl(s, loop_geom(l.pts, l.cls), false);
}
double loop_energy_parallel(const MetricSpec& s, const DiscreteLoop& l) {
    return energy_impl(s, loop_geom(l.pts, l.cls), true);
}
double loop_length_serial(const MetricSpec& s, const DiscreteLoop& l) {
    return length_impl(s, loop_geom(l.pts, l.cls), false);
}
double loop_length_parallel(const MetricSpec& s, const DiscreteLoop& l) {
    return length_impl(s, loop_geom(l.pts, l.cls), true);
}
double loop_energy_grad_serial(const MetricSpec& s, const DiscreteLoop& l, std::vector<Vec2>& g) {
    std::vector<Vec2> lo, hi;
    return energy_grad_impl(s, loop_geom(l.pts, l.cls), g, lo, hi, false);
}
double loop_energy_grad_parallel(const MetricSpec& s, const DiscreteLoop& l, std::vector<Vec2>& g) {
    std::vector<Vec2> lo, hi;
    return energy_grad_impl(s, loop_geom(l.pts, l.cls), g, lo, hi, true);
}

double path_energy(const MetricSpec& s, const DiscretePath& p, bool parallel) {
    return energy_impl(s, path_geom(p.pts), parallel);
}
double path_length(const MetricSpec& s, const DiscretePath& p, bool parallel) {
    return length_impl(s, path_geom(p.pts), parallel);
}
double path_energy_grad(const MetricSpec& s, const DiscretePath& p, std::vector<Vec2>& g,
                        bool parallel) {
    std::vector<Vec2> lo, hi;
    return energy_grad_impl(s, path_geom(p.pts), g, lo, hi, parallel);
}

}  // namespace kernels

double discrete_energy(const MetricSpec& s, const DiscreteLoop& l) {
    return kernels::loop_energy_parallel(s, l);
}

double discrete_length(const MetricSpec& s, const DiscreteLoop& l) {
    return kernels::loop_length_parallel(s, l);
}

MinimizerResult minimize_loop(const MetricSpec& spec, DiscreteLoop initial, const MinimizeOpts& opts) {
    if (initial.cls.is_zero()) throw std::invalid_argument("minimize_loop: zero class");
    MinimizerResult res;
    DiscreteLoop cur = std::move(initial);

    const double zlen = cur.cls.len();
    const double tol = opts.tol_grad * std::max(1.0, zlen);
    int total_iters = 0;
    bool all_converged = true;

    std::vector<Vec2> lo_buf, hi_buf;
    for (int level = 0; level < opts.levels; ++level) {
        if (level > 0) cur = refine_double(cur);
        TridiagPreconditioner pre;
        if (opts.precondition) pre.setup(cur.n(), true);
        const LatticeVector cls = cur.cls;
        auto eval = [&](const std::vector<Vec2>& pts, std::vector<Vec2>& g) {
            return energy_grad_impl(spec, loop_geom(pts, cls), g, lo_buf, hi_buf, opts.parallel);
        };
        CgResult cg = cg_minimize(eval, cur.pts, 0, cur.n(),
                                  opts.precondition ? &pre : nullptr, tol, opts.max_iter);
        total_iters += cg.iterations;
        all_converged = all_converged && cg.converged;
        res.grad_norm = cg.gnorm;

        double sigma_N = length_impl(spec, loop_geom(cur.pts, cls), opts.parallel);
        res.history.emplace_back(cur.n(), sigma_N);
        if (res.history.size() >= 2) {
            double prev = res.history[res.history.size() - 2].second;
            if (std::abs(sigma_N - prev) < opts.tol_refine * std::max(1.0, std::abs(sigma_N))) break;
        }
    }

    res.loop = std::move(cur);
    res.N = res.loop.n();
    res.sigma = res.history.back().second;
    res.converged = all_converged;
    res.iterations = total_iters;

    // Richardson extrapolation over the N-doubling history; midpoint-rule
    // errors are cleanly O(N^-2), flat metrics are exact at every level.
    const size_t H = res.history.size();
    double sig = res.sigma;
    double extrap = sig, bar;
    const double floor_bar = 4e-14 * (1.0 + std::abs(sig));
    if (H >= 2) {
        double s1 = res.history[H - 2].second, s2 = res.history[H - 1].second;
        double d = s2 - s1;
        if (std::abs(d) <= 4e-14 * std::max(1.0, std::abs(s2))) {
            extrap = s2;
            bar = floor_bar;
        } else {
            double r1 = s2 + d / 3.0;
            if (H >= 3) {
                double s0 = res.history[H - 3].second;
                double r0 = s1 + (s1 - s0) / 3.0;
                double ratio = (s1 - s0) / d;
                if (ratio > 3.2 && ratio < 4.8) {
                    extrap = r1 + (r1 - r0) / 15.0;
                    bar = std::max(std::abs(extrap - r1) * 0.5, floor_bar);
                } else {
                    extrap = r1;
                    bar = std::max(std::abs(r1 - s2) * 0.25, floor_bar);
                }
            } else {
                extrap = r1;
                bar = std::max(std::abs(d) * 0.25, floor_bar);
            }
        }
    } else {
        bar = std::max(1e-8 * std::abs(sig), floor_bar);
    }
    if (!res.converged) bar = std::max(bar, std::abs(res.sigma) * 1e-6);
    res.sigma_extrap = extrap;
    res.error_bar = bar;
    return res;
}

PathResult minimize_path(const MetricSpec& spec, DiscretePath initial, const MinimizeOpts& opts) {
    if (initial.pts.size() < 3) throw std::invalid_argument("minimize_path: need at least 3 points");
    PathResult res;
    DiscretePath cur = std::move(initial);
    TridiagPreconditioner pre;
    if (opts.precondition) pre.setup(static_cast<int>(cur.pts.size()), false);
    std::vector<Vec2> lo_buf, hi_buf;
    auto eval = [&](const std::vector<Vec2>& pts, std::vector<Vec2>& g) {
        return energy_grad_impl(spec, path_geom(pts), g, lo_buf, hi_buf, opts.parallel);
    };
    double scale = 0.0;
    for (size_t i = 1; i < cur.pts.size(); ++i) scale += norm(cur.pts[i] - cur.pts[i - 1]);
    CgResult cg = cg_minimize(eval, cur.pts, 1, static_cast<int>(cur.pts.size()) - 1,
                              opts.precondition ? &pre : nullptr,
                              opts.tol_grad * std::max(1.0, scale), opts.max_iter);
    res.path = std::move(cur);
    res.converged = cg.converged;
    res.grad_norm = cg.gnorm;
    res.iterations = cg.iterations;
    res.length = kernels::path_length(spec, res.path, opts.parallel);
    return res;
}

namespace {

// torus distance from point p to segment (a, b); segments are short, so one
// integer shift of p toward the segment midpoint suffices
double point_segment_dist_torus(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 mid = (a + b) * 0.5;
    Vec2 q{p.x + std::round(mid.x - p.x), p.y + std::round(mid.y - p.y)};
    Vec2 ab = b - a;
    double t = dot(q - a, ab) / std::max(norm2(ab), 1e-300);
    t = std::clamp(t, 0.0, 1.0);
    return norm(q - (a + ab * t));
}

double directed_hausdorff(const DiscreteLoop& from, const DiscreteLoop& to) {
    const int N = from.n(), M = to.n();
    const Vec2 zt = to.cls.vec();
    double worst = 0.0;
    for (int i = 0; i < N; ++i) {
        double best = 1e300;
        Vec2 p = wrap_torus(from.pts[i]);
        for (int j = 0; j < M; ++j) {
            Vec2 a = to.pts[j];
            Vec2 b = (j + 1 < M) ? to.pts[j + 1] : to.pts[0] + zt;
            best = std::min(best, point_segment_dist_torus(p, a, b));
            if (best == 0.0) break;
        }
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

double loop_hausdorff(const DiscreteLoop& a, const DiscreteLoop& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

PeriodicFamily find_periodic_minimizers(const MetricSpec& spec, LatticeVector z, int restarts,
                                        const MinimizeOpts& opts, std::uint64_t seed,
                                        double cluster_tol, double length_window) {
    if (!z.primitive()) throw std::invalid_argument("find_periodic_minimizers: z must be primitive");
    if (restarts < 1) throw std::invalid_argument("find_periodic_minimizers: restarts >= 1");

    const double zlen = z.len();
    const Vec2 u = unit(perp(z.vec()));
    const double strip = 1.0 / zlen;  // transverse spacing of lattice-translate lines
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);

    std::vector<Vec2> offsets(restarts);
    for (int j = 0; j < restarts; ++j)
        offsets[j] = u * ((j + jitter(rng)) / restarts * strip);

    std::vector<MinimizerResult> runs(restarts);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) if (opts.parallel)
#endif
    for (int j = 0; j < restarts; ++j) {
        MinimizeOpts o = opts;
        o.parallel = false;  // restarts already run concurrently
        runs[j] = minimize_loop(spec, init_loop(z, offsets[j], 64), o);
    }
    std::sort(runs.begin(), runs.end(), [](const MinimizerResult& a, const MinimizerResult& b) {
        if (a.sigma != b.sigma) return a.sigma < b.sigma;
        return a.loop.pts[0].x < b.loop.pts[0].x;
    });

    PeriodicFamily fam;
    fam.restarts = restarts;
    fam.sigma = runs.front().sigma;

    const double best = runs.front().sigma;
    for (auto& r : runs) {
        if (r.sigma > best * (1.0 + length_window)) continue;
        bool fresh = true;
        for (const auto& kept : fam.orbits) {
            if (loop_hausdorff(r.loop, kept.loop) <= cluster_tol) {
                fresh = false;
                break;
            }
        }
        if (fresh) fam.orbits.push_back(std::move(r));
    }
    return fam;
}

}  // namespace snlab
