#include "snlab/stable_norm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace snlab {

namespace {

double angle_of(Vec2 v) { return std::atan2(v.y, v.x); }

// Certified supporting-line lower bound from an outside neighbor u of z:
// write xi = alpha*u + beta*z with alpha <= 0 <= beta; subadditivity gives
//   sigma(xi) >= beta*sigma(z) + alpha*sigma(u),
// so the z-value is deflated by its bar and the u-value inflated by its bar.
double support_lower(Vec2 u, double su_hi, Vec2 z, double sz_lo, Vec2 xi) {
    double den = cross(u, z);
    if (den == 0.0) return 0.0;
    double alpha = cross(xi, z) / den;
    double beta = cross(u, xi) / den;
    if (alpha > 0.0 || beta < 0.0) return 0.0;  // xi not beyond z: bound invalid
    return alpha * su_hi + beta * sz_lo;
}

}  // namespace

const TableEntry* StableNormTable::find(LatticeVector z) const {
    for (const auto& e : entries)
        if (e.z == z) return &e;
    return nullptr;
}

StableNormTable build_table(const MetricSpec& spec, int Q, const BuildOpts& opts) {
    if (Q < 3) throw std::invalid_argument("build_table: Q >= 3");
    StableNormTable table;
    table.metric_hash = metric_hash(spec);
    table.Q = Q;
    table.seed = opts.seed;

    std::vector<LatticeVector> classes = primitive_vectors(Q);
    std::sort(classes.begin(), classes.end(), [](LatticeVector a, LatticeVector b) {
        return angle_of(a.vec()) < angle_of(b.vec());
    });
    table.entries.resize(classes.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) if (opts.parallel)
#endif
    for (int i = 0; i < (int)classes.size(); ++i) {
        TableEntry e;
        e.z = classes[i];
        try {
            MinimizeOpts mo = opts.minimize;
            mo.parallel = false;  // classes already run concurrently
            PeriodicFamily fam = find_periodic_minimizers(spec, e.z, opts.restarts, mo,
                                                          opts.seed + std::uint64_t(i));
            const MinimizerResult& best = fam.orbits.front();
            e.sigma = best.sigma;
            e.sigma_extrap = best.sigma_extrap;
            e.error_bar = best.error_bar;
            e.converged = best.converged;
            e.grad_norm = best.grad_norm;
            e.N = best.N;
            e.orbit_count = (int)fam.orbits.size();
            e.best_loop = best.loop;
            if (opts.with_floquet) {
                FloquetReport fr = monodromy_of_closed(spec, best);
                if (fr.valid) e.floquet = fr;
            }
        } catch (const std::exception& ex) {
            e.failed = true;
            e.note = ex.what();
        }
        table.entries[i] = std::move(e);
    }
    return table;
}

Sandwich sigma_at(const StableNormTable& table, Vec2 xi) {
    if (xi.x == 0.0 && xi.y == 0.0) throw std::domain_error("sigma_at: xi != 0");
    if (table.entries.empty()) throw std::invalid_argument("sigma_at: empty table");

    const int n = (int)table.entries.size();
    // entries are angle-sorted at build time
    const double theta = angle_of(xi);

    // exact node: xi parallel to a tabulated class
    for (const auto& e : table.entries) {
        if (e.failed) continue;
        Vec2 zv = e.z.vec();
        if (cross(zv, xi) == 0.0 && dot(zv, xi) > 0.0) {
            double scale = norm(xi) / norm(zv);
            Sandwich s;
            s.xi = xi;
            s.lower = (e.sigma_extrap - e.error_bar) * scale;
            s.upper = (e.sigma_extrap + e.error_bar) * scale;
            s.support = {e.z};
            return s;
        }
    }

    auto entry_angle = [&](int i) { return angle_of(table.entries[i].z.vec()); };
    // find enclosing pair cyclically (first entry with angle > theta)
    int hi = 0;
    while (hi < n && entry_angle(hi) <= theta) ++hi;
    int i2 = hi % n;
    int i1 = (hi + n - 1) % n;

    auto sig = [&](int i) { return table.entries[i].sigma_extrap; };
    auto bar = [&](int i) { return table.entries[i].error_bar; };
    Vec2 z = table.entries[i1].z.vec();
    Vec2 w = table.entries[i2].z.vec();

    double den = cross(z, w);
    if (den == 0.0) throw std::runtime_error("sigma_at: degenerate enclosing pair");
    double a = cross(xi, w) / den;
    double b = cross(z, xi) / den;

    Sandwich s;
    s.xi = xi;
    s.upper = a * (sig(i1) + bar(i1)) + b * (sig(i2) + bar(i2));

    int i0 = (i1 + n - 1) % n;
    int i3 = (i2 + 1) % n;
    double l_left = support_lower(table.entries[i0].z.vec(), sig(i0) + bar(i0), z,
                                  sig(i1) - bar(i1), xi);
    double l_right = support_lower(table.entries[i3].z.vec(), sig(i3) + bar(i3), w,
                                   sig(i2) - bar(i2), xi);
    s.lower = std::max({l_left, l_right, 0.0});
    s.lower = std::min(s.lower, s.upper);  // guard against rounding inversion
    s.support = {table.entries[i0].z, table.entries[i1].z, table.entries[i2].z,
                 table.entries[i3].z};
    return s;
}

// ---- SigmaCache -------------------------------------------------------------

SigmaCache::SigmaCache(const MetricSpec& spec, MinimizeOpts base) : spec_(spec), base_(base) {}

SigmaCache::Value SigmaCache::sigma(LatticeVector z, double accuracy) {
    if (z.is_zero()) throw std::domain_error("SigmaCache: z != 0");
    {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = memo_.find({z.z1, z.z2});
        if (it != memo_.end())
            return {it->second.sigma_extrap, it->second.error_bar, it->second.sigma,
                    it->second.converged};
    }

    const double zlen = z.len();
    // per-unit-length Richardson error ~ c / p^4 with c = O(1); pick the final
    // points-per-unit-length for the requested accuracy
    double p_final = std::clamp(std::pow(2.0 / std::max(accuracy, 1e-13), 0.25), 64.0, 512.0);
    int N0 = std::max(64, (int)std::lround(p_final * zlen / 4.0 / 16.0) * 16);

    MinimizeOpts mo = base_;
    mo.levels = 3;

    // coarse multi-start, then refine the winner through the ladder
    MinimizeOpts coarse = mo;
    coarse.levels = 1;
    const int restarts = 6;
    const Vec2 u = unit(perp(z.vec()));
    const double strip = 1.0 / zlen;
    MinimizerResult best;
    bool have = false;
    for (int j = 0; j < restarts; ++j) {
        Vec2 off = u * ((j + 0.37) / restarts * strip);
        MinimizerResult r = minimize_loop(spec_, init_loop(z, off, N0), coarse);
        if (!have || r.sigma < best.sigma) {
            best = std::move(r);
            have = true;
        }
    }
    MinimizerResult full = minimize_loop(spec_, std::move(best.loop), mo);

    Value out{full.sigma_extrap, full.error_bar, full.sigma, full.converged};
    {
        std::lock_guard<std::mutex> lk(mu_);
        memo_[{z.z1, z.z2}] = std::move(full);
    }
    return out;
}

const MinimizerResult* SigmaCache::result(LatticeVector z) const {
    auto it = memo_.find({z.z1, z.z2});
    return it == memo_.end() ? nullptr : &it->second;
}

Sandwich SigmaCache::directed_sandwich(Vec2 xi, double width_target, double len_cap) {
    if (xi.x == 0.0 && xi.y == 0.0) throw std::domain_error("directed_sandwich: xi != 0");
    const double xlen = norm(xi);

    // starting unimodular pair: quadrant axes, oriented with cross(z, w) = 1
    // and xi inside the (closed) cone
    auto sgn = [](double v) { return v >= 0.0 ? 1 : -1; };
    LatticeVector z{sgn(xi.x), 0}, w{0, sgn(xi.y)};
    if (xi.x == 0.0) z = {sgn(-xi.y) > 0 ? 1 : -1, 0};  // keep a genuine cone
    if (xi.y == 0.0) w = {0, sgn(xi.x) > 0 ? 1 : -1};
    if (cross(z.vec(), w.vec()) < 0.0) std::swap(z, w);

    auto aligned = [&](LatticeVector u) {
        return cross(u.vec(), xi) == 0.0 && dot(u.vec(), xi) > 0.0;
    };

    const double acc = std::max(width_target / 4.0, 1e-13);

    auto probe_pair = [&](LatticeVector pz, LatticeVector pw) {
        auto sz = sigma(pz, acc);
        auto sw = sigma(pw, acc);
        Vec2 zv = pz.vec(), wv = pw.vec();
        double den = cross(zv, wv);
        double a = cross(xi, wv) / den;
        double b = cross(zv, xi) / den;
        Sandwich s;
        s.xi = xi;
        s.upper = a * (sz.sigma + sz.bar) + b * (sw.sigma + sw.bar);
        LatticeVector zl = pz * 2 - pw, wr = pw * 2 - pz;
        auto szl = sigma(zl, acc);
        auto swr = sigma(wr, acc);
        double l_left = support_lower(zl.vec(), szl.sigma + szl.bar, zv, sz.sigma - sz.bar, xi);
        double l_right = support_lower(wr.vec(), swr.sigma + swr.bar, wv, sw.sigma - sw.bar, xi);
        s.lower = std::min(std::max({l_left, l_right, 0.0}), s.upper);
        s.support = {zl, pz, pw, wr};
        return s;
    };

    // Stern-Brocot descent with batched (continued-fraction) steps; probe the
    // actual width once the unimodular gap suggests it could be small enough
    double probe_trigger = width_target;
    for (int guard = 0; guard < 512; ++guard) {
        if (aligned(z) || aligned(w)) {
            LatticeVector hit = aligned(z) ? z : w;
            auto sv = sigma(hit, acc);
            double scale = xlen / hit.len();
            Sandwich s;
            s.xi = xi;
            s.lower = (sv.sigma - sv.bar) * scale;
            s.upper = (sv.sigma + sv.bar) * scale;
            s.support = {hit};
            return s;
        }
        double gap2 = 1.0 / (norm2(z.vec()) * norm2(w.vec()));
        bool at_cap = std::max(z.len(), w.len()) > len_cap;
        if (gap2 <= probe_trigger || at_cap) {
            Sandwich s = probe_pair(z, w);
            if (s.width() <= width_target * xlen || at_cap) return s;
            probe_trigger = gap2 * std::max(0.02, 0.5 * width_target * xlen / s.width());
        }
        double cz = cross(z.vec(), xi);  // > 0 while xi strictly inside the cone
        double cw = cross(xi, w.vec());
        if (cz <= 0.0 || cw <= 0.0) break;
        if (cz >= cw) {
            auto a = std::max<std::int64_t>(1, (std::int64_t)std::floor(cz / cw));
            z = z + w * a;
        } else {
            auto b = std::max<std::int64_t>(1, (std::int64_t)std::floor(cw / cz));
            w = w + z * b;
        }
    }
    return probe_pair(z, w);  // guard exit: honest (possibly wide) sandwich
}

// ---- forward derivative and defects ----------------------------------------

DPlusTrace forward_derivative_at_lattice(SigmaCache& cache, LatticeVector z, LatticeVector w,
                                         const std::vector<int>& n_list) {
    if (!z.primitive()) throw std::invalid_argument("forward_derivative: z must be primitive");
    if (n_list.empty()) throw std::invalid_argument("forward_derivative: n_list nonempty");
    DPlusTrace tr;
    tr.z = z;
    tr.w = w;
    tr.n_list = n_list;

    auto base = cache.sigma(z, 1e-11);
    bool ok = base.converged;
    for (int n : n_list) {
        LatticeVector u = z * n + w;
        if (u.is_zero()) throw std::invalid_argument("forward_derivative: nz + w = 0");
        auto s = cache.sigma(u, 1e-11);
        tr.d.push_back(s.sigma - n * base.sigma);
        tr.bars.push_back(s.bar + n * base.bar);
        ok = ok && s.converged;
    }
    tr.estimate = tr.d.back();
    double trunc = tr.d.size() >= 2 ? std::max(0.0, tr.d[tr.d.size() - 2] - tr.d.back()) : 0.0;
    tr.bar = tr.bars.back() + trunc;
    tr.reliable = ok;
    return tr;
}

namespace {

// best small-denominator rational approximation of r with q <= q_cap
std::pair<std::int64_t, std::int64_t> snap_rational(double r, std::int64_t q_cap) {
    if (r == 0.0) return {0, 1};
    double ar = std::abs(r);
    auto cvs = convergents(ar, q_cap);
    if (cvs.empty()) return {(std::int64_t)std::llround(ar), 1};
    auto& c = cvs.back();
    std::int64_t p = c.p;
    if (r < 0) p = -p;
    return {p, c.q};
}

}  // namespace

DefectValue defect_sigma(SigmaCache& cache, LatticeVector z, Vec2 v,
                         const std::vector<int>& n_list) {
    if (z.is_zero()) throw std::domain_error("defect_sigma: z != 0");
    DefectValue out;
    const MetricSpec& spec = cache.spec();

    if (spec.variant == MetricVariant::FlatNorm) {
        // x-independent metric: sigma_F = F exactly, D+ from the analytic
        // fiber derivative
        Vec2 zv = z.vec();
        double s0 = eval_F(spec, {{0, 0}, zv});
        double s1 = eval_F(spec, {{0, 0}, zv + v});
        FDerivs d = eval_dF(spec, {{0, 0}, zv});
        out.value = s1 - s0 - dot(d.dF_dv, v);
        out.bar = 1e-14 * (std::abs(s1) + std::abs(s0) + 1.0);
        return out;
    }

    // decompose v into components along z and z_perp; the radial part drops
    // out of the defect (homogeneity), handled by evaluating on the snapped ray
    Vec2 zv = z.vec();
    Vec2 zp = perp(zv);
    double t_perp = dot(v, zp) / norm2(zp);   // v = t_par*z + t_perp*z_perp
    double t_par = dot(v, zv) / norm2(zv);

    auto [p, q] = snap_rational(t_perp, 4096);
    if (p == 0) {  // v parallel to z: defect vanishes identically
        out.value = 0.0;
        out.bar = 0.0;
        out.note = "radial direction: defect 0 by homogeneity";
        return out;
    }

    LatticeVector w = p > 0 ? z.perp() : LatticeVector{-z.perp().z1, -z.perp().z2};
    std::int64_t pa = std::llabs(p);

    DPlusTrace tr = forward_derivative_at_lattice(cache, z, w, n_list);

    // sigma(z + t_par z + (p/q) z_perp) by homogeneous scaling of the lattice
    // class u = q(1+t_par) z + p z_perp when t_par snaps rationally; the
    // profile machinery always calls with t_par = 0
    LatticeVector u = z * q + w * pa;
    auto su = cache.sigma(u, 1e-11);
    auto sz = cache.sigma(z, 1e-11);
    double scale = 1.0 + t_par;
    double sigma_pert = su.sigma / q * scale;
    double tmag = double(pa) / q * scale;

    out.value = sigma_pert - sz.sigma * scale - tmag * tr.estimate;
    out.bar = su.bar / q + sz.bar + tmag * tr.bar;
    out.inconclusive = out.bar > std::abs(out.value);
    if (!tr.reliable) {
        out.inconclusive = true;
        out.note = "forward-derivative trace unreliable";
    }
    return out;
}

BetaDerivative beta_derivative(SigmaCache& cache, Vec2 xi, Vec2 dir, double width_target) {
    const double h0 = 0.02 * norm(xi);
    Vec2 u = unit(dir);
    auto beta_at = [&](Vec2 p, double& bar) {
        Sandwich s = cache.directed_sandwich(p, width_target);
        double mid = s.mid();
        bar = mid * (s.width() * 0.5);
        return 0.5 * mid * mid;
    };
    auto sym_diff = [&](double h, double& bar) {
        double b1, b2;
        double bp = beta_at(xi + u * h, b1);
        double bm = beta_at(xi - u * h, b2);
        bar = (b1 + b2) / (2.0 * h);
        return (bp - bm) / (2.0 * h);
    };
    double bar1, bar2;
    double d1 = sym_diff(h0, bar1);
    double d2 = sym_diff(h0 * 0.5, bar2);
    BetaDerivative out;
    out.value = (4.0 * d2 - d1) / 3.0;
    out.bar = (4.0 * bar2 + bar1) / 3.0 + 0.25 * std::abs(out.value - d2);
    return out;
}

DefectValue defect_beta(SigmaCache& cache, Vec2 xi, Vec2 v, double width_target) {
    if (xi.x == 0.0 && xi.y == 0.0) throw std::domain_error("defect_beta: xi != 0");
    DefectValue out;
    double vmag = norm(v);
    if (vmag == 0.0) {
        out.note = "v = 0";
        return out;
    }

    BetaDerivative D = beta_derivative(cache, xi, v, width_target);

    double bar0, bar1;
    auto beta_at = [&](Vec2 p, double& bar) {
        Sandwich s = cache.directed_sandwich(p, width_target);
        double mid = s.mid();
        bar = mid * (s.width() * 0.5);
        return 0.5 * mid * mid;
    };
    double b1 = beta_at(xi + v, bar1);
    double b0 = beta_at(xi, bar0);

    out.value = b1 - b0 - vmag * D.value;
    out.bar = bar1 + bar0 + vmag * D.bar;
    out.inconclusive = out.bar > std::abs(out.value);
    return out;
}

}  // namespace snlab
