#include "snlab/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace snlab {

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b) {
        std::int64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

bool LatticeVector::primitive() const {
    if (is_zero()) return false;
    return gcd64(z1, z2) == 1;
}

double LatticeVector::len() const {
    return std::hypot(double(z1), double(z2));
}

std::vector<Convergent> convergents(double omega, std::int64_t q_max) {
    if (!std::isfinite(omega)) throw std::invalid_argument("convergents: omega must be finite");
    if (q_max < 1) throw std::invalid_argument("convergents: q_max >= 1");

    // resolve omega as a0 + num/2^64 with 64 fractional bits
    double a0d = std::floor(omega);
    std::int64_t a0 = static_cast<std::int64_t>(a0d);
    long double frac = static_cast<long double>(omega) - static_cast<long double>(a0d);
    const unsigned __int128 one = static_cast<unsigned __int128>(1) << 64;
    unsigned __int128 num = static_cast<unsigned __int128>(frac * 18446744073709551616.0L);
    unsigned __int128 den = one;

    std::vector<Convergent> out;
    // recurrences h_k = a_k h_{k-1} + h_{k-2}
    std::int64_t h_prev = 1, h_cur = a0;  // p
    std::int64_t k_prev = 0, k_cur = 1;   // q

    if (num == 0) {  // omega is (within resolution) an integer
        out.push_back({a0, 1, omega - double(a0), true});
        return out;
    }

    while (num != 0) {
        // next partial quotient of num/den: a = floor(den/num), then (num,den) -> (den mod num, num)
        unsigned __int128 a128 = den / num;
        unsigned __int128 rem = den % num;
        if (a128 > static_cast<unsigned __int128>(INT64_MAX)) break;
        std::int64_t a = static_cast<std::int64_t>(a128);
        std::int64_t h_next = a * h_cur + h_prev;
        std::int64_t k_next = a * k_cur + k_prev;
        if (k_next > q_max) break;
        h_prev = h_cur; h_cur = h_next;
        k_prev = k_cur; k_cur = k_next;
        den = num;
        num = rem;
        Convergent c;
        c.p = h_cur;
        c.q = k_cur;
        c.error = omega - double(c.p) / double(c.q);
        c.exact = (num == 0);
        out.push_back(c);
    }
    return out;
}

std::vector<LatticeVector> primitive_vectors(int Q) {
    if (Q < 1) throw std::invalid_argument("primitive_vectors: Q >= 1");
    std::vector<LatticeVector> out;
    for (std::int64_t a = -Q; a <= Q; ++a) {
        for (std::int64_t b = -Q; b <= Q; ++b) {
            if (a == 0 && b == 0) continue;
            if (a * a + b * b > std::int64_t(Q) * Q) continue;
            if (gcd64(a, b) != 1) continue;
            out.push_back({a, b});
        }
    }
    return out;
}

std::int64_t pick_count(LatticeVector z) {
    if (!z.primitive()) throw std::invalid_argument("pick_count: z must be primitive");
    LatticeVector w = z.perp();
    // bounding box of {0, z, w, z+w}
    std::int64_t xs[4] = {0, z.z1, w.z1, z.z1 + w.z1};
    std::int64_t ys[4] = {0, z.z2, w.z2, z.z2 + w.z2};
    std::int64_t xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0];
    for (int i = 1; i < 4; ++i) {
        xmin = std::min(xmin, xs[i]); xmax = std::max(xmax, xs[i]);
        ymin = std::min(ymin, ys[i]); ymax = std::max(ymax, ys[i]);
    }
    const std::int64_t zz = z.z1 * z.z1 + z.z2 * z.z2;
    std::int64_t count = 0;
    for (std::int64_t x = xmin; x <= xmax; ++x) {
        for (std::int64_t y = ymin; y <= ymax; ++y) {
            // strict interior: 0 < <p,z> < |z|^2 and 0 < <p,z_perp> < |z|^2
            std::int64_t pz = x * z.z1 + y * z.z2;
            std::int64_t pw = x * w.z1 + y * w.z2;
            if (pz > 0 && pz < zz && pw > 0 && pw < zz) ++count;
        }
    }
    return 1 + count;
}

}  // namespace snlab
