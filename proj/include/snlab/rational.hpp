#pragma once

#include <cstdint>
#include <vector>

#include "snlab/vec2.hpp"

namespace snlab {

// Winding class z in Z^2 ~ pi_1(T^2).
struct LatticeVector {
    std::int64_t z1 = 0;
    std::int64_t z2 = 0;

    bool is_zero() const { return z1 == 0 && z2 == 0; }
    bool primitive() const;
    double len() const;
    Vec2 vec() const { return {double(z1), double(z2)}; }
    LatticeVector perp() const { return {-z2, z1}; }
    LatticeVector operator+(LatticeVector o) const { return {z1 + o.z1, z2 + o.z2}; }
    LatticeVector operator-(LatticeVector o) const { return {z1 - o.z1, z2 - o.z2}; }
    LatticeVector operator*(std::int64_t k) const { return {k * z1, k * z2}; }
    LatticeVector operator-() const { return {-z1, -z2}; }
    bool operator==(const LatticeVector&) const = default;
};

std::int64_t gcd64(std::int64_t a, std::int64_t b);

// Continued-fraction convergent p/q of a slope target.
struct Convergent {
    std::int64_t p = 0;
    std::int64_t q = 1;
    double error = 0.0;  // omega - p/q (signed)
    bool exact = false;
};

// Standard convergents of omega with q <= q_max, starting from the first
// fraction past the integer part. omega is resolved to 64 fractional bits;
// convergents are exact for that resolution (ample for q_max <= 1e6).
// Every emitted convergent satisfies |omega - p/q| <= 1/(q(q+1)) and
// consecutive convergents alternate sides of omega.
std::vector<Convergent> convergents(double omega, std::int64_t q_max);

// All primitive z with 0 < |z| <= Q, both orientations.
std::vector<LatticeVector> primitive_vectors(int Q);

// k(z) = 1 + #(Z^2 in the open square spanned by z, z^perp); equals |z|^2
// for primitive z (Pick).
std::int64_t pick_count(LatticeVector z);

}  // namespace snlab
