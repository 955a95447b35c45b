#pragma once

#include <cmath>

namespace snlab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double a) const { return {a * x, a * y}; }
    constexpr Vec2 operator/(double a) const { return {x / a, y / a}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double a) { x *= a; y *= a; return *this; }
};

constexpr Vec2 operator*(double a, Vec2 v) { return {a * v.x, a * v.y}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
constexpr double norm2(Vec2 v) { return v.x * v.x + v.y * v.y; }
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 unit(Vec2 v) { double n = norm(v); return {v.x / n, v.y / n}; }

// outer(a,b)_{ij} = a_i b_j
struct Mat2 {
    double m00 = 0.0, m01 = 0.0, m10 = 0.0, m11 = 0.0;

    constexpr Mat2() = default;
    constexpr Mat2(double a, double b, double c, double d) : m00(a), m01(b), m10(c), m11(d) {}

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    constexpr Vec2 operator*(Vec2 v) const { return {m00 * v.x + m01 * v.y, m10 * v.x + m11 * v.y}; }
    constexpr Mat2 operator*(double a) const { return {a * m00, a * m01, a * m10, a * m11}; }
    constexpr Mat2 operator+(Mat2 o) const { return {m00 + o.m00, m01 + o.m01, m10 + o.m10, m11 + o.m11}; }
    constexpr Mat2 operator-(Mat2 o) const { return {m00 - o.m00, m01 - o.m01, m10 - o.m10, m11 - o.m11}; }

    constexpr double det() const { return m00 * m11 - m01 * m10; }
    constexpr double trace() const { return m00 + m11; }
    constexpr Mat2 transpose() const { return {m00, m10, m01, m11}; }

    // solve A y = b for symmetric positive definite A
    constexpr Vec2 solve(Vec2 b) const {
        double d = det();
        return {(m11 * b.x - m01 * b.y) / d, (-m10 * b.x + m00 * b.y) / d};
    }
};

constexpr Mat2 operator*(double a, Mat2 m) { return m * a; }
constexpr Mat2 outer(Vec2 a, Vec2 b) { return {a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y}; }

// reduce each coordinate to [0,1); exact for integer translations
inline double wrap01(double u) { return u - std::floor(u); }
inline Vec2 wrap_torus(Vec2 x) { return {wrap01(x.x), wrap01(x.y)}; }

// distance on T^2 (euclidean, shortest representative)
inline double torus_dist(Vec2 a, Vec2 b) {
    double dx = wrap01(a.x - b.x);
    double dy = wrap01(a.y - b.y);
    if (dx > 0.5) dx -= 1.0;
    if (dy > 0.5) dy -= 1.0;
    return std::hypot(dx, dy);
}

}  // namespace snlab
