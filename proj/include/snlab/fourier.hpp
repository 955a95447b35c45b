#pragma once

#include <vector>

#include "snlab/vec2.hpp"

namespace snlab {

// One real trigonometric mode: cos_amp*cos(2pi k.x) + sin_amp*sin(2pi k.x).
struct FourierTerm {
    int k1 = 0;
    int k2 = 0;
    double cos_amp = 0.0;
    double sin_amp = 0.0;
};

// Finite real trigonometric polynomial on T^1 or T^2.
// dim==1 series depend on x2 only (all k1 must be 0); this is the convention
// used by the rotational metric factor f(x2).
class FourierSeries {
  public:
    FourierSeries() = default;
    FourierSeries(int dim, double constant, std::vector<FourierTerm> terms);

    int dim() const { return dim_; }
    double constant() const { return constant_; }
    const std::vector<FourierTerm>& terms() const { return terms_; }

    double eval(Vec2 x) const;
    Vec2 grad(Vec2 x) const;
    Mat2 hess(Vec2 x) const;
    // value and gradient in one trig pass (hot path of the loop kernels)
    double eval_grad(Vec2 x, Vec2& g) const;

    // 1-D convenience (valid for any series with k1==0 terms)
    double eval1(double s) const { return eval({0.0, s}); }
    double deriv1(double s) const { return grad({0.0, s}).y; }
    double deriv2_1(double s) const { return hess({0.0, s}).m11; }

    // sum over terms of |k|_1-weighted amplitude magnitudes; 2*pi*lip_coeff()
    // bounds |grad f| everywhere
    double lip_coeff() const;
    double amp_l1() const;

    // global minimum: dense grid scan (n points per axis) followed by local
    // polishing, plus the certified floor grid_min - sup|grad|*h/2
    struct MinResult {
        double min_value;      // polished minimum
        Vec2 argmin;
        double certified_floor;  // rigorous lower bound for min f
    };
    MinResult global_min(int grid_n = 256) const;

    bool operator==(const FourierSeries&) const = default;

  private:
    int dim_ = 1;
    double constant_ = 0.0;
    std::vector<FourierTerm> terms_;
};

}  // namespace snlab
