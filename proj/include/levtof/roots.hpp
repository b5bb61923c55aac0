#pragma once

#include <functional>

namespace levtof {

struct RootResult {
    double root = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Bisection on a sign-changing bracket down to `bisect_rel_width` of the
/// initial width, then secant steps kept inside the bracket until |Δx| falls
/// below `x_tol`. Throws NoRootError when f(lo) and f(hi) share a sign.
RootResult bisect_then_secant(const std::function<double(double)>& f, double lo, double hi,
                              double x_tol, double bisect_rel_width = 1e-6);

}  // namespace levtof
