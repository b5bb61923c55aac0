#include "levtof/roots.hpp"

#include "levtof/errors.hpp"

#include <cmath>
#include <string>

namespace levtof {

RootResult bisect_then_secant(const std::function<double(double)>& f, double lo, double hi,
                              double x_tol, double bisect_rel_width) {
    double f_lo = f(lo);
    double f_hi = f(hi);
    RootResult r;
    if (f_lo == 0.0) return {lo, 0.0, 0};
    if (f_hi == 0.0) return {hi, 0.0, 0};
    if (std::signbit(f_lo) == std::signbit(f_hi)) {
        throw NoRootError("no sign change in bracket [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    }

    const double target_width = std::abs(hi - lo) * bisect_rel_width;
    while (std::abs(hi - lo) > target_width && r.iterations < 200) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = f(mid);
        ++r.iterations;
        if (f_mid == 0.0) return {mid, 0.0, r.iterations};
        if (std::signbit(f_mid) == std::signbit(f_lo)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }

    // Secant polish; a step leaving the bracket falls back to bisection.
    double x0 = lo, f0 = f_lo;
    double x1 = hi, f1 = f_hi;
    double best = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
    double best_f = std::abs(f_lo) < std::abs(f_hi) ? f_lo : f_hi;
    for (int k = 0; k < 100; ++k) {
        double x2 = (f1 != f0) ? x1 - f1 * (x1 - x0) / (f1 - f0) : 0.5 * (lo + hi);
        if (!(x2 > lo && x2 < hi)) x2 = 0.5 * (lo + hi);
        const double f2 = f(x2);
        ++r.iterations;
        if (std::abs(f2) <= std::abs(best_f)) {
            best = x2;
            best_f = f2;
        }
        if (f2 == 0.0) break;
        if (std::signbit(f2) == std::signbit(f_lo)) {
            lo = x2;
            f_lo = f2;
        } else {
            hi = x2;
            f_hi = f2;
        }
        const double step = std::abs(x2 - x1);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        if (step <= x_tol || std::abs(hi - lo) <= x_tol) break;
    }
    r.root = best;
    r.residual = best_f;
    return r;
}

}  // namespace levtof
