#pragma once

#include <functional>

namespace levtof {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_intervals = 2000;
};

/// Globally adaptive Gauss–Kronrod (7/15) integration on [lo, hi]: the
/// interval with the largest error estimate is bisected until the summed
/// estimate meets max(abs_tol, rel_tol·|I|). Throws QuadratureError when the
/// interval budget runs out first.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                                    const QuadratureOptions& options = {});

}  // namespace levtof
