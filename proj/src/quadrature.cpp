#include "levtof/quadrature.hpp"

#include "levtof/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

namespace levtof {

namespace {

// Kronrod 15-point nodes (non-negative half) and weights; the odd-indexed
// nodes are the embedded 7-point Gauss rule.
constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double lo;
    double hi;
    double value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gk15(const std::function<double(double)>& f, double lo, double hi) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(center);
    double kronrod = fc * kronrod_weights[7];
    double gauss = fc * gauss_weights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kronrod_weights[j] * pair;
        if (j % 2 == 1) gauss += gauss_weights[j / 2] * pair;
    }
    return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                                    const QuadratureOptions& options) {
    if (lo == hi) return {};
    std::priority_queue<Segment> heap;
    heap.push(gk15(f, lo, hi));
    double total = heap.top().value;
    double error = heap.top().error;
    int intervals = 1;
    // Rounding floor: error estimates below this cannot be reduced by bisection.
    const auto tolerance = [&] {
        return std::max({options.abs_tol, options.rel_tol * std::abs(total),
                         64.0 * std::numeric_limits<double>::epsilon() * std::abs(total)});
    };
    while (error > tolerance()) {
        if (intervals >= options.max_intervals) {
            throw QuadratureError("adaptive quadrature did not converge: error estimate " +
                                  std::to_string(error) + " after " + std::to_string(intervals) +
                                  " intervals");
        }
        const Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        const Segment left = gk15(f, worst.lo, mid);
        const Segment right = gk15(f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
    }
    // Re-sum from the segments to shed the running-update rounding.
    double value = 0.0;
    double err = 0.0;
    std::vector<Segment> segments;
    while (!heap.empty()) {
        segments.push_back(heap.top());
        heap.pop();
    }
    std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
    for (const auto& s : segments) {
        value += s.value;
        err += s.error;
    }
    return {value, err, intervals};
}

}  // namespace levtof
