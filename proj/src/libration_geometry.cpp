#include "levtof/libration_geometry.hpp"

#include "levtof/detail/parallel.hpp"
#include "levtof/errors.hpp"
#include "levtof/quadrature.hpp"
#include "levtof/roots.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace levtof {

namespace {

constexpr double fd_step = 1e-3;  // rad

// Neumaier-compensated accumulator that also tracks the magnitude sum.
class CompensatedSum {
public:
    void add(double term) {
        const double t = sum_ + term;
        if (std::abs(sum_) >= std::abs(term)) {
            carry_ += (sum_ - t) + term;
        } else {
            carry_ += (term - t) + sum_;
        }
        sum_ = t;
        magnitude_ += std::abs(term);
    }
    double value() const { return sum_ + carry_; }
    double magnitude() const { return magnitude_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
    double magnitude_ = 0.0;
};

void check_range(const AsymmetricGeometry& g, double r_lo, double r_hi) {
    const double slack = 1e-12 * (g.a() + g.c());
    if (!(r_lo <= r_hi) || r_lo < g.r_min() - slack || r_hi > g.r_max() + slack) {
        throw std::invalid_argument("integration range [" + std::to_string(r_lo) + ", " +
                                    std::to_string(r_hi) + "] lies outside the body");
    }
}

// Body-slab integration pieces, split at the junction plane when it is inside.
template <class Fn>
double integrate_slab(const AsymmetricGeometry& g, double r_lo, double r_hi, Fn&& piece) {
    r_lo = std::max(r_lo, g.r_min());
    r_hi = std::min(r_hi, g.r_max());
    const double junction = -g.r0();
    if (r_lo < junction && junction < r_hi) {
        return piece(r_lo, junction) + piece(junction, r_hi);
    }
    return piece(r_lo, r_hi);
}

// Same branch choice as profile_f, without range checks; clamps the
// rounding-level negatives at the poles.
double profile_unchecked(double r, const AsymmetricGeometry& g) {
    const double axis = r >= -g.r0() ? g.c() : g.a();
    const double x = (r + g.r0()) / axis;
    return std::max(0.0, 1.0 - x * x);
}

}  // namespace

AsymmetricGeometry::AsymmetricGeometry(double a, double c) : a_(a), c_(c) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("semi-axis a must be positive");
    if (!(c >= a) || !std::isfinite(c)) throw std::invalid_argument("semi-axis c must satisfy c >= a");
}

AsymmetricGeometry AsymmetricGeometry::from_ratio(double a, double c_over_a) {
    if (!(c_over_a >= 1.0)) throw std::invalid_argument("c/a must be >= 1");
    return AsymmetricGeometry(a, a * c_over_a);
}

PotentialCoefficients potential_coefficients(double psi, double epsilon2,
                                             const AsymmetricGeometry& geometry, const TrapSpec& trap) {
    const double ox2 = trap.omega_x() * trap.omega_x();
    const double oy2 = trap.omega_y() * trap.omega_y();
    const double oz2 = trap.omega_z() * trap.omega_z();
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    const double one_minus_cos = 2.0 * std::sin(0.5 * psi) * std::sin(0.5 * psi);
    PotentialCoefficients k;
    k.A = geometry.a() * geometry.a() / 4.0 * (oy2 + oz2 * c * c + ox2 * s * s);
    k.B = oz2 * s * s + ox2 * c * c;
    // Ωx² cosψ − B = Ωx² cosψ (1 − cosψ) − Ωz² sin²ψ; exact zero at ψ = 0.
    k.C = 2.0 * epsilon2 * (ox2 * c * one_minus_cos - oz2 * s * s);
    k.D = epsilon2 * epsilon2 * (oz2 * s * s + ox2 * one_minus_cos * one_minus_cos);
    k.s = 2.0 * (ox2 - oz2);
    return k;
}

double profile_f(double r, const AsymmetricGeometry& geometry) {
    const double slack = 1e-12 * (geometry.a() + geometry.c());
    if (r < geometry.r_min() - slack || r > geometry.r_max() + slack || !std::isfinite(r)) {
        throw std::invalid_argument("r = " + std::to_string(r) + " lies outside the body");
    }
    return profile_unchecked(r, geometry);
}

double potential_prefactor(const AsymmetricGeometry& geometry, double mass) {
    return 3.0 * mass / (8.0 * (geometry.a() + geometry.c()));
}

double potential_reduced(double psi, double epsilon2, const AsymmetricGeometry& geometry,
                         const TrapSpec& trap, double r_lo, double r_hi, double mass) {
    check_range(geometry, r_lo, r_hi);
    const PotentialCoefficients k = potential_coefficients(psi, epsilon2, geometry, trap);
    const auto integrand = [&](double r) {
        const double f = profile_unchecked(r, geometry);
        return k.A * f * f + ((k.B * r + k.C) * r + k.D) * f;
    };
    QuadratureOptions options;
    options.rel_tol = 1e-10;
    const double integral = integrate_slab(geometry, r_lo, r_hi, [&](double lo, double hi) {
        return integrate_adaptive(integrand, lo, hi, options).value;
    });
    return potential_prefactor(geometry, mass) * integral;
}

double potential_reduced(double psi, double epsilon2, const AsymmetricGeometry& geometry,
                         const TrapSpec& trap, double mass) {
    return potential_reduced(psi, epsilon2, geometry, trap, geometry.r_min(), geometry.r_max(), mass);
}

double potential_3d(double psi, double epsilon2, const AsymmetricGeometry& geometry,
                    const TrapSpec& trap, double r_lo, double r_hi, double mass) {
    if (!(std::abs(psi) < std::numbers::pi / 2.0)) throw std::invalid_argument("|psi| must be < pi/2");
    check_range(geometry, r_lo, r_hi);
    using boost::math::quadrature::gauss_kronrod;
    constexpr unsigned max_depth = 12;
    constexpr double tol = 1e-11;

    const double ox2 = trap.omega_x() * trap.omega_x();
    const double oy2 = trap.omega_y() * trap.omega_y();
    const double oz2 = trap.omega_z() * trap.omega_z();
    const double cp = std::cos(psi);
    const double sp = std::sin(psi);
    const double a = geometry.a();

    // Boost's adaptive GK compares error estimates taken on [-1, 1] against
    // tolerances in the caller's units, so every axis is mapped onto [-1, 1]
    // explicitly.
    const auto unit_interval = [](auto&& fn, double lo, double hi, const char* axis) {
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        double err = 0.0, l1 = 0.0;
        const double value = gauss_kronrod<double, 15>::integrate(
            [&](double u) { return fn(mid + half * u); }, -1.0, 1.0, max_depth, tol, &err, &l1);
        if (err > 1e-8 * l1) {
            throw QuadratureError(std::string("3D potential quadrature did not converge in ") + axis);
        }
        return half * value;
    };

    // The q-integral of the quadratic density over a chord of half-length w is
    // done in closed form; p and r are left to quadrature.
    const auto chord_integral = [&](double p, double w, double r) {
        const double lx = r * cp + p * sp + epsilon2 - epsilon2 * cp;
        const double lz = p * cp - r * sp + epsilon2 * sp;
        return 2.0 * w * (ox2 * lx * lx + oz2 * lz * lz) + oy2 * 2.0 * w * w * w / 3.0;
    };

    const auto disk = [&](double r) {
        const double rho = a * std::sqrt(profile_unchecked(r, geometry));
        if (rho == 0.0) return 0.0;
        // dp = ρ cos θ dθ, and ρ cos θ is also the chord half-length.
        const auto chord = [&](double theta) {
            const double w = rho * std::cos(theta);
            return w > 0.0 ? chord_integral(rho * std::sin(theta), w, r) * w : 0.0;
        };
        return unit_interval(chord, -std::numbers::pi / 2.0, std::numbers::pi / 2.0, "p");
    };

    const double volume_integral = integrate_slab(geometry, r_lo, r_hi, [&](double lo, double hi) {
        return unit_interval(disk, lo, hi, "r");
    });
    const double prefactor = 3.0 * mass / (8.0 * std::numbers::pi * a * a * (a + geometry.c()));
    return prefactor * volume_integral;
}

double potential_3d(double psi, double epsilon2, const AsymmetricGeometry& geometry,
                    const TrapSpec& trap, double mass) {
    return potential_3d(psi, epsilon2, geometry, trap, geometry.r_min(), geometry.r_max(), mass);
}

double libration_condition(double epsilon2, const AsymmetricGeometry& geometry, const TrapSpec& trap,
                           double mass, PotentialRoute route) {
    if (!(epsilon2 > geometry.r_min() && epsilon2 < geometry.r_max())) {
        throw std::invalid_argument("epsilon2 must lie strictly inside (r_min, r_max)");
    }
    const auto potential = [&](double psi, double lo, double hi) {
        return route == PotentialRoute::Reduced
                   ? potential_reduced(psi, epsilon2, geometry, trap, lo, hi, mass)
                   : potential_3d(psi, epsilon2, geometry, trap, lo, hi, mass);
    };
    const auto imbalance = [&](double psi) {
        return potential(psi, epsilon2, geometry.r_max()) - potential(psi, geometry.r_min(), epsilon2);
    };
    const double h = fd_step;
    const double g0 = imbalance(0.0);
    const double gp_half = imbalance(0.5 * h), gm_half = imbalance(-0.5 * h);
    const double gp1 = imbalance(h), gm1 = imbalance(-h);
    const double gp2 = imbalance(2.0 * h), gm2 = imbalance(-2.0 * h);
    const auto five_point = [g0](double step, double p1, double m1, double p2, double m2) {
        return (-(p2 + m2) + 16.0 * (p1 + m1) - 30.0 * g0) / (12.0 * step * step);
    };
    const double coarse = five_point(h, gp1, gm1, gp2, gm2);
    const double fine = five_point(0.5 * h, gp_half, gm_half, gp1, gm1);
    return (16.0 * fine - coarse) / 15.0;
}

ConditionValue exact_condition(double epsilon2, const AsymmetricGeometry& geometry, const TrapSpec& trap) {
    const double a = geometry.a();
    const double c = geometry.c();
    const double r0 = geometry.r0();
    const double e = epsilon2;
    const double ox2 = trap.omega_x() * trap.omega_x();
    const double s = 2.0 * (ox2 - trap.omega_z() * trap.omega_z());
    const double a2 = a * a, c2 = c * c;
    const double R = r0 + e;    // offset of the split plane from the junction
    const double cm = c - r0;   // spheroid pole
    const double ap = a + r0;   // hemisphere pole (magnitude)
    const double e2 = e * e, e3 = e2 * e;

    CompensatedSum sum;
    // s-weighted term: (a²/4)Δ∫f² − Δ∫r² f
    const std::array<double, 17> quadratic = {
        2.0 * a2 / 15.0 * (c - a),
        -a2 / 2.0 * R,
        a2 / (3.0 * c2) * std::pow(R, 3),
        -a2 / (10.0 * c2 * c2) * std::pow(R, 5),
        -std::pow(cm, 3) / 3.0,
        std::pow(cm, 5) / (5.0 * c2),
        r0 / (2.0 * c2) * std::pow(cm, 4),
        r0 * r0 / (3.0 * c2) * std::pow(cm, 3),
        2.0 / 3.0 * e3,
        -2.0 / (5.0 * c2) * e3 * e2,
        -r0 * e2 * e2 / c2,
        -2.0 * r0 * r0 * e3 / (3.0 * c2),
        -std::pow(r0, 5) * (a2 - c2) / (30.0 * a2 * c2),
        std::pow(ap, 3) / 3.0,
        -std::pow(ap, 5) / (5.0 * a2),
        r0 / (2.0 * a2) * std::pow(ap, 4),
        -r0 * r0 / (3.0 * a2) * std::pow(ap, 3),
    };
    for (double t : quadratic) sum.add(s * t);

    // 2ε₂(s − Ωx²)-weighted term: Δ∫r f
    const std::array<double, 7> linear = {
        cm * cm / 2.0,
        ap * ap / 2.0,
        -e2,
        -(std::pow(cm, 4) / 4.0 + 2.0 / 3.0 * r0 * std::pow(cm, 3) + r0 * r0 / 2.0 * cm * cm) / c2,
        2.0 * e2 / c2 * (e2 / 4.0 + 2.0 * r0 * e / 3.0 + r0 * r0 / 2.0),
        -std::pow(r0, 4) * (a2 - c2) / (12.0 * a2 * c2),
        -(std::pow(ap, 4) / 4.0 - 2.0 / 3.0 * r0 * std::pow(ap, 3) + r0 * r0 / 2.0 * ap * ap) / a2,
    };
    const double linear_weight = 2.0 * e * (s - ox2);
    for (double t : linear) sum.add(linear_weight * t);

    // ε₂²(2Ωx² − s)-weighted term: Δ∫f
    const std::array<double, 3> constant = {
        2.0 / 3.0 * (c - a),
        -2.0 * R,
        2.0 / (3.0 * c2) * std::pow(R, 3),
    };
    const double constant_weight = e2 * (2.0 * ox2 - s);
    for (double t : constant) sum.add(constant_weight * t);

    return {sum.value(), sum.magnitude()};
}

std::string method_name(LibrationMethod method) {
    switch (method) {
        case LibrationMethod::Numeric: return "numeric";
        case LibrationMethod::ExactCondition: return "exact";
        case LibrationMethod::ClosedForm: return "approx";
    }
    return "unknown";
}

LibrationCenterResult epsilon2_exact(const AsymmetricGeometry& geometry, const TrapSpec& trap) {
    const double half = 0.5 * geometry.a();
    const auto f = [&](double e) { return exact_condition(e, geometry, trap).value; };
    const RootResult root = bisect_then_secant(f, -half, half, 1e-15 * geometry.a());
    const ConditionValue at_root = exact_condition(root.root, geometry, trap);
    LibrationCenterResult out;
    out.epsilon2 = root.root;
    out.method = LibrationMethod::ExactCondition;
    out.residual = at_root.value;
    out.scale = at_root.scale;
    return out;
}

LibrationCenterResult epsilon2_approx(const AsymmetricGeometry& geometry, const TrapSpec& trap) {
    const double a = geometry.a();
    const double c = geometry.c();
    const double ox2 = trap.omega_x() * trap.omega_x();
    const double oz2 = trap.omega_z() * trap.omega_z();
    const double numerator = 2.0 * (ox2 - oz2) * (c - a) * (19.0 * c * c / 15.0 - 26.0 * a * c / 15.0 + 3.0 * a * a);
    const double denominator =
        (ox2 - 2.0 * oz2) * (9.0 * c * c + 14.0 * a * c + 9.0 * a * a) - 32.0 * a * a * (ox2 - oz2);
    if (denominator == 0.0) throw NumericalError("closed-form libration centre: zero denominator");
    LibrationCenterResult out;
    out.epsilon2 = numerator / denominator;
    out.method = LibrationMethod::ClosedForm;
    return out;
}

LibrationCenterResult epsilon2_numeric(const AsymmetricGeometry& geometry, const TrapSpec& trap,
                                       double mass, PotentialRoute route) {
    const auto f = [&](double e) { return libration_condition(e, geometry, trap, mass, route); };
    double lo = -0.5 * geometry.a();
    double hi = 0.5 * geometry.a();
    double f_lo = f(lo);
    double f_hi = f(hi);
    const double scale = std::max(std::abs(f_lo), std::abs(f_hi));
    if (std::signbit(f_lo) == std::signbit(f_hi)) {
        throw NoRootError("libration condition has no sign change in (-a/2, a/2)");
    }
    LibrationCenterResult out;
    out.method = LibrationMethod::Numeric;
    out.scale = scale;
    // The symmetric bracket's midpoint is the sphere solution; test it first.
    const double f_mid = f(0.0);
    if (f_mid == 0.0) return out;
    if (std::signbit(f_mid) == std::signbit(f_lo)) {
        lo = 0.0;
        f_lo = f_mid;
    } else {
        hi = 0.0;
        f_hi = f_mid;
    }
    const double x_tol = 1e-13 * geometry.a();
    std::uintmax_t max_iter = 200;
    const auto bracket = boost::math::tools::toms748_solve(
        f, lo, hi, f_lo, f_hi, [x_tol](double x, double y) { return std::abs(x - y) <= x_tol; }, max_iter);
    out.epsilon2 = 0.5 * (bracket.first + bracket.second);
    out.residual = f(out.epsilon2);
    return out;
}

std::vector<SweepRow> sweep_asymmetry(double a, const TrapSpec& trap, std::span<const double> ratios,
                                      unsigned threads) {
    std::vector<SweepRow> rows(ratios.size());
    parallel_chunks(ratios.size(), threads, [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) {
            SweepRow& row = rows[i];
            row.c_over_a = ratios[i];
            try {
                const auto geometry = AsymmetricGeometry::from_ratio(a, ratios[i]);
                row.eps2_approx = epsilon2_approx(geometry, trap).epsilon2;
                const auto exact = epsilon2_exact(geometry, trap);
                row.eps2_exact = exact.epsilon2;
                row.residual_exact = exact.scale > 0.0 ? std::abs(exact.residual) / exact.scale : 0.0;
                const auto numeric = epsilon2_numeric(geometry, trap);
                row.eps2_numeric = numeric.epsilon2;
                row.residual_numeric = numeric.scale > 0.0 ? std::abs(numeric.residual) / numeric.scale : 0.0;
                const std::array<double, 3> values = {row.eps2_approx, row.eps2_exact, row.eps2_numeric};
                const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
                const double mean = (values[0] + values[1] + values[2]) / 3.0;
                row.spread = (*mx - *mn) / std::max(std::abs(mean), 1e-9 * a);
            } catch (const std::exception& ex) {
                row.error = ex.what();
                row.spread = std::numeric_limits<double>::quiet_NaN();
            }
        }
    });
    return rows;
}

}  // namespace levtof
