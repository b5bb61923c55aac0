#pragma once

#include "levtof/core.hpp"

#include <span>
#include <string>
#include <vector>

namespace levtof {

/// Hemisphere of radius a (lower half, r < -r0) joined at r = -r0 to a prolate
/// half-spheroid with semi-axes (a, a, c). r0 = 3(c - a)/8 puts the centre of
/// mass at the body-frame origin.
class AsymmetricGeometry {
public:
    AsymmetricGeometry(double a, double c);
    static AsymmetricGeometry from_ratio(double a, double c_over_a);

    double a() const { return a_; }
    double c() const { return c_; }
    double r0() const { return 3.0 * (c_ - a_) / 8.0; }
    double r_min() const { return -a_ - r0(); }
    double r_max() const { return c_ - r0(); }

private:
    double a_;
    double c_;
};

/// Coefficients of the disk-integrated potential at tilt psi.
///   A = a²/4 (Ωy² + Ωz² cos²ψ + Ωx² sin²ψ)
///   B = Ωz² sin²ψ + Ωx² cos²ψ
///   C = 2ε₂ (Ωx² cosψ − B)
///   D = ε₂² (Ωz² sin²ψ + Ωx² (1 − cosψ)²)
///   s = 2 (Ωx² − Ωz²)
struct PotentialCoefficients {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    double D = 0.0;
    double s = 0.0;
};

PotentialCoefficients potential_coefficients(double psi, double epsilon2,
                                             const AsymmetricGeometry& geometry, const TrapSpec& trap);

/// Squared cross-section radius over a²: 1 − (r + r0)²/c² on the spheroid side,
/// 1 − (r + r0)²/a² on the hemisphere side. Throws std::invalid_argument outside
/// [r_min, r_max].
double profile_f(double r, const AsymmetricGeometry& geometry);

/// 3m / (8(a + c)). Potentials carry a ρ/4 density convention; only
/// ratios and roots are physically meaningful.
double potential_prefactor(const AsymmetricGeometry& geometry, double mass);

/// Orientational potential of the body slab r ∈ [r_lo, r_hi] from the 1D
/// r-integral of A f² + (B r² + C r + D) f, adaptive to 1e-10 relative.
/// `mass` defaults to 1 kg (potential per unit mass).
double potential_reduced(double psi, double epsilon2, const AsymmetricGeometry& geometry,
                         const TrapSpec& trap, double r_lo, double r_hi, double mass = 1.0);
double potential_reduced(double psi, double epsilon2, const AsymmetricGeometry& geometry,
                         const TrapSpec& trap, double mass = 1.0);

/// Same quantity from a direct 3D integral of the trap-anisotropy integrand over
/// the body volume (Cartesian p, q, r; p = ρ sin θ to remove the disk-edge
/// square root). Requires |psi| < π/2.
double potential_3d(double psi, double epsilon2, const AsymmetricGeometry& geometry,
                    const TrapSpec& trap, double r_lo, double r_hi, double mass = 1.0);
double potential_3d(double psi, double epsilon2, const AsymmetricGeometry& geometry,
                    const TrapSpec& trap, double mass = 1.0);

enum class PotentialRoute { Reduced, Volume3D };

/// d²(U₁ − U₂)/dψ² at ψ = 0, with U₁ over r ∈ (ε₂, r_max) and U₂ over
/// (r_min, ε₂). Five-point central differences at h = 1e-3 rad and h/2,
/// combined by Richardson extrapolation.
double libration_condition(double epsilon2, const AsymmetricGeometry& geometry, const TrapSpec& trap,
                           double mass = 1.0, PotentialRoute route = PotentialRoute::Reduced);

struct ConditionValue {
    double value = 0.0;
    double scale = 0.0;  // sum of term magnitudes
};

/// Closed polynomial form of the ψ = 0 condition above, divided by the
/// prefactor (units s⁻²·m³). Terms summed in a fixed order with Neumaier
/// compensation. Equals the quadrature condition for ε₂ > −r0.
ConditionValue exact_condition(double epsilon2, const AsymmetricGeometry& geometry, const TrapSpec& trap);

enum class LibrationMethod { Numeric, ExactCondition, ClosedForm };

std::string method_name(LibrationMethod method);

struct LibrationCenterResult {
    double epsilon2 = 0.0;
    LibrationMethod method = LibrationMethod::ClosedForm;
    double residual = 0.0;  // condition value at the root (0 for the closed form)
    double scale = 0.0;     // natural scale of the condition, for relative residuals
};

/// Root of exact_condition in (−a/2, a/2): bisection then secant polish.
LibrationCenterResult epsilon2_exact(const AsymmetricGeometry& geometry, const TrapSpec& trap);

/// Leading-order closed form
///   ε₂ = 2(Ωx²−Ωz²)(c−a)(19c²/15 − 26ac/15 + 3a²)
///        / [(Ωx²−2Ωz²)(9c² + 14ac + 9a²) − 32a²(Ωx²−Ωz²)].
LibrationCenterResult epsilon2_approx(const AsymmetricGeometry& geometry, const TrapSpec& trap);

/// Root of libration_condition (quadrature + finite differences), TOMS 748.
/// Defaults to the volume route, which shares no algebra with the exact form.
LibrationCenterResult epsilon2_numeric(const AsymmetricGeometry& geometry, const TrapSpec& trap,
                                       double mass = 1.0, PotentialRoute route = PotentialRoute::Volume3D);

struct SweepRow {
    double c_over_a = 1.0;
    double eps2_approx = 0.0;
    double eps2_exact = 0.0;
    double eps2_numeric = 0.0;
    double residual_exact = 0.0;    // relative to the condition scale
    double residual_numeric = 0.0;  // relative to the condition scale
    double spread = 0.0;            // (max − min) / max(|mean|, 1e-9 a)
    std::string error;              // empty when every method succeeded

    bool ok() const { return error.empty(); }
};

/// One row per ratio (ratios ≥ 1); failures are recorded per row.
std::vector<SweepRow> sweep_asymmetry(double a, const TrapSpec& trap, std::span<const double> ratios,
                                      unsigned threads = 0);

}  // namespace levtof
