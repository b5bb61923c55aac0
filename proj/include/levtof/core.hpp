#pragma once

#include <numbers>
#include <optional>

namespace levtof {

/// CODATA 2018 exact/recommended values.
struct PhysicalConstants {
    static constexpr double hbar = 1.054571817e-34;  // J s
    static constexpr double k_B = 1.380649e-23;      // J/K
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Convert an ordinary frequency (Hz) to an angular frequency (rad/s).
constexpr double angular_from_hz(double hz) { return two_pi * hz; }
constexpr double hz_from_angular(double omega) { return omega / two_pi; }

class ParticleSpec {
public:
    ParticleSpec(double mass_kg, double radius_m);

    double mass() const { return mass_; }
    double radius() const { return radius_; }

private:
    double mass_;
    double radius_;
};

/// Trap angular frequencies in rad/s.
class TrapSpec {
public:
    TrapSpec(double omega_x, double omega_y, double omega_z);
    static TrapSpec from_hz(double fx, double fy, double fz);

    double omega_x() const { return omega_x_; }
    double omega_y() const { return omega_y_; }
    double omega_z() const { return omega_z_; }

private:
    double omega_x_;
    double omega_y_;
    double omega_z_;
};

struct MotionalState {
    double n_x = 0.0;
    double n_y = 0.0;
    double n_z = 0.0;

    void validate() const;
};

/// Librational parameters entering the TOF displacement.
///
/// `delta_omega` is the standard deviation of the angular velocity at
/// release (rad/s), `phi0` the fixed initial orientation, `epsilon1` the
/// optical-centre offset and `epsilon2` the libration-centre offset.
struct LibrationSpec {
    double delta_omega = 0.0;
    double phi0 = std::numbers::pi / 2.0;
    double epsilon1 = 0.0;
    double epsilon2 = 0.0;
    std::optional<double> temperature;  // K

    void validate() const;
    double epsilon2_delta_omega() const { return epsilon2 * delta_omega; }
};

// Reference particle and trap used as defaults by the CLI and the tests.
namespace reference {
inline constexpr double mass_kg = 4.9e-17;
inline constexpr double radius_m = 174e-9;
inline constexpr double fx_hz = 62e3;
inline constexpr double fy_hz = 74e3;
inline constexpr double fz_hz = 209e3;
inline constexpr double t_tof_s = 68e-6;
inline constexpr double center_offset_m = 2e-9;
inline constexpr double delta_omega_hz = 3.5e3;

ParticleSpec particle();
TrapSpec trap();
}  // namespace reference

/// sqrt(hbar Omega_z / m): the velocity width at n_z = 0.
double quantum_limited_width(const ParticleSpec& particle, const TrapSpec& trap);

/// Velocity width Delta v in the exp(-v^2/Delta v^2) convention, including the
/// libration-centre term 2 (eps2 * Delta omega)^2.
double velocity_width(const ParticleSpec& particle, const TrapSpec& trap, double n_z,
                      double epsilon2_delta_omega = 0.0);
double velocity_width(const ParticleSpec& particle, const TrapSpec& trap, double n_z,
                      const LibrationSpec& libration);

/// Relative tolerance below the quantum limit that is still read as n_z = 0.
inline constexpr double sub_quantum_tolerance = 1e-6;

/// Inverts velocity_width with Delta omega = 0. Throws InvalidMeasurement for
/// widths below the quantum limit by more than sub_quantum_tolerance.
double occupation_from_width(double width, const ParticleSpec& particle, const TrapSpec& trap);

/// Standard deviation of v0 for sampling: Delta v / sqrt(2).
double thermal_velocity_sigma(const ParticleSpec& particle, const TrapSpec& trap, double n_z);

/// Homogeneous sphere, (2/5) m R^2.
double sphere_moment_of_inertia(const ParticleSpec& particle);

/// Thermal angular-velocity spread sqrt(k_B T / I) for a libration at temperature T.
double delta_omega_from_temperature(double temperature, const ParticleSpec& particle);

/// Fractional excess of the ground-state width caused by a libration at
/// `temperature` with libration-centre offset `epsilon2`.
double residual_broadening_fraction(double epsilon2, double temperature,
                                    const ParticleSpec& particle, const TrapSpec& trap);

}  // namespace levtof
