#include "levtof/core.hpp"

#include "levtof/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace levtof {

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw std::invalid_argument(std::string(name) + " must be positive and finite");
    }
}

void require_non_negative(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw std::invalid_argument(std::string(name) + " must be non-negative and finite");
    }
}

// hbar Omega_z / m, the squared quantum-limited width.
double zero_point_scale(const ParticleSpec& particle, const TrapSpec& trap) {
    return PhysicalConstants::hbar * trap.omega_z() / particle.mass();
}

}  // namespace

ParticleSpec::ParticleSpec(double mass_kg, double radius_m) : mass_(mass_kg), radius_(radius_m) {
    require_positive(mass_, "particle mass");
    require_positive(radius_, "particle radius");
}

TrapSpec::TrapSpec(double omega_x, double omega_y, double omega_z)
    : omega_x_(omega_x), omega_y_(omega_y), omega_z_(omega_z) {
    require_positive(omega_x_, "omega_x");
    require_positive(omega_y_, "omega_y");
    require_positive(omega_z_, "omega_z");
}

TrapSpec TrapSpec::from_hz(double fx, double fy, double fz) {
    return TrapSpec(angular_from_hz(fx), angular_from_hz(fy), angular_from_hz(fz));
}

void MotionalState::validate() const {
    require_non_negative(n_x, "n_x");
    require_non_negative(n_y, "n_y");
    require_non_negative(n_z, "n_z");
}

void LibrationSpec::validate() const {
    require_non_negative(delta_omega, "delta_omega");
    require_non_negative(epsilon1, "epsilon1");
    require_non_negative(epsilon2, "epsilon2");
    if (!(phi0 >= 0.0 && phi0 < two_pi)) {
        throw std::invalid_argument("phi0 must lie in [0, 2 pi)");
    }
    if (temperature) {
        require_non_negative(*temperature, "libration temperature");
    }
}

namespace reference {
ParticleSpec particle() { return ParticleSpec(mass_kg, radius_m); }
TrapSpec trap() { return TrapSpec::from_hz(fx_hz, fy_hz, fz_hz); }
}  // namespace reference

double quantum_limited_width(const ParticleSpec& particle, const TrapSpec& trap) {
    return std::sqrt(zero_point_scale(particle, trap));
}

double velocity_width(const ParticleSpec& particle, const TrapSpec& trap, double n_z,
                      double epsilon2_delta_omega) {
    require_non_negative(n_z, "n_z");
    const double translational = zero_point_scale(particle, trap) * (2.0 * n_z + 1.0);
    const double librational = 2.0 * epsilon2_delta_omega * epsilon2_delta_omega;
    return std::sqrt(translational + librational);
}

double velocity_width(const ParticleSpec& particle, const TrapSpec& trap, double n_z,
                      const LibrationSpec& libration) {
    return velocity_width(particle, trap, n_z, libration.epsilon2_delta_omega());
}

double occupation_from_width(double width, const ParticleSpec& particle, const TrapSpec& trap) {
    if (!std::isfinite(width) || width <= 0.0) {
        throw InvalidMeasurement("velocity width must be positive and finite");
    }
    const double limit = quantum_limited_width(particle, trap);
    if (width < limit * (1.0 - sub_quantum_tolerance)) {
        throw InvalidMeasurement("velocity width " + std::to_string(width) +
                                 " m/s is below the quantum limit " + std::to_string(limit) +
                                 " m/s");
    }
    const double ratio = width * width / zero_point_scale(particle, trap);
    return std::max(0.0, 0.5 * (ratio - 1.0));
}

double thermal_velocity_sigma(const ParticleSpec& particle, const TrapSpec& trap, double n_z) {
    require_non_negative(n_z, "n_z");
    return std::sqrt(zero_point_scale(particle, trap) * (2.0 * n_z + 1.0) / 2.0);
}

double sphere_moment_of_inertia(const ParticleSpec& particle) {
    return 0.4 * particle.mass() * particle.radius() * particle.radius();
}

double delta_omega_from_temperature(double temperature, const ParticleSpec& particle) {
    require_non_negative(temperature, "temperature");
    return std::sqrt(PhysicalConstants::k_B * temperature / sphere_moment_of_inertia(particle));
}

double residual_broadening_fraction(double epsilon2, double temperature,
                                    const ParticleSpec& particle, const TrapSpec& trap) {
    require_non_negative(epsilon2, "epsilon2");
    const double delta_omega = delta_omega_from_temperature(temperature, particle);
    const double broadened = velocity_width(particle, trap, 0.0, epsilon2 * delta_omega);
    return broadened / quantum_limited_width(particle, trap) - 1.0;
}

}  // namespace levtof
