#pragma once

#include "levtof/core.hpp"
#include "levtof/tof_sim.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace levtof {

double displacement_to_velocity(double delta_z, const TofProtocol& protocol);
std::vector<double> displacements_to_velocities(std::span<const double> delta_z,
                                                const TofProtocol& protocol);

struct Histogram {
    std::vector<double> edges;  // strictly increasing, size = counts.size() + 1
    std::vector<std::uint64_t> counts;

    std::size_t bins() const { return counts.size(); }
    std::uint64_t total() const;
};

struct BinCount {
    std::size_t bins;
};
struct BinWidth {
    double width;
};
/// monostate selects the Freedman–Diaconis rule.
using Binning = std::variant<std::monostate, BinCount, BinWidth>;

/// Freedman–Diaconis bin count for the samples; throws DegenerateDataError
/// when the interquartile range is zero.
std::size_t freedman_diaconis_bins(std::span<const double> samples);

/// Histogram covering [min, max] of the samples (last bin closed on the right).
Histogram build_histogram(std::span<const double> samples, Binning binning = {});

/// Gaussian fit in the Δv = sqrt(2)·σ convention of f(v) ∝ exp(-(v-c)^2/Δv^2).
struct GaussianFitResult {
    std::size_t n = 0;
    double center = 0.0;
    double width_dv = 0.0;
    double center_err = 0.0;
    double width_err = 0.0;
    double goodness = 0.0;  // reduced chi-square against the FD histogram; NaN if unavailable

    double sigma() const;
};

inline constexpr std::size_t min_fit_samples = 10;

/// Maximum-likelihood normal fit on raw samples. Errors from the observed
/// information: center_err = σ/√N, width_err = σ/√N.
GaussianFitResult fit_gaussian(std::span<const double> samples);

/// MLE width only (no goodness histogram); used inside resampling loops.
double mle_width(std::span<const double> samples);

struct MomentSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double mean_err = 0.0;
    double std_err = 0.0;
    double skewness_err = 0.0;  // sqrt(6/N), Gaussian reference
    double kurtosis_err = 0.0;  // sqrt(24/N), Gaussian reference

    double skewness_z() const { return skewness / skewness_err; }
    double kurtosis_z() const { return excess_kurtosis / kurtosis_err; }
};

MomentSummary compute_moments(std::span<const double> samples);

/// Standard deviation of the MLE width over nonparametric bootstrap resamples.
double bootstrap_width_error(std::span<const double> samples, std::size_t n_resamples,
                             std::uint64_t seed, unsigned threads = 0);

struct ConvergencePoint {
    std::size_t n = 0;
    double center = 0.0;
    double width = 0.0;
    double width_err = 0.0;  // bootstrap
};

/// Fits seeded without-replacement subsets (original order kept) of each size.
/// A size equal to the sample count uses the full set.
std::vector<ConvergencePoint> convergence_study(std::span<const double> samples,
                                               std::span<const std::size_t> subset_sizes,
                                               std::size_t n_resamples, std::uint64_t seed,
                                               unsigned threads = 0);

struct WidthCurvePoint {
    double n_z = 0.0;
    double width = 0.0;
    double width_err = 0.0;  // 0 means "unknown": unit weight
};

struct WidthCurveFit {
    double epsilon2_delta_omega = 0.0;  // m/s
    double epsilon2_delta_omega_err = 0.0;
    double variance_term = 0.0;  // (eps2 Δω)^2, the linear fit parameter, m^2/s^2
    double variance_term_err = 0.0;
    double reduced_chi2 = 0.0;
    std::size_t points = 0;
    bool clamped = false;  // variance_term < 0 but consistent with zero
};

/// Weighted least squares of Δv(n_z) = sqrt(ħΩ_z(2n_z+1)/m + 2(ε₂Δω)²) with
/// ε₂Δω as the only free parameter. `systematic_fraction` adds a fractional
/// width error in quadrature to each point. Throws FitError when no
/// non-negative (ε₂Δω)² is compatible with the data.
WidthCurveFit fit_width_curve(std::span<const WidthCurvePoint> points,
                              const ParticleSpec& particle, const TrapSpec& trap,
                              double systematic_fraction = 0.0);

struct Epsilon2Estimate {
    double epsilon2 = 0.0;
    double epsilon2_err = 0.0;
};

/// ε₂ = (ε₂Δω)/Δω with relative errors added in quadrature.
Epsilon2Estimate epsilon2_from_product(const WidthCurveFit& fit, double delta_omega,
                                       double delta_omega_err = 0.0);

}  // namespace levtof
