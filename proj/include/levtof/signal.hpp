#pragma once

#include "levtof/core.hpp"
#include "levtof/rng.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace levtof {

enum class SignalUnit { Meters, Volts };

std::string unit_name(SignalUnit unit);

/// Uniformly sampled trace; sample k sits at t = k / sample_rate.
struct TimeSeries {
    double sample_rate = 0.0;  // Hz
    std::vector<double> samples;
    SignalUnit unit = SignalUnit::Meters;

    double duration() const { return samples.size() / sample_rate; }
};

enum class FilterFamily { Butterworth };

struct FilterSpec {
    double highpass_cutoff = 150e3;  // Hz
    double lowpass_cutoff = 250e3;   // Hz
    int order = 4;                   // prototype order; the bandpass has 2·order poles
    FilterFamily family = FilterFamily::Butterworth;

    void validate() const;
};

/// One biquad: b0 b1 b2 a0 a1 a2 with a0 = 1.
using SosSection = std::array<double, 6>;

/// Digital Butterworth bandpass as second-order sections (bilinear transform
/// with prewarped band edges; poles paired with nearest zeros, the sections
/// closest to the unit circle last; overall gain folded into the first).
std::vector<SosSection> design_bandpass(const FilterSpec& spec, double sample_rate);

/// Complex response magnitude of the cascade at frequency f (single pass).
double sos_gain(const std::vector<SosSection>& sos, double frequency, double sample_rate);

/// Single forward pass through the cascade, direct form II transposed.
std::vector<double> sos_filter(const std::vector<SosSection>& sos, std::span<const double> x);

/// Zero-phase forward-backward filtering with odd extension at both ends and
/// steady-state initial conditions.
std::vector<double> sos_filtfilt(const std::vector<SosSection>& sos, std::span<const double> x);

/// Zero-phase bandpass. Throws std::invalid_argument when a cutoff reaches
/// Nyquist or the trace is too short for the edge padding.
TimeSeries bandpass(const TimeSeries& ts, const FilterSpec& spec);

/// z(t) = Δz cos(Ω_z t) + (v_rec/Ω_z) sin(Ω_z t) + white noise of RMS noise_rms.
/// Rejects rate ≤ 2 f_z and durations under 10 oscillation periods.
TimeSeries synthesize_recapture(double delta_z, double v_rec, const TrapSpec& trap, double duration,
                                double rate, double noise_rms, Rng& rng);

struct ExtractOptions {
    double edge_fraction = 0.15;  // trimmed from each end before demodulating
    double min_snr = 3.0;
};

struct AmplitudeEstimate {
    double amplitude = 0.0;   // sqrt(I² + Q²)
    double in_phase = 0.0;    // signed cos(Ω_z t) coefficient: the displacement reading
    double quadrature = 0.0;  // sin(Ω_z t) coefficient
    double snr = 0.0;         // amplitude / residual RMS in the window
    bool low_confidence = false;
};

/// Demodulation at Ω_z over the trimmed window. The cos/sin products are
/// averaged and corrected by the 2×2 Gram matrix of the window, so a
/// non-integer number of cycles does not bias the estimate.
AmplitudeEstimate extract_amplitude(const TimeSeries& ts, const TrapSpec& trap,
                                    const ExtractOptions& options = {});

struct CalibrationResult {
    double meters_per_unit = 0.0;
    double q0 = 0.0;  // m
};

/// q0 = sqrt(2 k_B T / m) / Ω_z; meters_per_unit = q0 / sqrt(2 · variance).
CalibrationResult calibrate_equipartition(double measured_variance, double temperature,
                                          const ParticleSpec& particle, const TrapSpec& trap);

/// Two-column CSV: header `time_s,value_<unit>,sample_rate_hz=<rate>`.
void write_time_series_csv(const std::filesystem::path& path, const TimeSeries& ts);
TimeSeries read_time_series_csv(const std::filesystem::path& path);

}  // namespace levtof
