#pragma once

#include "levtof/signal.hpp"
#include "levtof/tof_sim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace levtof::cli {

struct AnalyzeSection {
    std::filesystem::path input;  // trials.csv or a velocity table
    std::string column = "auto";  // auto | delta_z_m | velocity_mps
    std::size_t bins = 0;         // 0: Freedman–Diaconis
    std::size_t bootstrap_resamples = 200;
};

struct SweepSection {
    std::vector<double> n_z = {0.0, 0.4, 0.87, 1.5, 2.5, 4.0};
    std::uint64_t trials_per_point = 10000;
    bool with_libration = true;
    double systematic_fraction = 0.0;
};

struct LibrationCenterSection {
    double a_m = 174e-9;
    std::vector<double> c_over_a = {1.0, 1.0001, 1.001, 1.005, 1.01, 1.02, 1.05};
    double spread_threshold = 0.05;
};

struct SignalSection {
    double sample_rate_hz = 5e6;
    double duration_s = 1e-3;
    double noise_fraction = 0.1;         // of the campaign RMS displacement
    std::optional<double> noise_rms_m;   // overrides noise_fraction
    FilterSpec filter;
    double edge_fraction = 0.15;
    std::uint64_t traces_to_write = 0;   // first k traces saved as CSV
};

/// Everything a run needs; defaults are the reference particle and trap.
struct RunConfig {
    std::uint64_t seed = 1;
    std::uint64_t n_trials = 150;
    std::filesystem::path output_dir = "levtof-out";
    unsigned threads = 0;

    double mass_kg = reference::mass_kg;
    double radius_m = reference::radius_m;
    double fx_hz = reference::fx_hz;
    double fy_hz = reference::fy_hz;
    double fz_hz = reference::fz_hz;
    MotionalState motion;

    double delta_omega_hz = 0.0;
    std::optional<double> libration_temperature_k;
    double phi0_rad = std::numbers::pi / 2.0;
    double epsilon1_m = 0.0;
    double epsilon2_m = 0.0;
    std::optional<double> epsilon2_delta_omega_mps;  // sets ε₂ from the product when given

    TofProtocol protocol{reference::t_tof_s, reference::center_offset_m};
    ModelKind model = ModelKind::Pure;

    AnalyzeSection analyze;
    SweepSection sweep;
    LibrationCenterSection libration_center;
    SignalSection signal;

    ParticleSpec particle() const;
    TrapSpec trap() const;
    /// Δω in rad/s, from delta_omega_hz or the libration temperature.
    double delta_omega() const;
    LibrationSpec libration() const;
    CampaignConfig campaign() const;
};

/// Parses YAML text. Unknown keys, wrong types and out-of-range values raise
/// ConfigError carrying the 1-based line of the offending node.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved config, every field spelled out; floats at 17 digits.
std::string effective_config_yaml(const RunConfig& config);

}  // namespace levtof::cli
