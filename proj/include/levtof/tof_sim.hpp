#pragma once

#include "levtof/core.hpp"
#include "levtof/detail/parallel.hpp"
#include "levtof/rng.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace levtof {

/// Release-and-recapture timing. `center_offset` is the constant shift of Δz
/// from residual-light radiation pressure.
struct TofProtocol {
    double t_tof = reference::t_tof_s;
    double center_offset = 0.0;

    void validate() const;
};

/// Warnings for protocols where Ω_z t_tof is not large (< 10).
std::vector<std::string> protocol_warnings(const TofProtocol& protocol, const TrapSpec& trap);

// Rigid-body displacement models.
struct PureTranslation {};
/// Observed point is an optical centre offset by epsilon1 from the COM.
struct OpticalCenterModel {
    double epsilon1 = 0.0;
};
/// Observed point is the COM; the libration centre sits epsilon2 away.
struct LibrationCenterModel {
    double epsilon2 = 0.0;
};

using ModelSelector = std::variant<PureTranslation, OpticalCenterModel, LibrationCenterModel>;

enum class ModelKind { Pure, OpticalCenter, LibrationCenter };

ModelKind model_kind(const ModelSelector& model);
std::string_view model_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);  // throws std::invalid_argument
/// Builds the selector for `kind`, taking the offset from `libration`.
ModelSelector make_model(ModelKind kind, const LibrationSpec& libration);

struct InitialConditions {
    double v0 = 0.0;
    double omega0 = 0.0;
};

struct TofTrial {
    std::uint64_t index = 0;
    double v0 = 0.0;
    double omega0 = 0.0;
    double delta_z = 0.0;
};

struct CampaignConfig {
    std::uint64_t n_trials = 150;
    std::uint64_t seed = 1;
    ParticleSpec particle = reference::particle();
    TrapSpec trap = reference::trap();
    MotionalState motion;
    LibrationSpec libration;
    TofProtocol protocol;
    ModelSelector model = PureTranslation{};
    unsigned threads = 0;  // 0: hardware concurrency; never changes results

    void validate() const;
};

/// Independent draws v0 ~ N(0, sigma_v^2), omega0 ~ N(0, delta_omega^2), in that order.
InitialConditions sample_initial_conditions(Rng& rng, double sigma_v, double delta_omega);

/// Optical-centre displacement:
/// v0 t + e1 w0 t sin(phi0) + e1 [cos(phi0 + w0 t) - cos(phi0)].
double displacement_model1(double v0, double omega0, double epsilon1, double phi0, double t_tof);

/// COM displacement: v0 t + e2 w0 t sin(phi0).
double displacement_model2(double v0, double omega0, double epsilon2, double phi0, double t_tof);

/// Displacement for whichever model is selected (without the centre offset).
double displacement(const ModelSelector& model, const InitialConditions& ic, double phi0,
                    double t_tof);

/// Runs one release-and-recapture trial; depends only on (config, index).
TofTrial run_trial(const CampaignConfig& config, std::uint64_t index);

/// Trials sorted by index; identical config and seed give bit-identical output
/// regardless of the thread count.
std::vector<TofTrial> run_campaign(const CampaignConfig& config);

}  // namespace levtof
