#include "levtof/tof_sim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace levtof {

void TofProtocol::validate() const {
    if (!(t_tof > 0.0) || !std::isfinite(t_tof)) {
        throw std::invalid_argument("t_tof must be positive and finite");
    }
    if (!std::isfinite(center_offset)) {
        throw std::invalid_argument("center_offset must be finite");
    }
}

std::vector<std::string> protocol_warnings(const TofProtocol& protocol, const TrapSpec& trap) {
    std::vector<std::string> warnings;
    const double product = trap.omega_z() * protocol.t_tof;
    if (product < 10.0) {
        warnings.push_back("Omega_z * t_tof = " + std::to_string(product) +
                           " < 10: initial position spread is not negligible after the flight");
    }
    return warnings;
}

ModelKind model_kind(const ModelSelector& model) {
    return static_cast<ModelKind>(model.index());
}

std::string_view model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Pure: return "pure";
        case ModelKind::OpticalCenter: return "optical_center";
        case ModelKind::LibrationCenter: return "libration_center";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "pure") return ModelKind::Pure;
    if (name == "optical_center" || name == "model1") return ModelKind::OpticalCenter;
    if (name == "libration_center" || name == "model2") return ModelKind::LibrationCenter;
    throw std::invalid_argument("unknown model '" + std::string(name) +
                                "' (expected pure, optical_center or libration_center)");
}

ModelSelector make_model(ModelKind kind, const LibrationSpec& libration) {
    switch (kind) {
        case ModelKind::Pure: return PureTranslation{};
        case ModelKind::OpticalCenter: return OpticalCenterModel{libration.epsilon1};
        case ModelKind::LibrationCenter: return LibrationCenterModel{libration.epsilon2};
    }
    throw std::invalid_argument("unknown model kind");
}

void CampaignConfig::validate() const {
    if (n_trials < 1) throw std::invalid_argument("n_trials must be at least 1");
    motion.validate();
    libration.validate();
    protocol.validate();
    std::visit(
        [](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, OpticalCenterModel>) {
                if (!(m.epsilon1 >= 0.0)) throw std::invalid_argument("epsilon1 must be >= 0");
            } else if constexpr (std::is_same_v<M, LibrationCenterModel>) {
                if (!(m.epsilon2 >= 0.0)) throw std::invalid_argument("epsilon2 must be >= 0");
            }
        },
        model);
}

InitialConditions sample_initial_conditions(Rng& rng, double sigma_v, double delta_omega) {
    if (!(sigma_v >= 0.0) || !(delta_omega >= 0.0)) {
        throw std::invalid_argument("sampling widths must be non-negative");
    }
    InitialConditions ic;
    ic.v0 = normal_draw(rng, sigma_v);
    ic.omega0 = normal_draw(rng, delta_omega);
    return ic;
}

double displacement_model1(double v0, double omega0, double epsilon1, double phi0, double t_tof) {
    const double angle = omega0 * t_tof;
    return v0 * t_tof + epsilon1 * angle * std::sin(phi0) +
           epsilon1 * (std::cos(phi0 + angle) - std::cos(phi0));
}

double displacement_model2(double v0, double omega0, double epsilon2, double phi0, double t_tof) {
    return v0 * t_tof + epsilon2 * omega0 * t_tof * std::sin(phi0);
}

double displacement(const ModelSelector& model, const InitialConditions& ic, double phi0,
                    double t_tof) {
    return std::visit(
        [&](const auto& m) -> double {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, OpticalCenterModel>) {
                return displacement_model1(ic.v0, ic.omega0, m.epsilon1, phi0, t_tof);
            } else if constexpr (std::is_same_v<M, LibrationCenterModel>) {
                return displacement_model2(ic.v0, ic.omega0, m.epsilon2, phi0, t_tof);
            } else {
                return ic.v0 * t_tof;
            }
        },
        model);
}

TofTrial run_trial(const CampaignConfig& config, std::uint64_t index) {
    const double sigma_v = thermal_velocity_sigma(config.particle, config.trap, config.motion.n_z);
    Rng rng = make_rng(config.seed, Stream::Campaign, index);
    const InitialConditions ic = sample_initial_conditions(rng, sigma_v, config.libration.delta_omega);
    TofTrial trial;
    trial.index = index;
    trial.v0 = ic.v0;
    trial.omega0 = ic.omega0;
    trial.delta_z = displacement(config.model, ic, config.libration.phi0, config.protocol.t_tof) +
                    config.protocol.center_offset;
    return trial;
}

std::vector<TofTrial> run_campaign(const CampaignConfig& config) {
    config.validate();
    std::vector<TofTrial> trials(config.n_trials);
    parallel_chunks(config.n_trials, config.threads, [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) trials[i] = run_trial(config, i);
    });
    return trials;
}

}  // namespace levtof
