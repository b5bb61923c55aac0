#include "levtof/cli/config.hpp"

#include "levtof/errors.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace levtof::cli {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : -1; }

[[noreturn]] void fail(const std::string& origin, int line, const std::string& message) {
    if (line > 0) throw ConfigError(fmt::format("{}:{}: {}", origin, line, message), line);
    throw ConfigError(fmt::format("{}: {}", origin, message), line);
}

using Check = std::function<bool(double)>;
const Check positive = [](double v) { return v > 0.0; };
const Check non_negative = [](double v) { return v >= 0.0; };
const Check finite = [](double v) { return std::isfinite(v); };

// A YAML mapping whose keys are checked against a fixed vocabulary.
class Section {
public:
    Section(const YAML::Node& node, std::string path, std::set<std::string> keys, const std::string& origin)
        : node_(node), path_(std::move(path)), origin_(origin) {
        if (!node_.IsMap()) fail(origin_, line_of(node_), fmt::format("'{}' must be a mapping", path_));
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!keys.count(key)) {
                fail(origin_, line_of(kv.first), fmt::format("unknown key '{}{}'", prefix(), key));
            }
        }
    }

    int line() const { return line_of(node_); }
    bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }
    YAML::Node child(const std::string& key) const { return node_[key]; }
    std::string name(const std::string& key) const { return prefix() + key; }

    void number(const std::string& key, double& target, const Check& check = finite,
                const char* requirement = "a finite number") const {
        const YAML::Node v = node_[key];
        if (!v) return;
        double value = 0.0;
        try {
            if (!v.IsScalar()) throw YAML::BadConversion(v.Mark());
            value = v.as<double>();
        } catch (const YAML::BadConversion&) {
            fail(origin_, line_of(v), fmt::format("'{}' must be a number", name(key)));
        }
        if (!std::isfinite(value) || !check(value)) {
            fail(origin_, line_of(v), fmt::format("'{}' must be {}", name(key), requirement));
        }
        target = value;
    }

    void optional_number(const std::string& key, std::optional<double>& target, const Check& check,
                         const char* requirement) const {
        const YAML::Node v = node_[key];
        if (!v || v.IsNull()) return;
        double value = 0.0;
        number(key, value, check, requirement);
        target = value;
    }

    template <class Int>
    void integer(const std::string& key, Int& target, std::uint64_t min = 0,
                 std::uint64_t max = std::numeric_limits<std::uint64_t>::max()) const {
        const YAML::Node v = node_[key];
        if (!v) return;
        std::uint64_t value = 0;
        bool ok = v.IsScalar() && !v.Scalar().empty() && v.Scalar()[0] != '-';
        if (ok) {
            try {
                value = v.as<std::uint64_t>();
            } catch (const YAML::BadConversion&) {
                ok = false;
            }
        }
        if (!ok) fail(origin_, line_of(v), fmt::format("'{}' must be a non-negative integer", name(key)));
        if (value < min || value > max) {
            fail(origin_, line_of(v), fmt::format("'{}' must lie in [{}, {}]", name(key), min, max));
        }
        target = static_cast<Int>(value);
    }

    void boolean(const std::string& key, bool& target) const {
        const YAML::Node v = node_[key];
        if (!v) return;
        try {
            target = v.as<bool>();
        } catch (const YAML::BadConversion&) {
            fail(origin_, line_of(v), fmt::format("'{}' must be true or false", name(key)));
        }
    }

    void text(const std::string& key, std::string& target) const {
        const YAML::Node v = node_[key];
        if (!v) return;
        if (!v.IsScalar()) fail(origin_, line_of(v), fmt::format("'{}' must be a string", name(key)));
        target = v.Scalar();
    }

    void number_list(const std::string& key, std::vector<double>& target, const Check& check,
                     const char* requirement) const {
        const YAML::Node v = node_[key];
        if (!v) return;
        if (!v.IsSequence()) fail(origin_, line_of(v), fmt::format("'{}' must be a list of numbers", name(key)));
        std::vector<double> values;
        for (const auto& item : v) {
            double value = 0.0;
            try {
                value = item.as<double>();
            } catch (const YAML::BadConversion&) {
                fail(origin_, line_of(item), fmt::format("'{}' entries must be numbers", name(key)));
            }
            if (!std::isfinite(value) || !check(value)) {
                fail(origin_, line_of(item), fmt::format("'{}' entries must be {}", name(key), requirement));
            }
            values.push_back(value);
        }
        target = std::move(values);
    }

    Section sub(const std::string& key, std::set<std::string> keys) const {
        return Section(node_[key], prefix() + key, std::move(keys), origin_);
    }

    const std::string& origin() const { return origin_; }

private:
    std::string prefix() const { return path_.empty() ? "" : path_ + "."; }

    YAML::Node node_;
    std::string path_;
    const std::string& origin_;
};

void parse_sections(const Section& root, RunConfig& cfg) {
    const std::string& origin = root.origin();
    root.integer("seed", cfg.seed);
    root.integer("n_trials", cfg.n_trials, 1, 100'000'000);
    root.integer("threads", cfg.threads, 0, 1024);
    if (root.has("output_dir")) {
        std::string dir;
        root.text("output_dir", dir);
        if (dir.empty()) fail(origin, line_of(root.child("output_dir")), "'output_dir' must not be empty");
        cfg.output_dir = dir;
    }
    if (root.has("model")) {
        std::string model;
        root.text("model", model);
        try {
            cfg.model = parse_model_kind(model);
        } catch (const std::invalid_argument& ex) {
            fail(origin, line_of(root.child("model")), ex.what());
        }
    }

    if (root.has("particle")) {
        const Section s = root.sub("particle", {"mass_kg", "radius_m"});
        s.number("mass_kg", cfg.mass_kg, positive, "positive");
        s.number("radius_m", cfg.radius_m, positive, "positive");
    }
    if (root.has("trap")) {
        const Section s = root.sub("trap", {"fx_hz", "fy_hz", "fz_hz"});
        s.number("fx_hz", cfg.fx_hz, positive, "positive");
        s.number("fy_hz", cfg.fy_hz, positive, "positive");
        s.number("fz_hz", cfg.fz_hz, positive, "positive");
    }
    if (root.has("motion")) {
        const Section s = root.sub("motion", {"n_x", "n_y", "n_z"});
        s.number("n_x", cfg.motion.n_x, non_negative, "non-negative");
        s.number("n_y", cfg.motion.n_y, non_negative, "non-negative");
        s.number("n_z", cfg.motion.n_z, non_negative, "non-negative");
    }
    if (root.has("libration")) {
        const Section s = root.sub("libration", {"delta_omega_hz", "temperature_k", "phi0_rad", "epsilon1_m",
                                                 "epsilon2_m", "epsilon2_delta_omega_mps"});
        s.number("delta_omega_hz", cfg.delta_omega_hz, non_negative, "non-negative");
        s.optional_number("temperature_k", cfg.libration_temperature_k, positive, "positive");
        s.number("phi0_rad", cfg.phi0_rad);
        s.number("epsilon1_m", cfg.epsilon1_m);
        s.number("epsilon2_m", cfg.epsilon2_m);
        s.optional_number("epsilon2_delta_omega_mps", cfg.epsilon2_delta_omega_mps, finite, "a finite number");
        if (s.has("delta_omega_hz") && cfg.libration_temperature_k) {
            fail(origin, s.line(), "'libration' sets both delta_omega_hz and temperature_k; give one");
        }
        if (cfg.epsilon2_delta_omega_mps) {
            if (s.has("epsilon2_m")) {
                fail(origin, s.line(), "'libration' sets both epsilon2_m and epsilon2_delta_omega_mps; give one");
            }
            if (!(cfg.delta_omega() > 0.0) && *cfg.epsilon2_delta_omega_mps != 0.0) {
                fail(origin, line_of(s.child("epsilon2_delta_omega_mps")),
                     "'libration.epsilon2_delta_omega_mps' needs a positive delta_omega_hz or temperature_k");
            }
        }
    }
    if (root.has("protocol")) {
        const Section s = root.sub("protocol", {"t_tof_s", "center_offset_m"});
        s.number("t_tof_s", cfg.protocol.t_tof, positive, "positive");
        s.number("center_offset_m", cfg.protocol.center_offset);
    }
    if (root.has("analyze")) {
        const Section s = root.sub("analyze", {"input", "column", "bins", "bootstrap_resamples"});
        if (s.has("input")) {
            std::string input;
            s.text("input", input);
            cfg.analyze.input = input;
        }
        s.text("column", cfg.analyze.column);
        if (cfg.analyze.column != "auto" && cfg.analyze.column != "delta_z_m" &&
            cfg.analyze.column != "velocity_mps") {
            fail(origin, line_of(s.child("column")), "'analyze.column' must be auto, delta_z_m or velocity_mps");
        }
        s.integer("bins", cfg.analyze.bins, 0, 100000);
        s.integer("bootstrap_resamples", cfg.analyze.bootstrap_resamples, 100, 1'000'000);
    }
    if (root.has("sweep")) {
        const Section s = root.sub("sweep", {"n_z", "trials_per_point", "with_libration", "systematic_fraction"});
        s.number_list("n_z", cfg.sweep.n_z, non_negative, "non-negative");
        s.integer("trials_per_point", cfg.sweep.trials_per_point, 10, 100'000'000);
        s.boolean("with_libration", cfg.sweep.with_libration);
        s.number("systematic_fraction", cfg.sweep.systematic_fraction, non_negative, "non-negative");
    }
    if (root.has("libration_center")) {
        const Section s = root.sub("libration_center", {"a_m", "c_over_a", "spread_threshold"});
        s.number("a_m", cfg.libration_center.a_m, positive, "positive");
        s.number_list("c_over_a", cfg.libration_center.c_over_a, [](double v) { return v >= 1.0; }, ">= 1");
        s.number("spread_threshold", cfg.libration_center.spread_threshold, positive, "positive");
    }
    if (root.has("signal")) {
        const Section s = root.sub("signal", {"sample_rate_hz", "duration_s", "noise_fraction", "noise_rms_m",
                                              "edge_fraction", "traces_to_write", "filter"});
        SignalSection& sig = cfg.signal;
        s.number("sample_rate_hz", sig.sample_rate_hz, positive, "positive");
        s.number("duration_s", sig.duration_s, positive, "positive");
        s.number("noise_fraction", sig.noise_fraction, non_negative, "non-negative");
        s.optional_number("noise_rms_m", sig.noise_rms_m, non_negative, "non-negative");
        s.number("edge_fraction", sig.edge_fraction, [](double v) { return v >= 0.0 && v < 0.5; }, "in [0, 0.5)");
        s.integer("traces_to_write", sig.traces_to_write, 0, 1000);
        if (s.has("filter")) {
            const Section f = s.sub("filter", {"highpass_hz", "lowpass_hz", "order", "family"});
            f.number("highpass_hz", sig.filter.highpass_cutoff, positive, "positive");
            f.number("lowpass_hz", sig.filter.lowpass_cutoff, positive, "positive");
            f.integer("order", sig.filter.order, 2, 8);
            std::string family = "butterworth";
            f.text("family", family);
            if (family != "butterworth") {
                fail(origin, line_of(f.child("family")), "'signal.filter.family' must be butterworth");
            }
            if (!(sig.filter.highpass_cutoff < sig.filter.lowpass_cutoff)) {
                fail(origin, f.line(), "'signal.filter' needs highpass_hz < lowpass_hz");
            }
        }
        const int line = s.line();
        if (!(sig.sample_rate_hz > 2.0 * cfg.fz_hz)) {
            fail(origin, line, fmt::format("'signal.sample_rate_hz' {} undersamples the {} Hz oscillation",
                                           sig.sample_rate_hz, cfg.fz_hz));
        }
        if (!(sig.filter.lowpass_cutoff < 0.5 * sig.sample_rate_hz)) {
            fail(origin, line, "'signal.filter.lowpass_hz' must be below Nyquist");
        }
        if (!(sig.duration_s * cfg.fz_hz >= 10.0)) {
            fail(origin, line, "'signal.duration_s' must cover at least 10 oscillation periods");
        }
    }
}

void check_physics(const RunConfig& cfg, const std::string& origin) {
    try {
        cfg.campaign().validate();
    } catch (const std::invalid_argument& ex) {
        fail(origin, -1, ex.what());
    }
}

std::string yaml_double(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

ParticleSpec RunConfig::particle() const { return ParticleSpec(mass_kg, radius_m); }

TrapSpec RunConfig::trap() const { return TrapSpec::from_hz(fx_hz, fy_hz, fz_hz); }

double RunConfig::delta_omega() const {
    if (libration_temperature_k) return delta_omega_from_temperature(*libration_temperature_k, particle());
    return angular_from_hz(delta_omega_hz);
}

LibrationSpec RunConfig::libration() const {
    LibrationSpec lib;
    lib.delta_omega = delta_omega();
    lib.phi0 = phi0_rad;
    lib.epsilon1 = epsilon1_m;
    lib.epsilon2 = epsilon2_m;
    if (epsilon2_delta_omega_mps) {
        lib.epsilon2 = lib.delta_omega > 0.0 ? *epsilon2_delta_omega_mps / lib.delta_omega : 0.0;
    }
    lib.temperature = libration_temperature_k;
    return lib;
}

CampaignConfig RunConfig::campaign() const {
    CampaignConfig c;
    c.n_trials = n_trials;
    c.seed = seed;
    c.particle = particle();
    c.trap = trap();
    c.motion = motion;
    c.libration = libration();
    c.protocol = protocol;
    c.model = make_model(model, c.libration);
    c.threads = threads;
    return c;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    YAML::Node doc;
    try {
        doc = YAML::Load(text);
    } catch (const YAML::ParserException& ex) {
        fail(origin, ex.mark.line + 1, ex.msg);
    }
    RunConfig cfg;
    if (doc.IsNull()) return cfg;
    const Section root(doc, "",
                       {"seed", "n_trials", "output_dir", "threads", "model", "particle", "trap", "motion",
                        "libration", "protocol", "analyze", "sweep", "libration_center", "signal"},
                       origin);
    parse_sections(root, cfg);
    check_physics(cfg, origin);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

std::string effective_config_yaml(const RunConfig& c) {
    YAML::Emitter out;
    const auto num = [&out](const char* key, double v) { out << YAML::Key << key << YAML::Value << yaml_double(v); };
    const auto num_list = [&out](const char* key, const std::vector<double>& values) {
        out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (double v : values) out << yaml_double(v);
        out << YAML::EndSeq;
    };
    out << YAML::BeginMap;
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::Key << "n_trials" << YAML::Value << c.n_trials;
    out << YAML::Key << "output_dir" << YAML::Value << c.output_dir.string();
    out << YAML::Key << "threads" << YAML::Value << c.threads;
    out << YAML::Key << "model" << YAML::Value << std::string(model_name(c.model));

    out << YAML::Key << "particle" << YAML::Value << YAML::BeginMap;
    num("mass_kg", c.mass_kg);
    num("radius_m", c.radius_m);
    out << YAML::EndMap;

    out << YAML::Key << "trap" << YAML::Value << YAML::BeginMap;
    num("fx_hz", c.fx_hz);
    num("fy_hz", c.fy_hz);
    num("fz_hz", c.fz_hz);
    out << YAML::EndMap;

    out << YAML::Key << "motion" << YAML::Value << YAML::BeginMap;
    num("n_x", c.motion.n_x);
    num("n_y", c.motion.n_y);
    num("n_z", c.motion.n_z);
    out << YAML::EndMap;

    // Resolved values: Δω and ε₂ are written in their final form.
    const LibrationSpec lib = c.libration();
    out << YAML::Key << "libration" << YAML::Value << YAML::BeginMap;
    num("delta_omega_hz", hz_from_angular(lib.delta_omega));
    num("phi0_rad", lib.phi0);
    num("epsilon1_m", lib.epsilon1);
    num("epsilon2_m", lib.epsilon2);
    out << YAML::EndMap;

    out << YAML::Key << "protocol" << YAML::Value << YAML::BeginMap;
    num("t_tof_s", c.protocol.t_tof);
    num("center_offset_m", c.protocol.center_offset);
    out << YAML::EndMap;

    out << YAML::Key << "analyze" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "input" << YAML::Value << c.analyze.input.string();
    out << YAML::Key << "column" << YAML::Value << c.analyze.column;
    out << YAML::Key << "bins" << YAML::Value << c.analyze.bins;
    out << YAML::Key << "bootstrap_resamples" << YAML::Value << c.analyze.bootstrap_resamples;
    out << YAML::EndMap;

    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    num_list("n_z", c.sweep.n_z);
    out << YAML::Key << "trials_per_point" << YAML::Value << c.sweep.trials_per_point;
    out << YAML::Key << "with_libration" << YAML::Value << c.sweep.with_libration;
    num("systematic_fraction", c.sweep.systematic_fraction);
    out << YAML::EndMap;

    out << YAML::Key << "libration_center" << YAML::Value << YAML::BeginMap;
    num("a_m", c.libration_center.a_m);
    num_list("c_over_a", c.libration_center.c_over_a);
    num("spread_threshold", c.libration_center.spread_threshold);
    out << YAML::EndMap;

    out << YAML::Key << "signal" << YAML::Value << YAML::BeginMap;
    num("sample_rate_hz", c.signal.sample_rate_hz);
    num("duration_s", c.signal.duration_s);
    num("noise_fraction", c.signal.noise_fraction);
    if (c.signal.noise_rms_m) num("noise_rms_m", *c.signal.noise_rms_m);
    num("edge_fraction", c.signal.edge_fraction);
    out << YAML::Key << "traces_to_write" << YAML::Value << c.signal.traces_to_write;
    out << YAML::Key << "filter" << YAML::Value << YAML::BeginMap;
    num("highpass_hz", c.signal.filter.highpass_cutoff);
    num("lowpass_hz", c.signal.filter.lowpass_cutoff);
    out << YAML::Key << "order" << YAML::Value << c.signal.filter.order;
    out << YAML::Key << "family" << YAML::Value << "butterworth";
    out << YAML::EndMap;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace levtof::cli
