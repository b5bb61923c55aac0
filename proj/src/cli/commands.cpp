#include "levtof/cli/commands.hpp"

#include "levtof/analysis.hpp"
#include "levtof/errors.hpp"
#include "levtof/libration_geometry.hpp"
#include "levtof/signal.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <memory>
#include <sstream>

namespace levtof::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Campaign seeds for sweep points, independent of the trial streams.
constexpr std::uint64_t sweep_seed_salt = 0x5357454550ULL;

class OutputDir {
public:
    explicit OutputDir(const Invocation& inv) : inv_(inv), root_(inv.config.output_dir) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) throw IoError(fmt::format("cannot create output directory {}: {}", root_.string(), ec.message()));
        write("config.yaml", inv.config_text);
        effective_ = effective_config_yaml(inv.config);
        write("effective_config.yaml", effective_);
    }

    void write(const std::string& name, const std::string& contents) {
        const fs::path path = root_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        out << contents;
        out.close();
        if (!out) throw IoError("write failed for " + path.string());
        files_.push_back(name);
    }

    fs::path path(const std::string& name) const { return root_ / name; }
    void record(const std::string& name) { files_.push_back(name); }

    // Written last: its presence marks a completed run.
    CommandResult finish(CommandResult result) {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm utc{};
        gmtime_r(&now, &utc);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);

        json manifest;
        manifest["toolkit"] = "levtof";
        manifest["version"] = toolkit_version;
        manifest["command"] = inv_.command;
        manifest["timestamp"] = stamp;
        manifest["seed"] = inv_.config.seed;
        manifest["config_sha256"] = sha256_hex(effective_);
        json checksums = json::object();
        for (const auto& name : files_) checksums[name] = sha256_file(root_ / name);
        manifest["files"] = checksums;
        manifest["warnings"] = result.warnings;
        manifest["exit_code"] = result.exit_code;
        const auto names = files_;
        write("manifest.json", manifest.dump(2) + "\n");
        result.files = names;
        result.files.push_back("manifest.json");
        return result;
    }

private:
    const Invocation& inv_;
    fs::path root_;
    std::string effective_;
    std::vector<std::string> files_;
};

json moments_json(const MomentSummary& m) {
    return json{{"mean", m.mean},
                {"std", m.std},
                {"skewness", m.skewness},
                {"skewness_err", m.skewness_err},
                {"skewness_z", m.skewness_z()},
                {"excess_kurtosis", m.excess_kurtosis},
                {"kurtosis_err", m.kurtosis_err},
                {"kurtosis_z", m.kurtosis_z()}};
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
}

// Reads one numeric column from a headered CSV; malformed rows are reported
// with their 1-based line number.
std::vector<double> read_column(const fs::path& path, std::string& column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    const auto header = split_csv(line);
    std::vector<std::string> names;
    for (const auto& h : header) names.push_back(trim(h));

    const auto find = [&names](const std::string& name) -> long {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) return static_cast<long>(i);
        }
        return -1;
    };
    long index = -1;
    if (column == "auto") {
        for (const char* candidate : {"velocity_mps", "delta_z_m"}) {
            index = find(candidate);
            if (index >= 0) {
                column = candidate;
                break;
            }
        }
        if (index < 0) throw IoError(path.string() + ":1: header has neither velocity_mps nor delta_z_m");
    } else {
        index = find(column);
        if (index < 0) throw IoError(fmt::format("{}:1: header has no column '{}'", path.string(), column));
    }

    std::vector<double> values;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != names.size()) {
            throw IoError(fmt::format("{}:{}: expected {} columns, found {}", path.string(), row, names.size(),
                                      cells.size()));
        }
        const std::string cell = trim(cells[static_cast<std::size_t>(index)]);
        double value = 0.0;
        std::size_t used = 0;
        try {
            value = std::stod(cell, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != cell.size() || cell.empty() || !std::isfinite(value)) {
            throw IoError(fmt::format("{}:{}: malformed value '{}' in column {}", path.string(), row, cell, column));
        }
        values.push_back(value);
    }
    return values;
}

void require_sweep_points(const RunConfig& cfg) {
    if (cfg.sweep.n_z.size() < 2) throw ConfigError("sweep needs at least two n_z values");
}

}  // namespace

std::string format_float(double v) { return fmt::format("{:.17g}", v); }

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
        throw IoError("SHA-256 computation failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return sha256_hex(buffer.str());
}

CommandResult cmd_simulate(const Invocation& inv) {
    const RunConfig& cfg = inv.config;
    const CampaignConfig campaign = cfg.campaign();
    CommandResult result;
    result.warnings = protocol_warnings(campaign.protocol, campaign.trap);
    const auto trials = run_campaign(campaign);

    OutputDir out(inv);
    std::string csv = "trial_index,v0_mps,omega0_radps,delta_z_m\n";
    for (const auto& t : trials) {
        csv += fmt::format("{},{},{},{}\n", t.index, format_float(t.v0), format_float(t.omega0),
                           format_float(t.delta_z));
    }
    out.write("trials.csv", csv);
    return out.finish(result);
}

CommandResult cmd_analyze(const Invocation& inv) {
    const RunConfig& cfg = inv.config;
    if (cfg.analyze.input.empty()) throw ConfigError("analyze needs an input file (analyze.input or --input)");
    std::string column = cfg.analyze.column;
    const auto raw = read_column(cfg.analyze.input, column);
    if (raw.size() < min_fit_samples) {
        throw DegenerateDataError(fmt::format("{} samples in {}; at least {} are needed", raw.size(),
                                              cfg.analyze.input.string(), min_fit_samples));
    }
    const std::vector<double> velocities =
        column == "delta_z_m" ? displacements_to_velocities(raw, cfg.protocol) : raw;

    const auto fit = fit_gaussian(velocities);
    const auto moments = compute_moments(velocities);
    const Binning binning = cfg.analyze.bins == 0 ? Binning{} : Binning{BinCount{cfg.analyze.bins}};
    const auto histogram = build_histogram(velocities, binning);
    const double boot_err =
        bootstrap_width_error(velocities, cfg.analyze.bootstrap_resamples, cfg.seed, cfg.threads);

    json inferred = nullptr;
    std::string inference_note;
    try {
        inferred = occupation_from_width(fit.width_dv, cfg.particle(), cfg.trap());
    } catch (const InvalidMeasurement& ex) {
        inference_note = ex.what();
    }
    CommandResult result;

    json summary;
    summary["input"] = cfg.analyze.input.string();
    summary["column"] = column;
    summary["n"] = fit.n;
    summary["center_mps"] = fit.center;
    summary["center_err_mps"] = fit.center_err;
    summary["width_dv_mps"] = fit.width_dv;
    summary["width_err_mps"] = fit.width_err;
    summary["width_bootstrap_err_mps"] = boot_err;
    summary["bootstrap_resamples"] = cfg.analyze.bootstrap_resamples;
    summary["goodness_reduced_chi2"] = number_or_null(fit.goodness);
    summary["moments"] = moments_json(moments);
    summary["flags"] = json{{"skewness_negative", moments.skewness_z() < -3.0},
                            {"skewness_positive", moments.skewness_z() > 3.0},
                            {"excess_kurtosis_positive", moments.kurtosis_z() > 3.0},
                            {"excess_kurtosis_negative", moments.kurtosis_z() < -3.0}};
    summary["inferred_n_z"] = inferred;
    if (!inference_note.empty()) summary["inferred_n_z_note"] = inference_note;

    std::string csv = "bin_low_mps,bin_high_mps,count\n";
    for (std::size_t i = 0; i < histogram.bins(); ++i) {
        csv += fmt::format("{},{},{}\n", format_float(histogram.edges[i]), format_float(histogram.edges[i + 1]),
                           histogram.counts[i]);
    }

    OutputDir out(inv);
    out.write("summary.json", summary.dump(2) + "\n");
    out.write("histogram.csv", csv);
    return out.finish(result);
}

CommandResult cmd_sweep(const Invocation& inv) {
    const RunConfig& cfg = inv.config;
    require_sweep_points(cfg);
    CommandResult result;

    std::vector<WidthCurvePoint> points;
    json failures = json::array();
    std::string csv = "n_z,width_mps,width_err_mps\n";
    for (std::size_t i = 0; i < cfg.sweep.n_z.size(); ++i) {
        const double n_z = cfg.sweep.n_z[i];
        try {
            CampaignConfig campaign = cfg.campaign();
            campaign.n_trials = cfg.sweep.trials_per_point;
            campaign.motion.n_z = n_z;
            campaign.seed = derive_seed(cfg.seed, Stream::Campaign, sweep_seed_salt + i);
            campaign.model = cfg.sweep.with_libration ? make_model(ModelKind::LibrationCenter, campaign.libration)
                                                      : ModelSelector{PureTranslation{}};
            const auto trials = run_campaign(campaign);
            std::vector<double> dz;
            dz.reserve(trials.size());
            for (const auto& t : trials) dz.push_back(t.delta_z);
            const auto fit = fit_gaussian(displacements_to_velocities(dz, campaign.protocol));
            points.push_back({n_z, fit.width_dv, fit.width_err});
            csv += fmt::format("{},{},{}\n", format_float(n_z), format_float(fit.width_dv),
                               format_float(fit.width_err));
        } catch (const std::exception& ex) {
            failures.push_back(json{{"n_z", n_z}, {"error", ex.what()}});
            result.warnings.push_back(fmt::format("sweep point n_z={} failed: {}", n_z, ex.what()));
        }
    }

    json report;
    report["with_libration"] = cfg.sweep.with_libration;
    report["trials_per_point"] = cfg.sweep.trials_per_point;
    report["points_ok"] = points.size();
    report["failed_points"] = failures;
    const double delta_omega = cfg.delta_omega();
    report["delta_omega_radps"] = delta_omega;
    try {
        const auto fit = fit_width_curve(points, cfg.particle(), cfg.trap(), cfg.sweep.systematic_fraction);
        report["epsilon2_delta_omega_mps"] = fit.epsilon2_delta_omega;
        report["epsilon2_delta_omega_err_mps"] = fit.epsilon2_delta_omega_err;
        report["variance_term_m2ps2"] = fit.variance_term;
        report["variance_term_err_m2ps2"] = fit.variance_term_err;
        report["reduced_chi2"] = number_or_null(fit.reduced_chi2);
        report["clamped"] = fit.clamped;
        if (delta_omega > 0.0) {
            const auto eps = epsilon2_from_product(fit, delta_omega);
            report["epsilon2_m"] = eps.epsilon2;
            report["epsilon2_err_m"] = eps.epsilon2_err;
        } else {
            report["epsilon2_m"] = nullptr;
        }
    } catch (const std::exception& ex) {
        report["fit_error"] = ex.what();
        result.warnings.push_back(std::string("width-curve fit failed: ") + ex.what());
        result.exit_code = 3;
    }

    OutputDir out(inv);
    out.write("width_curve.csv", csv);
    out.write("width_fit.json", report.dump(2) + "\n");
    return out.finish(result);
}

CommandResult cmd_libration_center(const Invocation& inv) {
    const RunConfig& cfg = inv.config;
    const auto& section = cfg.libration_center;
    const auto rows = sweep_asymmetry(section.a_m, cfg.trap(), section.c_over_a, cfg.threads);
    CommandResult result;

    std::string csv =
        "c_over_a,eps2_approx_m,eps2_exact_m,eps2_numeric_m,residual_exact_rel,residual_numeric_rel,spread_rel,error\n";
    for (const auto& r : rows) {
        csv += fmt::format("{},{},{},{},{},{},{},{}\n", format_float(r.c_over_a), format_float(r.eps2_approx),
                           format_float(r.eps2_exact), format_float(r.eps2_numeric), format_float(r.residual_exact),
                           format_float(r.residual_numeric), format_float(r.spread), r.error);
        if (!r.ok()) {
            result.warnings.push_back(fmt::format("c/a={}: {}", r.c_over_a, r.error));
            result.exit_code = 3;
        } else if (!(r.spread <= section.spread_threshold)) {
            result.warnings.push_back(fmt::format("c/a={}: cross-method spread {} exceeds {}", r.c_over_a, r.spread,
                                                  section.spread_threshold));
            result.exit_code = 3;
        }
    }
    OutputDir out(inv);
    out.write("libration_sweep.csv", csv);
    return out.finish(result);
}

CommandResult cmd_signal(const Invocation& inv) {
    const RunConfig& cfg = inv.config;
    const SignalSection& sig = cfg.signal;
    const CampaignConfig campaign = cfg.campaign();
    const TrapSpec trap = campaign.trap;
    CommandResult result;
    result.warnings = protocol_warnings(campaign.protocol, trap);
    const auto trials = run_campaign(campaign);

    double noise_rms = 0.0;
    if (sig.noise_rms_m) {
        noise_rms = *sig.noise_rms_m;
    } else {
        double sum2 = 0.0;
        for (const auto& t : trials) sum2 += t.delta_z * t.delta_z;
        noise_rms = sig.noise_fraction * std::sqrt(sum2 / static_cast<double>(trials.size()));
    }

    ExtractOptions options;
    options.edge_fraction = sig.edge_fraction;
    const auto sos = design_bandpass(sig.filter, sig.sample_rate_hz);
    std::vector<AmplitudeEstimate> estimates(trials.size());
    std::vector<TimeSeries> saved(std::min<std::uint64_t>(sig.traces_to_write, trials.size()));
    parallel_chunks(trials.size(), cfg.threads, [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) {
            const TofTrial& t = trials[i];
            Rng rng = make_rng(cfg.seed, Stream::Noise, t.index);
            // Recapture velocity from the mean flight velocity; its amplitude
            // share is ~(Ω_z t_tof)⁻² and is ignored by the extraction.
            const double v_rec = (t.delta_z - campaign.protocol.center_offset) / campaign.protocol.t_tof;
            TimeSeries trace =
                synthesize_recapture(t.delta_z, v_rec, trap, sig.duration_s, sig.sample_rate_hz, noise_rms, rng);
            trace.samples = sos_filtfilt(sos, trace.samples);
            estimates[i] = extract_amplitude(trace, trap, options);
            if (i < saved.size()) saved[i] = std::move(trace);
        }
    });

    std::string csv = "trial_index,delta_z_true_m,delta_z_recovered_m,amplitude_m,quadrature_m,snr,low_confidence\n";
    std::size_t low = 0;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& e = estimates[i];
        low += e.low_confidence;
        csv += fmt::format("{},{},{},{},{},{},{}\n", trials[i].index, format_float(trials[i].delta_z),
                           format_float(e.in_phase), format_float(e.amplitude), format_float(e.quadrature),
                           format_float(e.snr), e.low_confidence ? 1 : 0);
    }
    if (low > 0) result.warnings.push_back(fmt::format("{} low-confidence trials (SNR < 3)", low));

    json report;
    report["n_trials"] = trials.size();
    report["noise_rms_m"] = noise_rms;
    report["low_confidence_trials"] = low;
    report["filter"] = json{{"family", "butterworth"},
                            {"order", sig.filter.order},
                            {"highpass_hz", sig.filter.highpass_cutoff},
                            {"lowpass_hz", sig.filter.lowpass_cutoff},
                            {"gain_at_fz", sos_gain(sos, cfg.fz_hz, sig.sample_rate_hz)},
                            {"gain_at_fx", sos_gain(sos, cfg.fx_hz, sig.sample_rate_hz)},
                            {"gain_at_fy", sos_gain(sos, cfg.fy_hz, sig.sample_rate_hz)}};
    if (trials.size() >= min_fit_samples) {
        std::vector<double> truth, recovered;
        for (std::size_t i = 0; i < trials.size(); ++i) {
            truth.push_back(trials[i].delta_z);
            recovered.push_back(estimates[i].in_phase);
        }
        try {
            const double w_true = fit_gaussian(displacements_to_velocities(truth, campaign.protocol)).width_dv;
            const double w_rec = fit_gaussian(displacements_to_velocities(recovered, campaign.protocol)).width_dv;
            report["width_true_mps"] = w_true;
            report["width_recovered_mps"] = w_rec;
            report["width_relative_difference"] = (w_rec - w_true) / w_true;
        } catch (const NumericalError& ex) {
            report["width_note"] = ex.what();
        }
    }

    OutputDir out(inv);
    out.write("signal_recovery.csv", csv);
    out.write("signal_summary.json", report.dump(2) + "\n");
    for (std::size_t i = 0; i < saved.size(); ++i) {
        const std::string name = fmt::format("trace_{:06d}.csv", trials[i].index);
        write_time_series_csv(out.path(name), saved[i]);
        out.record(name);
    }
    return out.finish(result);
}

}  // namespace levtof::cli
