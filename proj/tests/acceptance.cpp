// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "levtof/analysis.hpp"
#include "levtof/cli/commands.hpp"
#include "levtof/cli/config.hpp"
#include "levtof/core.hpp"
#include "levtof/libration_geometry.hpp"
#include "levtof/rng.hpp"
#include "levtof/signal.hpp"
#include "levtof/tof_sim.hpp"

#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

using namespace levtof;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double rel(double value, double target) { return std::abs(value - target) / std::abs(target); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("levtof_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

cli::Invocation invocation(const std::string& yaml, const fs::path& out, const std::string& command) {
    cli::Invocation inv;
    inv.config_text = yaml;
    inv.config = cli::parse_config(yaml);
    inv.config.output_dir = out;
    inv.command = command;
    return inv;
}

const TrapSpec trap = reference::trap();
const ParticleSpec particle = reference::particle();
constexpr double a_ref = 174e-9;
const double delta_omega_ref = angular_from_hz(3.5e3);

std::vector<double> campaign_velocities(const CampaignConfig& config) {
    std::vector<double> dz;
    for (const auto& t : run_campaign(config)) dz.push_back(t.delta_z);
    return displacements_to_velocities(dz, config.protocol);
}

Verdict criterion1() {
    const double w = quantum_limited_width(particle, trap);
    const double dev = rel(w, 1.7e-6);
    return {dev <= 0.02, fmt::format("sqrt(hbar*Omega_z/m) = {:.4e} m/s, {:.2f}% from 1.7e-6 (tol 2%)", w, 100 * dev)};
}

Verdict criterion2() {
    const auto g = AsymmetricGeometry::from_ratio(a_ref, 1.005);
    const double approx = epsilon2_approx(g, trap).epsilon2;
    const double exact = epsilon2_exact(g, trap).epsilon2;
    const double numeric = epsilon2_numeric(g, trap).epsilon2;
    const double d0 = rel(approx, 1.2e-10), d1 = rel(exact, approx), d2 = rel(numeric, approx);
    return {d0 <= 0.08 && d1 <= 0.05 && d2 <= 0.05,
            fmt::format("approx {:.4e} m ({:.2f}% from 1.2e-10, tol 8%); exact {:.4e} ({:.2f}%), numeric {:.4e} "
                        "({:.2f}%) vs approx (tol 5%)",
                        approx, 100 * d0, exact, 100 * d1, numeric, 100 * d2)};
}

Verdict criterion3() {
    Rng rng = make_rng(20240, Stream::Campaign, 3);
    boost::random::uniform_real_distribution<double> ratio_d(1.0, 1.05), psi_d(-1.2, 1.2), frac_d(-0.3, 0.3);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto g = AsymmetricGeometry::from_ratio(a_ref, ratio_d(rng));
        const double psi = psi_d(rng);
        const double eps = frac_d(rng) * a_ref;
        const double u3 = potential_3d(psi, eps, g, trap);
        const double ur = potential_reduced(psi, eps, g, trap);
        worst = std::max(worst, rel(u3, ur));
    }
    double worst_root = 0.0;
    for (double ratio : {1.001, 1.005, 1.02, 1.05}) {
        const auto g = AsymmetricGeometry::from_ratio(a_ref, ratio);
        const double exact = epsilon2_exact(g, trap).epsilon2;
        worst_root = std::max(worst_root, rel(epsilon2_numeric(g, trap, 1.0, PotentialRoute::Volume3D).epsilon2, exact));
        worst_root = std::max(worst_root, rel(epsilon2_numeric(g, trap, 1.0, PotentialRoute::Reduced).epsilon2, exact));
    }
    return {worst <= 1e-6 && worst_root <= 1e-3,
            fmt::format("3D vs reduced potential worst {:.2e} over 20 points (tol 1e-6); closed-condition vs "
                        "quadrature roots worst {:.2e} over c/a in {{1.001,1.005,1.02,1.05}} (tol 1e-3)",
                        worst, worst_root)};
}

Verdict criterion4() {
    CampaignConfig lc;
    lc.n_trials = 100000;
    lc.seed = 4;
    lc.motion.n_z = 0.87;
    lc.libration.delta_omega = delta_omega_ref;
    lc.libration.epsilon2 = 4.4e-6 / delta_omega_ref;
    lc.model = make_model(ModelKind::LibrationCenter, lc.libration);
    const double w_lc = fit_gaussian(campaign_velocities(lc)).width_dv;

    CampaignConfig pure;
    pure.n_trials = 100000;
    pure.seed = 5;
    pure.motion.n_z = 0.80;
    const double w_pure = fit_gaussian(campaign_velocities(pure)).width_dv;

    const double d1 = rel(w_lc, 6.8e-6), d2 = rel(w_pure, 2.71e-6);
    return {d1 <= 0.015 && d2 <= 0.015,
            fmt::format("libration-centre model {:.4e} m/s ({:.2f}% from 6.8e-6); n_z=0.80 without libration "
                        "{:.4e} m/s ({:.2f}% from 2.71e-6) (tol 1.5%)",
                        w_lc, 100 * d1, w_pure, 100 * d2)};
}

Verdict criterion5() {
    const fs::path out = scratch("c5");
    const auto result = cli::cmd_sweep(invocation(
        "seed: 55\nlibration: {delta_omega_hz: 3500, epsilon2_delta_omega_mps: 4.4e-6}\n"
        "sweep: {trials_per_point: 10000, with_libration: true}\n",
        out, "sweep"));
    const auto fit = json::parse(slurp(out / "width_fit.json"));
    if (result.exit_code != 0 || fit["epsilon2_m"].is_null())
        return {false, fmt::format("sweep exited with {}", result.exit_code)};
    const double est = fit["epsilon2_delta_omega_mps"].get<double>();
    const double err = fit["epsilon2_delta_omega_err_mps"].get<double>();
    const double eps2 = fit["epsilon2_m"].get<double>();
    const double pulls = std::abs(est - 4.4e-6) / err;
    const double d = rel(eps2, 2.0e-10);
    return {pulls <= 2.0 && d <= 0.10,
            fmt::format("eps2*delta_omega = {:.4e} +/- {:.2e} m/s ({:.2f} sigma from 4.4e-6, tol 2); eps2 = {:.4e} m "
                        "({:.2f}% from 2.0e-10, tol 10%)",
                        est, err, pulls, eps2, 100 * d)};
}

// Sampling SE of the skewness for a symmetric parent, from the sample's own
// moments. Reported beside the Gaussian-reference SE, never used for the verdict.
double symmetric_skewness_se(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double m2 = 0.0, m4 = 0.0, m6 = 0.0;
    for (double x : v) {
        const double d2 = (x - mean) * (x - mean);
        m2 += d2;
        m4 += d2 * d2;
        m6 += d2 * d2 * d2;
    }
    const double n = static_cast<double>(v.size());
    m2 /= n;
    m4 /= n;
    m6 /= n;
    return std::sqrt((m6 / (m2 * m2 * m2) - 6.0 * m4 / (m2 * m2) + 9.0) / n);
}

Verdict criterion6() {
    CampaignConfig base;
    base.n_trials = 1000000;
    base.motion.n_z = 0.87;
    base.libration.delta_omega = delta_omega_ref;

    CampaignConfig m2 = base;
    m2.seed = 61;
    m2.libration.epsilon2 = 0.29e-9;
    m2.model = make_model(ModelKind::LibrationCenter, m2.libration);
    const auto s2 = compute_moments(campaign_velocities(m2));

    CampaignConfig m1 = base;
    m1.seed = 62;
    m1.libration.epsilon1 = 6.7e-9;
    m1.model = make_model(ModelKind::OpticalCenter, m1.libration);
    const auto v1 = campaign_velocities(m1);
    const auto s1 = compute_moments(v1);
    const double parent_se = symmetric_skewness_se(v1);

    CampaignConfig m1z = m1;
    m1z.seed = 63;
    m1z.libration.phi0 = 0.0;
    m1z.model = make_model(ModelKind::OpticalCenter, m1z.libration);
    const auto s1z = compute_moments(campaign_velocities(m1z));

    const bool ok2 = std::abs(s2.skewness_z()) < 3.0 && std::abs(s2.kurtosis_z()) < 3.0;
    const bool ok1 = s1.kurtosis_z() > 5.0 && std::abs(s1.skewness_z()) < 3.0;
    const bool ok1z = s1z.skewness_z() < -5.0;
    return {ok2 && ok1 && ok1z,
            fmt::format("model 2 skew {:+.2f} SE, kurt {:+.2f} SE; model 1 (phi0=pi/2) skew {:+.2f} SE, kurt {:+.1f} "
                        "SE; model 1 (phi0=0) skew {:+.1f} SE (SE = Gaussian reference; model 1 phi0=pi/2 skew is "
                        "{:+.2f} in units of its own sampling SE {:.4f})",
                        s2.skewness_z(), s2.kurtosis_z(), s1.skewness_z(), s1.kurtosis_z(), s1z.skewness_z(),
                        s1.skewness / parent_se, parent_se)};
}

Verdict criterion7() {
    const double f = residual_broadening_fraction(2.0e-10, 0.030, particle, trap);
    return {f >= 0.005 && f <= 0.015, fmt::format("fraction {:.3f}% (window 0.5% to 1.5%)", 100 * f)};
}

Verdict criterion8() {
    const double sigma = quantum_limited_width(particle, trap) / std::sqrt(2.0);
    Rng rng = make_rng(8, Stream::Campaign, 0);
    std::vector<double> v(100000);
    for (auto& x : v) x = normal_draw(rng, sigma);
    const std::vector<std::size_t> sizes = {150, v.size()};
    const auto pts = convergence_study(v, sizes, 1000, 8);
    const double w150 = pts[0].width, err150 = pts[0].width_err, wfull = pts[1].width;
    const double pulls = std::abs(w150 - wfull) / err150;
    const double relerr = err150 / w150;
    return {pulls <= 3.0 && std::abs(relerr - 0.058) <= 0.02,
            fmt::format("N=150 width {:.4e} vs N=1e5 {:.4e}: {:.2f} bootstrap sigma (tol 3); bootstrap relative "
                        "error {:.2f}% (target 5.8% +/- 2%)",
                        w150, wfull, pulls, 100 * relerr)};
}

Verdict criterion9() {
    const fs::path out = scratch("c9");
    const auto result = cli::cmd_signal(
        invocation("seed: 9\nn_trials: 10000\nsignal: {noise_fraction: 0.1}\n", out, "signal"));
    std::istringstream csv(slurp(out / "signal_recovery.csv"));
    std::string line;
    std::getline(csv, line);
    double worst = 0.0;
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        std::stringstream row(line);
        std::string idx, truth, rec;
        std::getline(row, idx, ',');
        std::getline(row, truth, ',');
        std::getline(row, rec, ',');
        worst = std::max(worst, rel(std::stod(rec), std::stod(truth)));
        ++rows;
    }
    const auto summary = json::parse(slurp(out / "signal_summary.json"));
    const double width_dev = std::abs(summary["width_relative_difference"].get<double>());

    // 62 kHz tone alone through the same filter, measured in the demodulation window.
    const cli::RunConfig cfg = cli::parse_config("");
    const auto sos = design_bandpass(cfg.signal.filter, cfg.signal.sample_rate_hz);
    const std::size_t n = static_cast<std::size_t>(cfg.signal.duration_s * cfg.signal.sample_rate_hz);
    std::vector<double> tone(n);
    for (std::size_t i = 0; i < n; ++i)
        tone[i] = std::cos(trap.omega_x() * static_cast<double>(i) / cfg.signal.sample_rate_hz);
    const auto filtered = sos_filtfilt(sos, tone);
    const auto edge = static_cast<std::size_t>(cfg.signal.edge_fraction * static_cast<double>(n));
    double in2 = 0.0, out2 = 0.0;
    for (std::size_t i = edge; i < n - edge; ++i) {
        in2 += tone[i] * tone[i];
        out2 += filtered[i] * filtered[i];
    }
    const double suppression_db = 10.0 * std::log10(in2 / out2);

    const bool ok = result.exit_code == 0 && rows == 10000 && worst <= 0.02 && width_dev <= 0.03 &&
                    suppression_db > 40.0;
    return {ok, fmt::format("N={}: worst per-trial error {:.3f}% (tol 2%); width {:.3f}% off (tol 3%); 62 kHz "
                            "suppressed {:.1f} dB (need > 40)",
                            rows, 100 * worst, 100 * width_dev, suppression_db)};
}

Verdict criterion10() {
    using Command = std::function<cli::CommandResult(const cli::Invocation&)>;
    const fs::path root = scratch("c10");
    const fs::path trials = root / "input_trials.csv";
    struct Case {
        std::string name;
        Command run;
        std::string yaml;
    };
    const std::vector<Case> cases = {
        {"simulate", cli::cmd_simulate, "seed: 10\nn_trials: 2000\nmodel: libration_center\n"
                                        "libration: {delta_omega_hz: 3500, epsilon2_m: 2e-10}\n"},
        {"analyze", cli::cmd_analyze, "seed: 10\nanalyze: {input: " + trials.string() + "}\n"},
        {"sweep", cli::cmd_sweep, "seed: 10\nlibration: {delta_omega_hz: 3500, epsilon2_m: 2e-10}\n"
                                  "sweep: {trials_per_point: 2000}\n"},
        {"libration-center", cli::cmd_libration_center, "libration_center: {c_over_a: [1.0, 1.005, 1.02]}\n"},
        {"signal", cli::cmd_signal, "seed: 10\nn_trials: 300\nsignal: {traces_to_write: 2}\n"},
    };

    // The analyze input comes from an independent simulate run.
    {
        const fs::path src = root / "source";
        cli::cmd_simulate(invocation(cases[0].yaml, src, "simulate"));
        fs::copy_file(src / "trials.csv", trials);
    }

    std::vector<std::string> mismatched;
    std::size_t compared = 0;
    for (const auto& c : cases) {
        const fs::path dir = root / c.name;
        std::map<std::string, std::string> first;
        json first_manifest;
        for (int pass = 0; pass < 2; ++pass) {
            fs::remove_all(dir);
            const auto result = c.run(invocation(c.yaml, dir, c.name));
            const auto manifest = json::parse(slurp(dir / "manifest.json"));
            for (const auto& f : result.files) {
                if (f == "manifest.json") continue;
                const std::string bytes = slurp(dir / f);
                if (pass == 0) {
                    first[f] = bytes;
                } else {
                    ++compared;
                    if (first.count(f) == 0 || first[f] != bytes) mismatched.push_back(c.name + "/" + f);
                }
            }
            if (pass == 0) first_manifest = manifest["files"];
            else if (first_manifest != manifest["files"]) mismatched.push_back(c.name + "/manifest.json files");
        }
    }
    std::string detail = fmt::format("{} files across 5 commands compared byte for byte", compared);
    if (!mismatched.empty()) {
        detail += "; differing:";
        for (const auto& m : mismatched) detail += " " + m;
    }
    return {mismatched.empty() && compared > 0, detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"quantum-limited width", criterion1},
        {"libration-centre offset at c/a = 1.005", criterion2},
        {"potential and root cross-checks", criterion3},
        {"simulated widths against the width formula", criterion4},
        {"eps2 extraction from a width sweep", criterion5},
        {"model discrimination by moments", criterion6},
        {"residual broadening at 30 mK", criterion7},
        {"repetition convergence", criterion8},
        {"signal pipeline end to end", criterion9},
        {"determinism", criterion10},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& ex) {
            v = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !v.pass;
        fmt::print("{} {:2d} {}: {} [{:.1f} s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail, secs);
        std::fflush(stdout);
    }
    fmt::print("{}/{} criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
