#include "levtof/signal.hpp"

#include "levtof/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace levtof {

namespace {

using cplx = std::complex<double>;

struct PolePair {
    cplx pole;  // upper half plane member
    double closeness;
};

// Remove and return the remaining zero nearest to p.
double take_nearest(std::vector<double>& zeros, cplx p) {
    auto best = std::min_element(zeros.begin(), zeros.end(), [p](double a, double b) {
        return std::abs(p - a) < std::abs(p - b);
    });
    const double z = *best;
    zeros.erase(best);
    return z;
}

std::size_t edge_padding(const std::vector<SosSection>& sos) {
    std::size_t trailing_b = 0, trailing_a = 0;
    for (const auto& s : sos) {
        trailing_b += s[2] == 0.0;
        trailing_a += s[5] == 0.0;
    }
    return 3 * (2 * sos.size() + 1 - std::min(trailing_b, trailing_a));
}

// Steady-state DF2T state per section for a unit step input.
std::vector<std::array<double, 2>> step_state(const std::vector<SosSection>& sos) {
    std::vector<std::array<double, 2>> zi(sos.size());
    double scale = 1.0;
    for (std::size_t i = 0; i < sos.size(); ++i) {
        const auto& s = sos[i];
        const double b0 = s[0], b1 = s[1], b2 = s[2], a1 = s[4], a2 = s[5];
        const double r0 = b1 - a1 * b0;
        const double r1 = b2 - a2 * b0;
        const double z0 = (r0 + r1) / (1.0 + a1 + a2);
        zi[i] = {scale * z0, scale * (r1 - a2 * z0)};
        scale *= (b0 + b1 + b2) / (1.0 + a1 + a2);
    }
    return zi;
}

void run_cascade(const std::vector<SosSection>& sos, std::vector<std::array<double, 2>> state,
                 std::vector<double>& x) {
    for (std::size_t i = 0; i < sos.size(); ++i) {
        const auto& s = sos[i];
        double z0 = state[i][0], z1 = state[i][1];
        for (double& v : x) {
            const double y = s[0] * v + z0;
            z0 = s[1] * v - s[4] * y + z1;
            z1 = s[2] * v - s[5] * y;
            v = y;
        }
    }
}

}  // namespace

std::string unit_name(SignalUnit unit) { return unit == SignalUnit::Volts ? "V" : "m"; }

void FilterSpec::validate() const {
    if (!(highpass_cutoff > 0.0)) throw std::invalid_argument("highpass cutoff must be positive");
    if (!(highpass_cutoff < lowpass_cutoff)) throw std::invalid_argument("highpass cutoff must be below lowpass cutoff");
    if (order < 2 || order > 8) throw std::invalid_argument("filter order must lie in [2, 8]");
}

std::vector<SosSection> design_bandpass(const FilterSpec& spec, double sample_rate) {
    spec.validate();
    const double nyquist = 0.5 * sample_rate;
    if (!(spec.lowpass_cutoff < nyquist)) {
        throw std::invalid_argument(fmt::format("cutoff {} Hz is not below Nyquist {} Hz", spec.lowpass_cutoff, nyquist));
    }
    const int n = spec.order;
    const double fs2 = 2.0 * sample_rate;
    const double w1 = fs2 * std::tan(std::numbers::pi * spec.highpass_cutoff / sample_rate);
    const double w2 = fs2 * std::tan(std::numbers::pi * spec.lowpass_cutoff / sample_rate);
    const double bw = w2 - w1;
    const double w0 = std::sqrt(w1 * w2);

    // Analog prototype poles, lowpass-to-bandpass, then bilinear. The gain
    // collects bw^n from the transform and the bilinear factors for the n
    // analog zeros at s = 0.
    std::vector<cplx> poles;
    cplx gain = std::pow(bw * fs2, n);
    for (int k = 1; k <= n; ++k) {
        const cplx proto = std::exp(cplx(0.0, std::numbers::pi * (2.0 * k + n - 1) / (2.0 * n)));
        const cplx half = proto * (bw / 2.0);
        const cplx root = std::sqrt(half * half - w0 * w0);
        for (cplx s : {half + root, half - root}) {
            if (std::abs(s.imag()) < 1e-12 * std::abs(s)) {
                throw std::invalid_argument("band too wide for a complex-pole bandpass design");
            }
            poles.push_back((fs2 + s) / (fs2 - s));
            gain /= (fs2 - s);
        }
    }

    std::vector<PolePair> pairs;
    for (const cplx& p : poles) {
        if (p.imag() > 0.0) pairs.push_back({p, std::abs(std::abs(p) - 1.0)});
    }
    std::vector<double> zeros(n, 1.0);
    zeros.insert(zeros.end(), n, -1.0);

    std::sort(pairs.begin(), pairs.end(),
              [](const PolePair& a, const PolePair& b) { return a.closeness < b.closeness; });
    std::vector<SosSection> sos(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const cplx p = pairs[i].pole;
        const double za = take_nearest(zeros, p);
        const double zb = take_nearest(zeros, p);
        sos[sos.size() - 1 - i] = {1.0, -(za + zb), za * zb, 1.0, -2.0 * p.real(), std::norm(p)};
    }
    for (int j = 0; j < 3; ++j) sos.front()[j] *= gain.real();
    return sos;
}

double sos_gain(const std::vector<SosSection>& sos, double frequency, double sample_rate) {
    const cplx z = std::exp(cplx(0.0, -two_pi * frequency / sample_rate));
    cplx h = 1.0;
    for (const auto& s : sos) {
        h *= (s[0] + s[1] * z + s[2] * z * z) / (s[3] + s[4] * z + s[5] * z * z);
    }
    return std::abs(h);
}

std::vector<double> sos_filter(const std::vector<SosSection>& sos, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    run_cascade(sos, std::vector<std::array<double, 2>>(sos.size(), {0.0, 0.0}), y);
    return y;
}

std::vector<double> sos_filtfilt(const std::vector<SosSection>& sos, std::span<const double> x) {
    const std::size_t pad = edge_padding(sos);
    if (x.size() <= pad) {
        throw std::invalid_argument(fmt::format("trace of {} samples is too short for {} samples of edge padding",
                                                x.size(), pad));
    }
    const std::size_t n = x.size();
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t k = pad; k >= 1; --k) ext.push_back(2.0 * x[0] - x[k]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t k = 1; k <= pad; ++k) ext.push_back(2.0 * x[n - 1] - x[n - 1 - k]);

    const auto unit_state = step_state(sos);
    const auto scaled = [&unit_state](double level) {
        auto state = unit_state;
        for (auto& s : state) {
            s[0] *= level;
            s[1] *= level;
        }
        return state;
    };
    run_cascade(sos, scaled(ext.front()), ext);
    std::reverse(ext.begin(), ext.end());
    run_cascade(sos, scaled(ext.front()), ext);
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.end() - static_cast<std::ptrdiff_t>(pad)};
}

TimeSeries bandpass(const TimeSeries& ts, const FilterSpec& spec) {
    const auto sos = design_bandpass(spec, ts.sample_rate);
    TimeSeries out;
    out.sample_rate = ts.sample_rate;
    out.unit = ts.unit;
    out.samples = sos_filtfilt(sos, ts.samples);
    return out;
}

TimeSeries synthesize_recapture(double delta_z, double v_rec, const TrapSpec& trap, double duration,
                                double rate, double noise_rms, Rng& rng) {
    const double omega = trap.omega_z();
    const double fz = hz_from_angular(omega);
    if (!(rate > 2.0 * fz)) {
        throw std::invalid_argument(fmt::format("sample rate {} Hz undersamples the {} Hz oscillation", rate, fz));
    }
    if (!(duration * fz >= 10.0)) {
        throw std::invalid_argument(fmt::format("duration {} s covers fewer than 10 oscillation periods", duration));
    }
    if (!(noise_rms >= 0.0)) throw std::invalid_argument("noise RMS must be non-negative");
    if (!std::isfinite(delta_z) || !std::isfinite(v_rec)) throw std::invalid_argument("non-finite trace parameters");

    const auto count = static_cast<std::size_t>(std::floor(duration * rate));
    TimeSeries ts;
    ts.sample_rate = rate;
    ts.samples.resize(count);
    const double velocity_amplitude = v_rec / omega;
    for (std::size_t k = 0; k < count; ++k) {
        const double phase = omega * (static_cast<double>(k) / rate);
        ts.samples[k] = delta_z * std::cos(phase) + velocity_amplitude * std::sin(phase);
        if (noise_rms > 0.0) ts.samples[k] += normal_draw(rng, noise_rms);
    }
    return ts;
}

AmplitudeEstimate extract_amplitude(const TimeSeries& ts, const TrapSpec& trap, const ExtractOptions& options) {
    if (!(options.edge_fraction >= 0.0 && options.edge_fraction < 0.5)) {
        throw std::invalid_argument("edge fraction must lie in [0, 0.5)");
    }
    const std::size_t n = ts.samples.size();
    const auto skip = static_cast<std::size_t>(std::floor(options.edge_fraction * n));
    const std::size_t begin = skip, end = n - skip;
    const double omega = trap.omega_z();
    if (end <= begin || (end - begin) / ts.sample_rate * hz_from_angular(omega) < 2.0) {
        throw std::invalid_argument("analysis window shorter than two oscillation periods");
    }

    double cc = 0.0, ss = 0.0, cs = 0.0, xc = 0.0, xs = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
        const double phase = omega * (static_cast<double>(k) / ts.sample_rate);
        const double c = std::cos(phase), s = std::sin(phase);
        const double x = ts.samples[k];
        cc += c * c;
        ss += s * s;
        cs += c * s;
        xc += x * c;
        xs += x * s;
    }
    const double det = cc * ss - cs * cs;
    if (!(det > 0.0)) throw NumericalError("demodulation basis is singular over the analysis window");

    AmplitudeEstimate est;
    est.in_phase = (ss * xc - cs * xs) / det;
    est.quadrature = (cc * xs - cs * xc) / det;
    est.amplitude = std::hypot(est.in_phase, est.quadrature);

    double residual2 = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
        const double phase = omega * (static_cast<double>(k) / ts.sample_rate);
        const double r = ts.samples[k] - est.in_phase * std::cos(phase) - est.quadrature * std::sin(phase);
        residual2 += r * r;
    }
    const double residual_rms = std::sqrt(residual2 / static_cast<double>(end - begin));
    est.snr = residual_rms > 0.0 ? est.amplitude / residual_rms : std::numeric_limits<double>::infinity();
    est.low_confidence = est.snr < options.min_snr;
    return est;
}

CalibrationResult calibrate_equipartition(double measured_variance, double temperature,
                                          const ParticleSpec& particle, const TrapSpec& trap) {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    if (!(measured_variance > 0.0) || !std::isfinite(measured_variance)) {
        throw std::invalid_argument("measured variance must be positive");
    }
    CalibrationResult out;
    out.q0 = std::sqrt(2.0 * PhysicalConstants::k_B * temperature / particle.mass()) / trap.omega_z();
    out.meters_per_unit = out.q0 / std::sqrt(2.0 * measured_variance);
    return out;
}

void write_time_series_csv(const std::filesystem::path& path, const TimeSeries& ts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << fmt::format("time_s,value_{},sample_rate_hz={:.17g}\n", unit_name(ts.unit), ts.sample_rate);
    for (std::size_t k = 0; k < ts.samples.size(); ++k) {
        out << fmt::format("{:.17g},{:.17g}\n", static_cast<double>(k) / ts.sample_rate, ts.samples[k]);
    }
    if (!out) throw IoError("write failed for " + path.string());
}

TimeSeries read_time_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");

    TimeSeries ts;
    const auto rate_pos = line.find("sample_rate_hz=");
    if (line.rfind("time_s,value_", 0) != 0 || rate_pos == std::string::npos) {
        throw IoError(path.string() + ":1: expected header time_s,value_<unit>,sample_rate_hz=<rate>");
    }
    const std::string unit = line.substr(13, line.find(',', 13) - 13);
    if (unit == "V") {
        ts.unit = SignalUnit::Volts;
    } else if (unit == "m") {
        ts.unit = SignalUnit::Meters;
    } else {
        throw IoError(path.string() + ":1: unknown unit '" + unit + "'");
    }
    try {
        ts.sample_rate = std::stod(line.substr(rate_pos + 15));
    } catch (const std::exception&) {
        throw IoError(path.string() + ":1: unreadable sample rate");
    }
    if (!(ts.sample_rate > 0.0)) throw IoError(path.string() + ":1: sample rate must be positive");

    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("missing column");
            std::size_t used = 0;
            const double value = std::stod(line.substr(comma + 1), &used);
            ts.samples.push_back(value);
        } catch (const std::exception&) {
            throw IoError(fmt::format("{}:{}: malformed row '{}'", path.string(), row, line));
        }
    }
    return ts;
}

}  // namespace levtof
