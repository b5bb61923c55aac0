#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "levtof/errors.hpp"
#include "levtof/signal.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace levtof;
using doctest::Approx;

namespace {
const TrapSpec trap = reference::trap();
constexpr double fs = 5e6;

TimeSeries tone(double frequency, double amplitude, double duration, double phase = 0.0, double offset = 0.0) {
    TimeSeries ts;
    ts.sample_rate = fs;
    const auto n = static_cast<std::size_t>(duration * fs);
    for (std::size_t k = 0; k < n; ++k) {
        ts.samples.push_back(offset + amplitude * std::cos(two_pi * frequency * k / fs + phase));
    }
    return ts;
}

// RMS over the central half, away from the edge transients.
double central_rms(const std::vector<double>& x) {
    const std::size_t q = x.size() / 4;
    double s = 0.0;
    for (std::size_t k = q; k < x.size() - q; ++k) s += x[k] * x[k];
    return std::sqrt(s / static_cast<double>(x.size() - 2 * q));
}
}  // namespace

TEST_CASE("bandpass design matches the reference coefficients") {
    const auto sos = design_bandpass(FilterSpec{}, fs);
    const double expected[4][6] = {
        {1.3293728898752887e-05, 2.6587457797505774e-05, 1.3293728898752887e-05, 1, -1.8120729698701945,
         0.87994982272134259},
        {1, 2, 1, 1, -1.8547735361751154, 0.90055984031250247},
        {1, -2, 1, 1, -1.8509609151999260, 0.94273489774662489},
        {1, -2, 1, 1, -1.9275919862486772, 0.96364780291973429}};
    REQUIRE(sos.size() == 4);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 6; ++j) CHECK(sos[i][j] == Approx(expected[i][j]).epsilon(1e-12));
    }
}

TEST_CASE("odd-order design pairs a zero at each band edge") {
    FilterSpec spec;
    spec.highpass_cutoff = 100e3;
    spec.lowpass_cutoff = 400e3;
    spec.order = 3;
    const auto sos = design_bandpass(spec, 2e6);
    const double expected[3][6] = {
        {0.049532996357253188, 0.099065992714506376, 0.049532996357253188, 1, -1.051462224238267,
         0.32491969623290612},
        {1, 0, -1, 1, -0.54431978596463271, 0.52656520552842956},
        {1, -2, 1, 1, -1.7071344057278224, 0.80519123651918068}};
    REQUIRE(sos.size() == 3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 6; ++j) CHECK(sos[i][j] == Approx(expected[i][j]).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("frequency response") {
    const auto sos = design_bandpass(FilterSpec{}, fs);
    CHECK(sos_gain(sos, 209e3, fs) == Approx(0.9999726796624618).epsilon(1e-12));
    CHECK(sos_gain(sos, 62e3, fs) == Approx(0.0011715395500189684).epsilon(1e-10));
    CHECK(sos_gain(sos, 74e3, fs) == Approx(0.002897080846719093).epsilon(1e-10));
    CHECK(sos_gain(sos, 150e3, fs) == Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(sos_gain(sos, 250e3, fs) == Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(sos_gain(sos, 193649.16731037084, fs) == Approx(1.0).epsilon(1e-3));
    CHECK(sos_gain(sos, 1e3, fs) < 1e-10);
}

TEST_CASE("filter state matches the reference forward-backward output") {
    std::vector<double> x(400);
    for (std::size_t n = 0; n < x.size(); ++n) {
        x[n] = std::sin(two_pi * 209e3 * n / fs) + 0.3 * std::cos(two_pi * 62e3 * n / fs) + 0.1 + 1e-3 * n;
    }
    const auto sos = design_bandpass(FilterSpec{}, fs);
    const auto y = sos_filtfilt(sos, x);
    CHECK(y[0] == Approx(0.03770254743470519).epsilon(1e-9));
    CHECK(y[1] == Approx(0.2940515979371602).epsilon(1e-9));
    CHECK(y[57] == Approx(0.6579980112751049).epsilon(1e-9));
    CHECK(y[200] == Approx(0.7700131848322262).epsilon(1e-9));
    CHECK(y[399] == Approx(-0.09643050431388962).epsilon(1e-9));
    const auto f = sos_filter(sos, x);
    CHECK(f[0] == Approx(5.317491559501155e-06).epsilon(1e-9));
    CHECK(f[10] == Approx(0.019551782724524312).epsilon(1e-9));
    CHECK(f[399] == Approx(-0.336908147792494).epsilon(1e-9));
}

TEST_CASE("zero-phase bandpass on tones") {
    const FilterSpec spec;
    const auto in_band = bandpass(tone(209e3, 1.0, 1e-3), spec);
    CHECK(central_rms(in_band.samples) * std::sqrt(2.0) == Approx(1.0).epsilon(0.01));

    const auto x_motion = bandpass(tone(62e3, 1.0, 1e-3), spec);
    CHECK(20.0 * std::log10(central_rms(x_motion.samples) * std::sqrt(2.0)) < -40.0);
    const auto y_motion = bandpass(tone(74e3, 1.0, 1e-3), spec);
    CHECK(20.0 * std::log10(central_rms(y_motion.samples) * std::sqrt(2.0)) < -40.0);

    TimeSeries dc;
    dc.sample_rate = fs;
    dc.samples.assign(5000, 1.0);
    CHECK(20.0 * std::log10(central_rms(bandpass(dc, spec).samples)) < -60.0);

    // Zero phase: the in-band tone keeps its phase.
    const auto shifted = bandpass(tone(209e3, 1.0, 1e-3, 0.7), spec);
    const auto est = extract_amplitude(shifted, trap);
    CHECK(std::atan2(-est.quadrature, est.in_phase) == Approx(0.7).epsilon(1e-3));
}

TEST_CASE("bandpass guards") {
    TimeSeries ts = tone(209e3, 1.0, 1e-4);
    FilterSpec spec;
    spec.lowpass_cutoff = 3e6;
    CHECK_THROWS_AS(bandpass(ts, spec), std::invalid_argument);
    spec = FilterSpec{};
    spec.order = 9;
    CHECK_THROWS_AS(bandpass(ts, spec), std::invalid_argument);
    spec = FilterSpec{};
    spec.highpass_cutoff = 300e3;
    CHECK_THROWS_AS(bandpass(ts, spec), std::invalid_argument);
    ts.samples.resize(20);
    CHECK_THROWS_AS(bandpass(ts, FilterSpec{}), std::invalid_argument);
}

TEST_CASE("synthesis") {
    Rng rng = make_rng(1, Stream::Noise, 0);
    const auto clean = synthesize_recapture(5e-9, 0.0, trap, 1e-3, fs, 0.0, rng);
    double peak = 0.0;
    for (double v : clean.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak == Approx(5e-9).epsilon(1e-6));
    CHECK(clean.samples[0] == 5e-9);

    const double t = 68e-6;
    const auto moving = synthesize_recapture(5e-9, 5e-9 / t, trap, 1e-3, fs, 0.0, rng);
    const auto est = extract_amplitude(moving, trap);
    CHECK(est.amplitude == Approx(5.00031351350893e-9).epsilon(1e-9));
    CHECK(est.in_phase == Approx(5e-9).epsilon(1e-9));

    const auto noise = synthesize_recapture(0.0, 0.0, trap, 0.02, fs, 1e-9, rng);
    REQUIRE(noise.samples.size() == 100000);
    CHECK(central_rms(noise.samples) == Approx(1e-9).epsilon(0.02));

    CHECK_THROWS_AS(synthesize_recapture(5e-9, 0.0, trap, 1e-3, 400e3, 0.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(synthesize_recapture(5e-9, 0.0, trap, 40e-6, fs, 0.0, rng), std::invalid_argument);
}

TEST_CASE("noise is reproducible from the stream seed") {
    Rng a = make_rng(9, Stream::Noise, 3), b = make_rng(9, Stream::Noise, 3);
    CHECK(synthesize_recapture(1e-9, 0.0, trap, 1e-4, fs, 1e-10, a).samples ==
          synthesize_recapture(1e-9, 0.0, trap, 1e-4, fs, 1e-10, b).samples);
}

TEST_CASE("amplitude extraction") {
    Rng rng = make_rng(2, Stream::Noise, 0);
    const auto clean = synthesize_recapture(5e-9, 0.0, trap, 1e-3, fs, 0.0, rng);
    const auto est = extract_amplitude(clean, trap);
    CHECK(est.amplitude == Approx(5e-9).epsilon(0.005));
    CHECK(est.amplitude == Approx(5e-9).epsilon(1e-9));
    CHECK_FALSE(est.low_confidence);

    SUBCASE("phase invariance") {
        for (double phase : {0.3, 1.4, 2.9, 4.4}) {
            const auto ts = tone(209e3, 5e-9, 1e-3, phase);
            CHECK(extract_amplitude(ts, trap).amplitude == Approx(5e-9).epsilon(0.005));
        }
    }

    SUBCASE("no oscillation sits at the noise floor and is flagged") {
        const auto noise = synthesize_recapture(0.0, 0.0, trap, 1e-3, fs, 1e-9, rng);
        const auto e = extract_amplitude(noise, trap);
        CHECK(e.amplitude < 5.0 * 1e-9 * std::sqrt(2.0 / 3500.0));
        CHECK(e.low_confidence);
    }

    SUBCASE("round trip through the filter at 10% noise") {
        for (int i = 0; i < 20; ++i) {
            const double dz = 1e-9 * (1.0 + 0.2 * i);
            Rng r = make_rng(5, Stream::Noise, static_cast<std::uint64_t>(i));
            const auto noisy = synthesize_recapture(dz, 0.0, trap, 1e-3, fs, 0.1 * dz, r);
            const auto e = extract_amplitude(bandpass(noisy, FilterSpec{}), trap);
            CHECK(e.in_phase == Approx(dz).epsilon(0.02));
        }
    }

    TimeSeries tiny = tone(209e3, 1.0, 5e-6);
    CHECK_THROWS_AS(extract_amplitude(tiny, trap), std::invalid_argument);
    ExtractOptions bad;
    bad.edge_fraction = 0.6;
    CHECK_THROWS_AS(extract_amplitude(clean, trap, bad), std::invalid_argument);
}

TEST_CASE("equipartition calibration") {
    const auto particle = reference::particle();
    const auto c = calibrate_equipartition(1.0, 295.0, particle, trap);
    CHECK(c.q0 == Approx(9.81846175237982e-9).epsilon(1e-12));
    CHECK(calibrate_equipartition(1.0, 4.0 * 295.0, particle, trap).q0 == Approx(2.0 * c.q0).epsilon(1e-14));

    // Thermal-amplitude sinusoid read out in volts through a known factor.
    const double factor = 3.7e-8;  // m per V
    TimeSeries volts = tone(209e3, c.q0 / factor, 1e-3, 0.4);
    double mean = 0.0, var = 0.0;
    for (double v : volts.samples) mean += v;
    mean /= static_cast<double>(volts.samples.size());
    for (double v : volts.samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(volts.samples.size());
    CHECK(calibrate_equipartition(var, 295.0, particle, trap).meters_per_unit == Approx(factor).epsilon(0.01));

    CHECK_THROWS_AS(calibrate_equipartition(0.0, 295.0, particle, trap), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_equipartition(-1.0, 295.0, particle, trap), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_equipartition(1.0, 0.0, particle, trap), std::invalid_argument);
}

TEST_CASE("trace CSV round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "levtof_signal_test";
    std::filesystem::create_directories(dir);
    TimeSeries ts = tone(209e3, 2e-9, 1e-4, 0.1);
    ts.unit = SignalUnit::Volts;
    write_time_series_csv(dir / "trace.csv", ts);
    const auto back = read_time_series_csv(dir / "trace.csv");
    CHECK(back.sample_rate == ts.sample_rate);
    CHECK(back.unit == SignalUnit::Volts);
    CHECK(back.samples == ts.samples);

    std::ofstream(dir / "bad.csv") << "time_s,value_m,sample_rate_hz=5000000\n0,1\n1e-7,oops\n";
    CHECK_THROWS_AS(read_time_series_csv(dir / "bad.csv"), IoError);
    CHECK_THROWS_AS(read_time_series_csv(dir / "missing.csv"), IoError);
    std::filesystem::remove_all(dir);
}
