#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "levtof/analysis.hpp"
#include "levtof/errors.hpp"

#include <boost/random/exponential_distribution.hpp>

#include <cmath>
#include <vector>

using namespace levtof;
using doctest::Approx;

namespace {

std::vector<double> normal_samples(std::size_t n, double sigma, std::uint64_t seed, double shift = 0.0) {
    Rng rng = make_rng(seed, Stream::Campaign, 0);
    std::vector<double> out(n);
    for (auto& x : out) x = shift + normal_draw(rng, sigma);
    return out;
}

}  // namespace

TEST_CASE("displacement to velocity") {
    const TofProtocol p{68e-6, 0.0};
    CHECK(displacement_to_velocity(0.0, p) == 0.0);
    CHECK(displacement_to_velocity(238e-12, p) == Approx(3.5e-6).epsilon(1e-12));
    TofProtocol bad{0.0, 0.0};
    CHECK_THROWS_AS(displacement_to_velocity(1e-9, bad), std::invalid_argument);
}

TEST_CASE("Freedman-Diaconis binning") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto s = normal_samples(150, 1.0, seed);
        const auto bins = freedman_diaconis_bins(s);
        CHECK(bins >= 5);
        CHECK(bins <= 30);
    }
    const std::vector<double> flat(50, 2.0);
    CHECK_THROWS_AS(freedman_diaconis_bins(flat), DegenerateDataError);
    CHECK_THROWS_AS(build_histogram(flat), DegenerateDataError);
}

TEST_CASE("histogram bookkeeping") {
    const auto s = normal_samples(1000, 1.0, 3);
    const auto h = build_histogram(s, BinCount{17});
    CHECK(h.bins() == 17);
    CHECK(h.total() == 1000);
    CHECK(h.edges.size() == 18);
    for (std::size_t i = 0; i + 1 < h.edges.size(); ++i) CHECK(h.edges[i] < h.edges[i + 1]);
    const auto hw = build_histogram(s, BinWidth{0.5});
    CHECK(hw.total() == 1000);
}

TEST_CASE("Gaussian fit on a large normal sample") {
    const auto s = normal_samples(1000000, 1.0, 11);
    const auto fit = fit_gaussian(s);
    CHECK(fit.width_dv == Approx(std::sqrt(2.0)).epsilon(0.005 / std::sqrt(2.0)));
    CHECK(std::abs(fit.center) < 0.005);
    CHECK(fit.width_err == Approx(1.0 / 1000.0).epsilon(0.01));
    CHECK(fit.goodness < 3.0);
}

TEST_CASE("Gaussian fit translation invariance") {
    const auto base = normal_samples(500, 2e-6, 5);
    std::vector<double> shifted = base;
    const double shift = 2e-9 / 68e-6;
    for (auto& x : shifted) x += shift;
    const auto a = fit_gaussian(base);
    const auto b = fit_gaussian(shifted);
    CHECK(b.center == Approx(a.center + shift).epsilon(1e-12));
    CHECK(b.width_dv == Approx(a.width_dv).epsilon(1e-9));
}

TEST_CASE("fit input guards") {
    CHECK_THROWS_AS(fit_gaussian(std::vector<double>(9, 1.0)), DegenerateDataError);
    CHECK_THROWS_AS(fit_gaussian(std::vector<double>(20, 1.0)), DegenerateDataError);
    std::vector<double> with_nan = normal_samples(20, 1.0, 2);
    with_nan[4] = std::nan("");
    CHECK_THROWS(fit_gaussian(with_nan));
}

TEST_CASE("moments of reference distributions") {
    const auto s = normal_samples(1000000, 1.0, 21);
    const auto m = compute_moments(s);
    CHECK(std::abs(m.skewness) < 0.008);
    CHECK(std::abs(m.excess_kurtosis) < 0.015);
    CHECK(m.skewness_err == Approx(std::sqrt(6e-6)));

    Rng rng = make_rng(8, Stream::Campaign, 0);
    boost::random::exponential_distribution<double> expo(1.0);
    std::vector<double> e(1000000);
    for (auto& x : e) x = expo(rng);
    CHECK(compute_moments(e).skewness == Approx(2.0).epsilon(0.01));
}

TEST_CASE("moments flag a single outlier") {
    std::vector<double> s(1000, 1.0);
    s[17] = 50.0;
    const auto m = compute_moments(s);
    CHECK(m.kurtosis_z() > 5.0);
    CHECK_THROWS_AS(compute_moments(std::vector<double>(100, 1.0)), DegenerateDataError);
}

TEST_CASE("bootstrap width error follows the asymptotic formula") {
    // Average over independent draws to pin the expectation.
    double sum = 0.0;
    const int repeats = 20;
    for (int r = 0; r < repeats; ++r) {
        const auto s = normal_samples(150, 1.0, 100 + r);
        sum += bootstrap_width_error(s, 400, 7 + r) / mle_width(s);
    }
    CHECK(sum / repeats == Approx(1.0 / std::sqrt(300.0)).epsilon(0.015 / 0.0577));

    const auto big = normal_samples(100000, 1.0, 9);
    CHECK(bootstrap_width_error(big, 200, 1) / mle_width(big) == Approx(1.0 / std::sqrt(2e5)).epsilon(0.15));
}

TEST_CASE("bootstrap determinism and stability") {
    const auto s = normal_samples(150, 1.0, 4);
    const double a = bootstrap_width_error(s, 400, 3, 1);
    CHECK(bootstrap_width_error(s, 400, 3, 3) == a);
    const double doubled = bootstrap_width_error(s, 800, 3);
    // Monte Carlo error of a 400-resample std estimate is ~1/sqrt(800).
    CHECK(std::abs(doubled / a - 1.0) < 4.0 / std::sqrt(800.0));
    CHECK_THROWS_AS(bootstrap_width_error(s, 50, 3), std::invalid_argument);
}

TEST_CASE("convergence study") {
    const auto s = normal_samples(150, 1.0, 31);
    const std::vector<std::size_t> sizes = {25, 50, 100, 150};
    const auto points = convergence_study(s, sizes, 300, 5);
    REQUIRE(points.size() == 4);
    for (const auto& p : points) CHECK(std::abs(p.width - std::sqrt(2.0)) < 3.0 * p.width_err);
    CHECK(points.back().width == fit_gaussian(s).width_dv);
    const std::vector<std::size_t> too_big = {151};
    CHECK_THROWS_AS(convergence_study(s, too_big, 300, 5), std::invalid_argument);
}

TEST_CASE("width-curve fit recovers the libration product") {
    const auto particle = reference::particle();
    const auto trap = reference::trap();
    const std::vector<double> nz = {0.0, 0.4, 0.87, 1.5, 2.5, 4.0};

    SUBCASE("noise-free curve") {
        std::vector<WidthCurvePoint> pts;
        for (double n : nz) {
            const double w = velocity_width(particle, trap, n, 4.4e-6);
            pts.push_back({n, w, 0.01 * w});
        }
        const auto fit = fit_width_curve(pts, particle, trap);
        CHECK(fit.epsilon2_delta_omega == Approx(4.4e-6).epsilon(1e-8));
        CHECK(fit.reduced_chi2 < 1e-10);
        const auto eps = epsilon2_from_product(fit, angular_from_hz(3.5e3));
        CHECK(eps.epsilon2 == Approx(2.00080499886954e-10).epsilon(1e-8));
    }

    SUBCASE("5% noise") {
        Rng rng = make_rng(77, Stream::Campaign, 0);
        std::vector<WidthCurvePoint> pts;
        for (double n : nz) {
            const double w = velocity_width(particle, trap, n, 4.4e-6);
            pts.push_back({n, w * (1.0 + normal_draw(rng, 0.05)), 0.05 * w});
        }
        const auto fit = fit_width_curve(pts, particle, trap);
        CHECK(std::abs(fit.epsilon2_delta_omega - 4.4e-6) < 2.0 * fit.epsilon2_delta_omega_err);
    }

    SUBCASE("no libration") {
        Rng rng = make_rng(78, Stream::Campaign, 0);
        std::vector<WidthCurvePoint> pts;
        for (double n : nz) {
            const double w = velocity_width(particle, trap, n);
            pts.push_back({n, w * (1.0 + normal_draw(rng, 0.01)), 0.01 * w});
        }
        const auto fit = fit_width_curve(pts, particle, trap);
        CHECK(std::abs(fit.variance_term) < 2.0 * fit.variance_term_err);
    }

    SUBCASE("widths far below the quantum curve cannot be fitted") {
        std::vector<WidthCurvePoint> pts;
        for (double n : nz) pts.push_back({n, 0.5 * velocity_width(particle, trap, n), 1e-9});
        CHECK_THROWS_AS(fit_width_curve(pts, particle, trap), FitError);
    }

    SUBCASE("systematic fraction inflates the error") {
        std::vector<WidthCurvePoint> pts;
        for (double n : nz) {
            const double w = velocity_width(particle, trap, n, 4.4e-6);
            pts.push_back({n, w, 0.01 * w});
        }
        const auto plain = fit_width_curve(pts, particle, trap);
        const auto inflated = fit_width_curve(pts, particle, trap, 0.05);
        CHECK(inflated.epsilon2_delta_omega_err > plain.epsilon2_delta_omega_err);
    }

    const std::vector<WidthCurvePoint> one = {{0.0, 1.7e-6, 1e-8}};
    CHECK_THROWS_AS(fit_width_curve(one, particle, trap), std::invalid_argument);
}
