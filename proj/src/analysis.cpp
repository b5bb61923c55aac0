#include "levtof/analysis.hpp"

#include "levtof/errors.hpp"
#include "levtof/rng.hpp"

#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace levtof {

namespace {

void require_finite(std::span<const double> samples) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i])) {
            throw std::invalid_argument("non-finite sample at index " + std::to_string(i));
        }
    }
}

void require_count(std::span<const double> samples, std::size_t minimum, const char* what) {
    if (samples.size() < minimum) {
        throw DegenerateDataError(std::string(what) + " needs at least " + std::to_string(minimum) +
                                  " samples, got " + std::to_string(samples.size()));
    }
}

double mean_of(std::span<const double> samples) {
    return std::accumulate(samples.begin(), samples.end(), 0.0) /
           static_cast<double>(samples.size());
}

// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double normal_cdf(double x, double mu, double sigma) {
    return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

}  // namespace

double displacement_to_velocity(double delta_z, const TofProtocol& protocol) {
    protocol.validate();
    return delta_z / protocol.t_tof;
}

std::vector<double> displacements_to_velocities(std::span<const double> delta_z,
                                                const TofProtocol& protocol) {
    protocol.validate();
    std::vector<double> v(delta_z.size());
    std::transform(delta_z.begin(), delta_z.end(), v.begin(),
                   [&](double dz) { return dz / protocol.t_tof; });
    return v;
}

std::uint64_t Histogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::size_t freedman_diaconis_bins(std::span<const double> samples) {
    require_count(samples, 2, "histogram");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const double range = sorted.back() - sorted.front();
    if (!(iqr > 0.0) || !(range > 0.0)) {
        throw DegenerateDataError("zero interquartile range: cannot choose histogram bins");
    }
    const double bin_width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(range / bin_width)));
}

Histogram build_histogram(std::span<const double> samples, Binning binning) {
    require_count(samples, 2, "histogram");
    require_finite(samples);
    const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *min_it;
    const double hi = *max_it;
    if (!(hi > lo)) throw DegenerateDataError("all samples are equal: cannot build a histogram");

    Histogram h;
    if (const auto* w = std::get_if<BinWidth>(&binning)) {
        if (!(w->width > 0.0)) throw std::invalid_argument("bin width must be positive");
        const double start = std::floor(lo / w->width) * w->width;
        auto bins = static_cast<std::size_t>(std::floor((hi - start) / w->width)) + 1;
        for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(start + static_cast<double>(i) * w->width);
    } else {
        std::size_t bins = 0;
        if (const auto* c = std::get_if<BinCount>(&binning)) {
            if (c->bins < 1) throw std::invalid_argument("bin count must be at least 1");
            bins = c->bins;
        } else {
            bins = freedman_diaconis_bins(samples);
        }
        const double step = (hi - lo) / static_cast<double>(bins);
        for (std::size_t i = 0; i < bins; ++i) h.edges.push_back(lo + static_cast<double>(i) * step);
        h.edges.push_back(hi);
    }
    h.counts.assign(h.edges.size() - 1, 0);
    for (double x : samples) {
        auto it = std::upper_bound(h.edges.begin(), h.edges.end(), x);
        std::size_t bin = static_cast<std::size_t>(std::distance(h.edges.begin(), it));
        bin = bin == 0 ? 0 : bin - 1;
        bin = std::min(bin, h.counts.size() - 1);
        ++h.counts[bin];
    }
    return h;
}

double GaussianFitResult::sigma() const { return width_dv / std::numbers::sqrt2; }

double mle_width(std::span<const double> samples) {
    const double mu = mean_of(samples);
    double ss = 0.0;
    for (double x : samples) ss += (x - mu) * (x - mu);
    return std::numbers::sqrt2 * std::sqrt(ss / static_cast<double>(samples.size()));
}

GaussianFitResult fit_gaussian(std::span<const double> samples) {
    require_finite(samples);
    require_count(samples, min_fit_samples, "Gaussian fit");

    GaussianFitResult fit;
    fit.n = samples.size();
    const double n = static_cast<double>(fit.n);
    fit.center = mean_of(samples);
    double ss = 0.0;
    for (double x : samples) ss += (x - fit.center) * (x - fit.center);
    const double sigma = std::sqrt(ss / n);
    if (!(sigma > 0.0)) throw DegenerateDataError("zero-variance samples: Gaussian width undefined");
    fit.width_dv = std::numbers::sqrt2 * sigma;
    fit.center_err = sigma / std::sqrt(n);
    fit.width_err = sigma / std::sqrt(n);

    fit.goodness = std::numeric_limits<double>::quiet_NaN();
    try {
        const Histogram h = build_histogram(samples);
        double chi2 = 0.0;
        std::size_t used = 0;
        for (std::size_t b = 0; b < h.bins(); ++b) {
            const double expected =
                n * (normal_cdf(h.edges[b + 1], fit.center, sigma) - normal_cdf(h.edges[b], fit.center, sigma));
            if (expected <= 0.0) continue;
            const double diff = static_cast<double>(h.counts[b]) - expected;
            chi2 += diff * diff / expected;
            ++used;
        }
        if (used > 3) fit.goodness = chi2 / static_cast<double>(used - 3);
    } catch (const DegenerateDataError&) {
        // No usable binning; goodness stays NaN.
    }
    return fit;
}

MomentSummary compute_moments(std::span<const double> samples) {
    require_finite(samples);
    require_count(samples, 4, "moment summary");
    MomentSummary m;
    m.n = samples.size();
    const double n = static_cast<double>(m.n);
    m.mean = mean_of(samples);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : samples) {
        const double d = x - m.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) throw DegenerateDataError("zero-variance samples: moments undefined");
    m.std = std::sqrt(m2 * n / (n - 1.0));
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    m.mean_err = m.std / std::sqrt(n);
    m.std_err = m.std / std::sqrt(2.0 * n);
    m.skewness_err = std::sqrt(6.0 / n);
    m.kurtosis_err = std::sqrt(24.0 / n);
    return m;
}

double bootstrap_width_error(std::span<const double> samples, std::size_t n_resamples,
                             std::uint64_t seed, unsigned threads) {
    if (n_resamples < 100) throw std::invalid_argument("bootstrap needs at least 100 resamples");
    require_finite(samples);
    require_count(samples, 2, "bootstrap");
    const std::size_t n = samples.size();
    std::vector<double> widths(n_resamples);
    parallel_chunks(n_resamples, threads, [&](std::uint64_t begin, std::uint64_t end) {
        std::vector<double> resample(n);
        boost::random::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::uint64_t k = begin; k < end; ++k) {
            Rng rng = make_rng(seed, Stream::Bootstrap, k);
            for (auto& x : resample) x = samples[pick(rng)];
            widths[k] = mle_width(resample);
        }
    });
    const double mu = mean_of(widths);
    double ss = 0.0;
    for (double w : widths) ss += (w - mu) * (w - mu);
    return std::sqrt(ss / static_cast<double>(n_resamples - 1));
}

std::vector<ConvergencePoint> convergence_study(std::span<const double> samples,
                                               std::span<const std::size_t> subset_sizes,
                                               std::size_t n_resamples, std::uint64_t seed,
                                               unsigned threads) {
    require_finite(samples);
    std::vector<ConvergencePoint> out;
    out.reserve(subset_sizes.size());
    std::vector<std::size_t> indices(samples.size());
    for (std::size_t size : subset_sizes) {
        if (size > samples.size()) {
            throw std::invalid_argument("subset size " + std::to_string(size) +
                                        " exceeds sample count " + std::to_string(samples.size()));
        }
        std::vector<double> subset;
        if (size == samples.size()) {
            subset.assign(samples.begin(), samples.end());
        } else {
            // Partial Fisher–Yates, then restore the original ordering.
            std::iota(indices.begin(), indices.end(), std::size_t{0});
            Rng rng = make_rng(seed, Stream::Subsample, size);
            for (std::size_t i = 0; i < size; ++i) {
                boost::random::uniform_int_distribution<std::size_t> pick(i, indices.size() - 1);
                std::swap(indices[i], indices[pick(rng)]);
            }
            std::sort(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(size));
            subset.reserve(size);
            for (std::size_t i = 0; i < size; ++i) subset.push_back(samples[indices[i]]);
        }
        const GaussianFitResult fit = fit_gaussian(subset);
        ConvergencePoint p;
        p.n = size;
        p.center = fit.center;
        p.width = fit.width_dv;
        p.width_err = bootstrap_width_error(subset, n_resamples, mix64(seed + size), threads);
        out.push_back(p);
    }
    return out;
}

WidthCurveFit fit_width_curve(std::span<const WidthCurvePoint> points, const ParticleSpec& particle,
                              const TrapSpec& trap, double systematic_fraction) {
    if (points.size() < 2) throw std::invalid_argument("width-curve fit needs at least 2 points");
    if (!(systematic_fraction >= 0.0)) throw std::invalid_argument("systematic_fraction must be >= 0");
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                              [](const auto& a, const auto& b) { return a.n_z < b.n_z; });
    if (!(hi->n_z > lo->n_z)) throw std::invalid_argument("width-curve fit needs distinct n_z values");

    const double q = PhysicalConstants::hbar * trap.omega_z() / particle.mass();
    bool unit_weights = false;
    std::vector<double> weight(points.size());
    std::vector<double> base(points.size());  // q (2 n_z + 1)
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (!(p.width > 0.0) || !(p.n_z >= 0.0) || !(p.width_err >= 0.0)) {
            throw std::invalid_argument("width-curve point " + std::to_string(i) + " is invalid");
        }
        const double sys = systematic_fraction * p.width;
        const double var = p.width_err * p.width_err + sys * sys;
        if (var > 0.0) {
            weight[i] = 1.0 / var;
        } else {
            unit_weights = true;
        }
        base[i] = q * (2.0 * p.n_z + 1.0);
    }
    if (unit_weights) std::fill(weight.begin(), weight.end(), 1.0);

    const double y_floor = -0.5 * *std::min_element(base.begin(), base.end());
    auto model = [&](std::size_t i, double y) { return std::sqrt(base[i] + 2.0 * y); };
    auto chi2_at = [&](double y) {
        double chi2 = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double r = points[i].width - model(i, y);
            chi2 += weight[i] * r * r;
        }
        return chi2;
    };

    // Linear start from width^2 = base + 2y.
    double y = 0.0;
    {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            num += weight[i] * (points[i].width * points[i].width - base[i]) / 2.0;
            den += weight[i];
        }
        y = std::max(num / den, 0.5 * y_floor);
    }

    double chi2 = chi2_at(y);
    bool converged = false;
    for (int iter = 0; iter < 200; ++iter) {
        double jtr = 0.0, jtj = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double w = model(i, y);
            const double jac = 1.0 / w;
            jtr += weight[i] * jac * (points[i].width - w);
            jtj += weight[i] * jac * jac;
        }
        double step = jtr / jtj;
        double trial = y + step;
        double trial_chi2 = 0.0;
        int halvings = 0;
        while (true) {
            if (trial > y_floor) {
                trial_chi2 = chi2_at(trial);
                if (trial_chi2 <= chi2) break;
            }
            step *= 0.5;
            trial = y + step;
            if (++halvings > 60) break;
        }
        const bool small = std::abs(trial - y) <= 1e-13 * (std::abs(y) + q);
        if (halvings <= 60) {
            y = trial;
            chi2 = trial_chi2;
        }
        if (small || halvings > 60) {
            converged = true;
            break;
        }
    }
    if (!converged || !std::isfinite(y)) throw FitError("width-curve fit did not converge");

    double jtj = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double w = model(i, y);
        jtj += weight[i] / (w * w);
    }
    const double dof = static_cast<double>(points.size() - 1);
    double var_y = 1.0 / jtj;
    if (unit_weights) var_y *= chi2 / dof;
    const double sigma_y = std::sqrt(var_y);

    WidthCurveFit fit;
    fit.points = points.size();
    fit.variance_term = y;
    fit.variance_term_err = sigma_y;
    fit.reduced_chi2 = chi2 / dof;
    if (y < -3.0 * sigma_y) {
        throw FitError("no positive solution: fitted (eps2 dw)^2 = " + std::to_string(y) +
                       " is below zero by more than 3 sigma");
    }
    fit.clamped = y < 0.0;
    fit.epsilon2_delta_omega = std::sqrt(std::max(y, 0.0));
    const double upper = std::sqrt(std::max(y + sigma_y, 0.0));
    const double lower = std::sqrt(std::max(y - sigma_y, 0.0));
    fit.epsilon2_delta_omega_err = 0.5 * (upper - lower);
    return fit;
}

Epsilon2Estimate epsilon2_from_product(const WidthCurveFit& fit, double delta_omega,
                                       double delta_omega_err) {
    if (!(delta_omega > 0.0)) throw std::invalid_argument("delta_omega must be positive");
    Epsilon2Estimate e;
    e.epsilon2 = fit.epsilon2_delta_omega / delta_omega;
    const double rel_dw = delta_omega_err / delta_omega;
    const double abs_from_fit = fit.epsilon2_delta_omega_err / delta_omega;
    e.epsilon2_err = std::sqrt(abs_from_fit * abs_from_fit + e.epsilon2 * e.epsilon2 * rel_dw * rel_dw);
    return e;
}

}  // namespace levtof
