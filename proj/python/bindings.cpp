#include "levtof/analysis.hpp"
#include "levtof/core.hpp"
#include "levtof/errors.hpp"
#include "levtof/libration_geometry.hpp"
#include "levtof/signal.hpp"
#include "levtof/tof_sim.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numbers>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace levtof;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a one-dimensional array");
    return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict simulate(std::uint64_t n_trials, std::uint64_t seed, double n_z, const std::string& model,
                  double delta_omega, double phi0, double epsilon1, double epsilon2, double t_tof,
                  double center_offset, const ParticleSpec& particle, const TrapSpec& trap, unsigned threads) {
    CampaignConfig config;
    config.n_trials = n_trials;
    config.seed = seed;
    config.particle = particle;
    config.trap = trap;
    config.motion.n_z = n_z;
    config.libration.delta_omega = delta_omega;
    config.libration.phi0 = phi0;
    config.libration.epsilon1 = epsilon1;
    config.libration.epsilon2 = epsilon2;
    config.protocol = {t_tof, center_offset};
    config.model = make_model(parse_model_kind(model), config.libration);
    config.threads = threads;

    std::vector<TofTrial> trials;
    {
        py::gil_scoped_release release;
        trials = run_campaign(config);
    }
    std::vector<double> v0, omega0, dz;
    for (const auto& t : trials) {
        v0.push_back(t.v0);
        omega0.push_back(t.omega0);
        dz.push_back(t.delta_z);
    }
    return py::dict("v0"_a = to_array(v0), "omega0"_a = to_array(omega0), "delta_z"_a = to_array(dz),
                    "velocity"_a = to_array(displacements_to_velocities(dz, config.protocol)));
}

Array sos_array(const std::vector<SosSection>& sos) {
    Array out({static_cast<py::ssize_t>(sos.size()), py::ssize_t{6}});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < sos.size(); ++i)
        for (std::size_t j = 0; j < 6; ++j) view(i, j) = sos[i][j];
    return out;
}

std::vector<SosSection> sos_from_array(const Array& a) {
    if (a.ndim() != 2 || a.shape(1) != 6) throw std::invalid_argument("sos must have shape (n, 6)");
    auto view = a.unchecked<2>();
    std::vector<SosSection> sos(static_cast<std::size_t>(a.shape(0)));
    for (std::size_t i = 0; i < sos.size(); ++i)
        for (std::size_t j = 0; j < 6; ++j) sos[i][j] = view(i, j);
    return sos;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Levitated-nanoparticle TOF toolkit";

    auto base = py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<InvalidMeasurement>(m, "InvalidMeasurement", base.ptr());
    py::register_exception<NoRootError>(m, "NoRootError", base.ptr());
    py::register_exception<DegenerateDataError>(m, "DegenerateDataError", base.ptr());

    py::class_<ParticleSpec>(m, "Particle")
        .def(py::init<double, double>(), "mass_kg"_a, "radius_m"_a)
        .def_property_readonly("mass", &ParticleSpec::mass)
        .def_property_readonly("radius", &ParticleSpec::radius)
        .def("__repr__", [](const ParticleSpec& p) {
            return "Particle(mass_kg=" + std::to_string(p.mass()) + ", radius_m=" + std::to_string(p.radius()) + ")";
        });

    py::class_<TrapSpec>(m, "Trap")
        .def(py::init<double, double, double>(), "omega_x"_a, "omega_y"_a, "omega_z"_a)
        .def_static("from_hz", &TrapSpec::from_hz, "fx"_a, "fy"_a, "fz"_a)
        .def_property_readonly("omega_x", &TrapSpec::omega_x)
        .def_property_readonly("omega_y", &TrapSpec::omega_y)
        .def_property_readonly("omega_z", &TrapSpec::omega_z);

    m.def("reference_particle", &reference::particle);
    m.def("reference_trap", &reference::trap);
    const ParticleSpec ref_particle = reference::particle();
    const TrapSpec ref_trap = reference::trap();

    m.def("quantum_limited_width", &quantum_limited_width, "particle"_a = ref_particle, "trap"_a = ref_trap);
    m.def(
        "velocity_width",
        [](double n_z, double eps2_dw, const ParticleSpec& p, const TrapSpec& t) {
            return velocity_width(p, t, n_z, eps2_dw);
        },
        "n_z"_a, "epsilon2_delta_omega"_a = 0.0, "particle"_a = ref_particle, "trap"_a = ref_trap);
    m.def(
        "occupation_from_width",
        [](double w, const ParticleSpec& p, const TrapSpec& t) { return occupation_from_width(w, p, t); }, "width"_a,
        "particle"_a = ref_particle, "trap"_a = ref_trap);
    m.def("delta_omega_from_temperature", &delta_omega_from_temperature, "temperature"_a,
          "particle"_a = ref_particle);
    m.def("residual_broadening_fraction", &residual_broadening_fraction, "epsilon2"_a, "temperature"_a,
          "particle"_a = ref_particle, "trap"_a = ref_trap);

    m.def("simulate", &simulate, "n_trials"_a, "seed"_a = 1, "n_z"_a = 0.0, "model"_a = "pure",
          "delta_omega"_a = 0.0, "phi0"_a = std::numbers::pi / 2.0, "epsilon1"_a = 0.0, "epsilon2"_a = 0.0,
          "t_tof"_a = reference::t_tof_s, "center_offset"_a = reference::center_offset_m,
          "particle"_a = ref_particle, "trap"_a = ref_trap, "threads"_a = 0u,
          "Run a seeded campaign; returns arrays v0, omega0, delta_z and velocity.");

    m.def("fit_gaussian", [](const Array& samples) {
        const auto r = fit_gaussian(to_vector(samples));
        return py::dict("n"_a = r.n, "center"_a = r.center, "width"_a = r.width_dv, "center_err"_a = r.center_err,
                        "width_err"_a = r.width_err, "goodness"_a = r.goodness);
    });
    m.def("compute_moments", [](const Array& samples) {
        const auto r = compute_moments(to_vector(samples));
        return py::dict("n"_a = r.n, "mean"_a = r.mean, "std"_a = r.std, "skewness"_a = r.skewness,
                        "excess_kurtosis"_a = r.excess_kurtosis, "skewness_err"_a = r.skewness_err,
                        "kurtosis_err"_a = r.kurtosis_err);
    });
    m.def(
        "bootstrap_width_error",
        [](const Array& samples, std::size_t n_resamples, std::uint64_t seed) {
            return bootstrap_width_error(to_vector(samples), n_resamples, seed);
        },
        "samples"_a, "n_resamples"_a = 200, "seed"_a = 1);

    py::class_<AsymmetricGeometry>(m, "Geometry")
        .def(py::init<double, double>(), "a"_a, "c"_a)
        .def_static("from_ratio", &AsymmetricGeometry::from_ratio, "a"_a, "c_over_a"_a)
        .def_property_readonly("a", &AsymmetricGeometry::a)
        .def_property_readonly("c", &AsymmetricGeometry::c)
        .def_property_readonly("r0", &AsymmetricGeometry::r0);

    m.def(
        "potential_3d",
        [](double psi, double eps, const AsymmetricGeometry& g, const TrapSpec& t) { return potential_3d(psi, eps, g, t); },
        "psi"_a, "epsilon2"_a, "geometry"_a, "trap"_a = ref_trap);
    m.def(
        "potential_reduced",
        [](double psi, double eps, const AsymmetricGeometry& g, const TrapSpec& t) {
            return potential_reduced(psi, eps, g, t);
        },
        "psi"_a, "epsilon2"_a, "geometry"_a, "trap"_a = ref_trap);
    m.def(
        "epsilon2_approx", [](const AsymmetricGeometry& g, const TrapSpec& t) { return epsilon2_approx(g, t).epsilon2; },
        "geometry"_a, "trap"_a = ref_trap);
    m.def(
        "epsilon2_exact", [](const AsymmetricGeometry& g, const TrapSpec& t) { return epsilon2_exact(g, t).epsilon2; },
        "geometry"_a, "trap"_a = ref_trap);
    m.def(
        "epsilon2_numeric",
        [](const AsymmetricGeometry& g, const TrapSpec& t, bool volume) {
            return epsilon2_numeric(g, t, 1.0, volume ? PotentialRoute::Volume3D : PotentialRoute::Reduced).epsilon2;
        },
        "geometry"_a, "trap"_a = ref_trap, "volume"_a = true);

    m.def(
        "design_bandpass",
        [](double sample_rate, double highpass, double lowpass, int order) {
            FilterSpec spec;
            spec.highpass_cutoff = highpass;
            spec.lowpass_cutoff = lowpass;
            spec.order = order;
            return sos_array(design_bandpass(spec, sample_rate));
        },
        "sample_rate"_a, "highpass"_a = 150e3, "lowpass"_a = 250e3, "order"_a = 4,
        "Butterworth bandpass as an (n, 6) array of second-order sections.");
    m.def("sos_filtfilt", [](const Array& sos, const Array& x) {
        return to_array(sos_filtfilt(sos_from_array(sos), to_vector(x)));
    });
    m.def(
        "sos_gain",
        [](const Array& sos, double f, double fs) { return sos_gain(sos_from_array(sos), f, fs); }, "sos"_a,
        "frequency"_a, "sample_rate"_a);
    m.def(
        "extract_amplitude",
        [](const Array& samples, double sample_rate, const TrapSpec& t, double edge_fraction) {
            TimeSeries ts{sample_rate, to_vector(samples), SignalUnit::Meters};
            ExtractOptions options;
            options.edge_fraction = edge_fraction;
            const auto r = extract_amplitude(ts, t, options);
            return py::dict("amplitude"_a = r.amplitude, "in_phase"_a = r.in_phase, "quadrature"_a = r.quadrature,
                            "snr"_a = r.snr, "low_confidence"_a = r.low_confidence);
        },
        "samples"_a, "sample_rate"_a, "trap"_a = ref_trap, "edge_fraction"_a = 0.15);
}
