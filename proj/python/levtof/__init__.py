"""Python access to the levtof simulation, analysis and libration-centre code."""

from ._core import (
    ConfigError,
    DegenerateDataError,
    Geometry,
    InvalidMeasurement,
    IoError,
    NoRootError,
    NumericalError,
    Particle,
    Trap,
    bootstrap_width_error,
    compute_moments,
    delta_omega_from_temperature,
    design_bandpass,
    epsilon2_approx,
    epsilon2_exact,
    epsilon2_numeric,
    extract_amplitude,
    fit_gaussian,
    occupation_from_width,
    potential_3d,
    potential_reduced,
    quantum_limited_width,
    reference_particle,
    reference_trap,
    residual_broadening_fraction,
    simulate,
    sos_filtfilt,
    sos_gain,
    velocity_width,
)

__version__ = "0.1.0"
