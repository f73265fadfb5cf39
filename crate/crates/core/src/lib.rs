//! Coherently radiating spin states (CRSS) of a collective spin `j`, the
//! steady states of driven Dicke superradiance, and the squeezing and
//! quadrature observables built on them.
//!
//! States live in the Dicke basis `|j, m>`, `m = -j..=j`, stored with index
//! `i = m + j` ascending.

pub mod banded;
pub mod crss;
pub mod error;
pub mod numeric;
pub mod observables;
pub mod spin;
pub mod superradiance;
pub mod tridiag;

pub use crss::{
    ansatz_minimal_infidelity, crss_ansatz, crss_minimal, endpoint_ratio_trend, exponent_g, gaussian_moments,
    log_coefficients, prefactor_q, proximity_error_analytic, proximity_error_numeric, r_threshold,
    truncation_points, CrssAnsatz, CrssParams, ErrorMethod, GaussianMoments, LogCoefficients, ProximityError,
    RThreshold, TruncationPoints,
};
pub use error::{CrssError, Result};
pub use spin::{
    build_operators, coherent_spin_state, ladder_coefficient, BandedOperator, BlochAngles, Spin, SpinExpectation,
    SpinOperatorSet, SpinState,
};
pub use superradiance::{
    cavity_effective_params, critical_drive, crss_amplitude, liouvillian_apply, propagate, steady_state_general,
    steady_state_resonant, steadystate_infidelity, CavityParams, DensityMatrix, DriveParams, Liouvillian,
    ResonantSteadyState, SteadyStateOptions,
};
pub use observables::{
    crss_squeezing_analytic, dipole_quadrature_variance, exact_squeezing_minimum, steady_state_xi_sq, dipole_variance_decomposition, field_quadrature_variance,
    optimal_squeezing, squeezing_parameter, DipoleQuadrature, ExactSqueezingMinimum, FieldCoupling, OptimalSqueezing, ProductState,
    SqueezingReport,
};
