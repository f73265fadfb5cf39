//! Python module `crss`: coherently radiating spin states, resonant and
//! detuned steady states, and squeezing observables.

use crss_core::crss as core_crss;
use crss_core::observables as obs;
use crss_core::spin::{build_operators, coherent_spin_state, BlochAngles, Spin, SpinExpectation};
use crss_core::superradiance as sr;
use crss_core::CrssError;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: CrssError) -> PyErr {
    match e {
        CrssError::NoConvergence { .. }
        | CrssError::IllConditioned { .. }
        | CrssError::DegenerateSteadyState { .. }
        | CrssError::Integrator(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for crss_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn spin(j: f64) -> PyResult<Spin> {
    let twice = 2.0 * j;
    if !(twice >= 1.0) || twice.fract() != 0.0 {
        return Err(PyValueError::new_err(format!("j = {j} must be a positive integer or half-integer")));
    }
    Spin::from_twice(twice as u32).py()
}

fn dense(rho: &nalgebra::DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    (0..rho.nrows()).map(|a| (0..rho.ncols()).map(|b| rho[(a, b)]).collect()).collect()
}

/// CRSS ansatz: recursion coefficients truncated at `m_+`.
#[pyclass(module = "crss", frozen)]
struct CrssAnsatz {
    inner: core_crss::CrssAnsatz,
}

#[pymethods]
impl CrssAnsatz {
    #[new]
    #[pyo3(signature = (j, r, phi = 0.0))]
    fn new(j: f64, r: f64, phi: f64) -> PyResult<Self> {
        let params = core_crss::CrssParams::new(spin(j)?, r, phi).py()?;
        Ok(Self { inner: core_crss::CrssAnsatz::new(params).py()? })
    }

    #[getter]
    fn j(&self) -> f64 {
        self.inner.params().spin().j()
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.params().r()
    }

    #[getter]
    fn alpha(&self) -> Complex64 {
        self.inner.params().alpha()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.error().epsilon
    }

    #[getter]
    fn ln_epsilon(&self) -> f64 {
        self.inner.error().ln_epsilon
    }

    #[getter]
    fn truncation(&self) -> (f64, f64) {
        let t = self.inner.truncation();
        (t.m_minus(), t.m_plus())
    }

    /// Amplitudes ordered from `m = -j` to `m = j`.
    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.state().amps().to_vec()
    }

    fn xi_sq(&self) -> PyResult<f64> {
        Ok(obs::squeezing_parameter(self.inner.state()).py()?.xi_sq)
    }

    fn mean_jz(&self) -> PyResult<f64> {
        let ops = build_operators(self.inner.params().spin());
        Ok(self.inner.state().expect(ops.jz()).py()?.re)
    }

    fn lowering_variance(&self) -> PyResult<Complex64> {
        obs::lowering_variance(self.inner.state()).py()
    }

    fn __repr__(&self) -> String {
        format!("CrssAnsatz(j={}, r={}, epsilon={:e})", self.j(), self.r(), self.epsilon())
    }
}

/// Exact steady state of resonant driven superradiance at `Ω = r Ω_c`.
#[pyclass(module = "crss", frozen)]
struct ResonantSteadyState {
    inner: sr::ResonantSteadyState,
}

#[pymethods]
impl ResonantSteadyState {
    #[new]
    fn new(j: f64, r: f64) -> PyResult<Self> {
        let s = spin(j)?;
        let drive = sr::DriveParams::resonant(s, r, 1.0).py()?;
        let alpha = sr::crss_amplitude(&drive).py()?;
        Ok(Self { inner: sr::steady_state_resonant(s, alpha).py()? })
    }

    #[getter]
    fn alpha(&self) -> Complex64 {
        self.inner.alpha()
    }

    fn populations(&self) -> Vec<f64> {
        self.inner.populations()
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn xi_sq(&self) -> PyResult<f64> {
        Ok(obs::squeezing_parameter(&self.inner).py()?.xi_sq)
    }

    fn mean_jz(&self) -> PyResult<f64> {
        let ops = build_operators(self.inner.spin());
        Ok(self.inner.expect(ops.jz()).py()?.re)
    }

    fn fidelity_with_ansatz(&self) -> PyResult<f64> {
        let params = core_crss::CrssParams::from_alpha(self.inner.spin(), self.inner.alpha()).py()?;
        let ans = core_crss::CrssAnsatz::new(params).py()?;
        self.inner.fidelity(ans.state()).py()
    }

    fn density(&self) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(dense(self.inner.to_density().py()?.rho()))
    }
}

/// `|a_m / a_-j|` for every `m`, in log form.
#[pyfunction]
#[pyo3(signature = (j, r, phi = 0.0))]
fn log_coefficients(j: f64, r: f64, phi: f64) -> PyResult<Vec<f64>> {
    Ok(core_crss::LogCoefficients::new(spin(j)?, r, phi).py()?.f().to_vec())
}

#[pyfunction]
fn truncation_points(j: f64, r: f64) -> PyResult<(f64, f64)> {
    let t = core_crss::truncation_points(spin(j)?, r).py()?;
    Ok((t.m_minus(), t.m_plus()))
}

#[pyfunction]
fn proximity_error_analytic(j: f64, r: f64) -> PyResult<f64> {
    Ok(core_crss::proximity_error_analytic(spin(j)?, r).py()?.epsilon)
}

/// Returns `(r_j, r_j_asymptotic, bracketed)`.
#[pyfunction]
fn r_threshold(j: f64) -> PyResult<(f64, f64, bool)> {
    let t = core_crss::r_threshold(spin(j)?).py()?;
    Ok((t.r_j, t.asymptotic, t.bracketed))
}

#[pyfunction]
fn gaussian_moments<'py>(py: Python<'py>, j: f64, r: f64) -> PyResult<Bound<'py, PyDict>> {
    let g = core_crss::gaussian_moments(spin(j)?, r).py()?;
    let d = PyDict::new(py);
    d.set_item("center", g.center)?;
    d.set_item("width_sq", g.width_sq)?;
    d.set_item("a2", g.a2)?;
    d.set_item("a3", g.a3)?;
    d.set_item("a4", g.a4)?;
    d.set_item("valid", g.valid)?;
    Ok(d)
}

/// Amplitudes and `ln ε` of the minimal-error state for eigenvalue `alpha`.
#[pyfunction]
fn crss_minimal(j: f64, alpha: Complex64) -> PyResult<(Vec<Complex64>, f64)> {
    let (state, err) = core_crss::crss_minimal(spin(j)?, alpha).py()?;
    Ok((state.amps().to_vec(), err.ln_epsilon))
}

#[pyfunction]
#[pyo3(signature = (j, r, phi = 0.0))]
fn ansatz_minimal_infidelity(j: f64, r: f64, phi: f64) -> PyResult<f64> {
    core_crss::ansatz_minimal_infidelity(&core_crss::CrssParams::new(spin(j)?, r, phi).py()?).py()
}

/// `j r (1 - <ans|ρ_s|ans>)` at zero detuning.
#[pyfunction]
fn steadystate_infidelity(j: f64, r: f64) -> PyResult<f64> {
    sr::steadystate_infidelity(spin(j)?, r).py()
}

#[pyfunction]
fn critical_drive(n_atoms: u32, delta: f64, gamma: f64) -> f64 {
    sr::critical_drive(n_atoms, delta, gamma)
}

#[pyfunction]
fn crss_amplitude(omega: Complex64, delta: f64, gamma: f64) -> PyResult<Complex64> {
    sr::crss_amplitude(&sr::DriveParams::new(omega, delta, gamma).py()?).py()
}

/// Steady state from the Liouvillian null space (any detuning, `j <= 25`).
#[pyfunction]
#[pyo3(signature = (j, omega, delta, gamma = 1.0))]
fn steady_state_general(j: f64, omega: Complex64, delta: f64, gamma: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let drive = sr::DriveParams::new(omega, delta, gamma).py()?;
    let rho = sr::steady_state_general(spin(j)?, &drive, &sr::SteadyStateOptions::default()).py()?;
    Ok(dense(rho.rho()))
}

/// Returns `(delta, gamma)`.
#[pyfunction]
fn cavity_effective_params(g_coupling: Complex64, delta_c: f64, kappa: f64) -> PyResult<(f64, f64)> {
    sr::cavity_effective_params(&sr::CavityParams { g_coupling, delta_c, kappa, delta_a: 0.0 }).py()
}

#[pyfunction]
fn steady_state_xi_sq(j: f64, r: f64) -> PyResult<f64> {
    obs::steady_state_xi_sq(spin(j)?, r).py()
}

/// Returns `(xi_min, r_at_min)` from the threshold formula.
#[pyfunction]
fn optimal_squeezing(j: f64) -> PyResult<(f64, f64)> {
    let o = obs::optimal_squeezing(spin(j)?).py()?;
    Ok((o.xi_min, o.r_at_min))
}

#[pyfunction]
fn crss_squeezing_analytic(r: f64, phi_rel: f64) -> PyResult<f64> {
    obs::crss_squeezing_analytic(r, phi_rel).py()
}

/// `(xi^2, min_φ Var[E_φ])` of a coherent spin state tilted by `theta` from
/// the south pole, with field coupling `g`.
#[pyfunction]
#[pyo3(signature = (j, theta, g, phi = 0.0))]
fn css_light(j: f64, theta: f64, g: f64, phi: f64) -> PyResult<(f64, f64)> {
    let css = coherent_spin_state(spin(j)?, BlochAngles::new(theta, phi).py()?);
    let xi = obs::squeezing_parameter(&css).py()?.xi_sq;
    let q = obs::optimal_dipole_quadrature(&css).py()?;
    Ok((xi, obs::field_from_dipole(&q, obs::FieldCoupling::new(g).py()?)))
}

#[pymodule]
fn crss(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<CrssAnsatz>()?;
    m.add_class::<ResonantSteadyState>()?;
    m.add_function(wrap_pyfunction!(log_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(truncation_points, m)?)?;
    m.add_function(wrap_pyfunction!(proximity_error_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(r_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_moments, m)?)?;
    m.add_function(wrap_pyfunction!(crss_minimal, m)?)?;
    m.add_function(wrap_pyfunction!(ansatz_minimal_infidelity, m)?)?;
    m.add_function(wrap_pyfunction!(steadystate_infidelity, m)?)?;
    m.add_function(wrap_pyfunction!(critical_drive, m)?)?;
    m.add_function(wrap_pyfunction!(crss_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state_general, m)?)?;
    m.add_function(wrap_pyfunction!(cavity_effective_params, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state_xi_sq, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_squeezing, m)?)?;
    m.add_function(wrap_pyfunction!(crss_squeezing_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(css_light, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
