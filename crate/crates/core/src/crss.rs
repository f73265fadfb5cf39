//! Coherently radiating spin states: approximate eigenstates of the lowering
//! operator `J` with eigenvalue `α = j r e^{-iφ}`, `0 < r < 1`.
//!
//! Coefficients are handled as log-magnitudes plus a linear phase so that
//! nothing overflows for `j` up to `1e5`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, CrssError, Result};
use crate::numeric::{bisect_root, golden_min, log_sum_exp};
use crate::spin::{Spin, SpinState};
use crate::tridiag::UpperBidiagonal;

/// `α = j r e^{-iφ}` together with the spin it belongs to.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CrssParams {
    spin: Spin,
    r: f64,
    phi: f64,
}

impl CrssParams {
    pub fn new(spin: Spin, r: f64, phi: f64) -> Result<Self> {
        check_r(r)?;
        if !phi.is_finite() {
            return domain("phi must be finite");
        }
        Ok(Self { spin, r, phi })
    }

    pub fn from_alpha(spin: Spin, alpha: Complex64) -> Result<Self> {
        Self::new(spin, alpha.norm() / spin.j(), -alpha.arg())
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn abs_alpha(&self) -> f64 {
        self.spin.j() * self.r
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.abs_alpha(), -self.phi)
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return domain(format!("r = {r} must satisfy 0 < r < 1"));
    }
    Ok(())
}

/// `a_m = a_{-j} e^{f_m} e^{-i(m+j)φ}` with `f_{-j} = 0`.
#[derive(Clone, Debug)]
pub struct LogCoefficients {
    spin: Spin,
    r: f64,
    phi: f64,
    f: Vec<f64>,
}

impl LogCoefficients {
    /// Running sum `f_{m+1} = f_m + ln(rj) - ln c_{m+1}`.
    pub fn new(spin: Spin, r: f64, phi: f64) -> Result<Self> {
        check_r(r)?;
        let ln_alpha = (r * spin.j()).ln();
        let n = spin.dim();
        let mut f = Vec::with_capacity(n);
        f.push(0.0);
        for i in 1..n {
            let prev = f[i - 1];
            f.push(prev + ln_alpha - 0.5 * spin.ladder_sq(i).ln());
        }
        Ok(Self { spin, r, phi, f })
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `f_m` by basis index.
    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn f_at(&self, m: f64) -> Result<f64> {
        Ok(self.f[self.spin.index_of(m)?])
    }

    /// Phase of `a_m` at basis index `i`: `-iφ`.
    pub fn phase(&self, index: usize) -> f64 {
        -(index as f64) * self.phi
    }

    /// `ln sqrt(sum_{i <= upto} e^{2 f_i})`, i.e. `-ln |a_{-j}|` for the
    /// state truncated at `upto`.
    pub fn log_norm(&self, upto: usize) -> f64 {
        let twice: Vec<f64> = self.f[..=upto].iter().map(|x| 2.0 * x).collect();
        0.5 * log_sum_exp(&twice)
    }

    /// Basis index of the largest `|a_m|` (first one on ties).
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.f.iter().enumerate() {
            if *v > self.f[best] {
                best = i;
            }
        }
        best
    }

    /// `ln |a_j / a_{-j}| = f_j - f_{-j}` of the untruncated recursion.
    pub fn log_endpoint_ratio(&self) -> f64 {
        self.f[self.f.len() - 1] - self.f[0]
    }

    /// `ln |a_j / max_m a_m|` of the untruncated recursion.
    pub fn log_endpoint_to_peak(&self) -> f64 {
        self.f[self.f.len() - 1] - self.f[self.peak_index()]
    }

    /// Normalized state keeping basis indices `0..=upto`.
    pub fn truncated_state(&self, upto: usize) -> Result<SpinState> {
        if upto >= self.f.len() {
            return domain(format!("truncation index {upto} beyond dimension {}", self.f.len()));
        }
        let log_mag: Vec<f64> =
            (0..self.f.len()).map(|i| if i <= upto { self.f[i] } else { f64::NEG_INFINITY }).collect();
        let phase: Vec<f64> = (0..self.f.len()).map(|i| self.phase(i)).collect();
        SpinState::from_log_polar(self.spin, &log_mag, &phase)
    }

    /// `ln |a_s|` of the state normalized up to `upto`.
    pub fn log_abs_amplitude(&self, index: usize, upto: usize) -> f64 {
        self.f[index] - self.log_norm(upto)
    }
}

pub fn log_coefficients(params: &CrssParams) -> LogCoefficients {
    LogCoefficients::new(params.spin, params.r, params.phi).expect("validated params")
}

/// Basis indices of the interior maximum (`m_-`) and minimum (`m_+`) of
/// `|a_m|`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TruncationPoints {
    spin: Spin,
    minus_index: usize,
    plus_index: usize,
}

impl TruncationPoints {
    pub fn minus_index(&self) -> usize {
        self.minus_index
    }

    pub fn plus_index(&self) -> usize {
        self.plus_index
    }

    pub fn m_minus(&self) -> f64 {
        self.spin.m(self.minus_index)
    }

    pub fn m_plus(&self) -> f64 {
        self.spin.m(self.plus_index)
    }
}

/// Roots of `|α|^2 = j(j+1) - m(m+1)` rounded onto the `m` lattice. `m_+` is
/// moved up one step when rounding landed before the discrete minimum of
/// `|a_m|`. `m_-` may sit one step left of the discrete maximum near ties.
pub fn truncation_points(spin: Spin, r: f64) -> Result<TruncationPoints> {
    check_r(r)?;
    let j = spin.j();
    let alpha_sq = (j * r) * (j * r);
    let sq = ((2.0 * j + 1.0).powi(2) - 4.0 * alpha_sq).sqrt();
    let last = spin.dim() - 1;
    let to_index = |m: f64| ((m + j).round().max(0.0) as usize).min(last);
    let minus = to_index(0.5 * (-1.0 - sq));
    let mut plus = to_index(0.5 * (-1.0 + sq));
    // |a_{i+1}| / |a_i| = |α| / c_{i+1}
    if plus < last && spin.ladder_sq(plus + 1) > alpha_sq {
        plus += 1;
    }
    Ok(TruncationPoints { spin, minus_index: minus, plus_index: plus.max(minus) })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ErrorMethod {
    /// Direct residual `||(J - α)ψ||`.
    Numeric,
    /// `jr |a_{m_+}|` of the truncated recursion.
    AnsatzFormula,
    /// Closed form `q e^{-2 j g(r)}`.
    Analytic,
    /// Square root of the ground eigenvalue of `K†K`.
    Minimal,
}

/// Proximity error `||Jψ - αψ||`. The log is kept because the value
/// underflows for large `j`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ProximityError {
    pub epsilon: f64,
    pub ln_epsilon: f64,
    pub method: ErrorMethod,
}

impl ProximityError {
    fn from_ln(ln_epsilon: f64, method: ErrorMethod) -> Self {
        Self { epsilon: ln_epsilon.exp(), ln_epsilon, method }
    }

    fn from_value(epsilon: f64, method: ErrorMethod) -> Self {
        Self { epsilon, ln_epsilon: epsilon.ln(), method }
    }
}

/// The truncated-recursion ansatz with its ingredients.
#[derive(Clone, Debug)]
pub struct CrssAnsatz {
    params: CrssParams,
    coefficients: LogCoefficients,
    truncation: TruncationPoints,
    state: SpinState,
    log_norm: f64,
}

impl CrssAnsatz {
    pub fn new(params: CrssParams) -> Result<Self> {
        let coefficients = log_coefficients(&params);
        let truncation = truncation_points(params.spin, params.r)?;
        let state = coefficients.truncated_state(truncation.plus_index)?;
        let log_norm = coefficients.log_norm(truncation.plus_index);
        Ok(Self { params, coefficients, truncation, state, log_norm })
    }

    pub fn params(&self) -> &CrssParams {
        &self.params
    }

    pub fn coefficients(&self) -> &LogCoefficients {
        &self.coefficients
    }

    pub fn truncation(&self) -> TruncationPoints {
        self.truncation
    }

    pub fn state(&self) -> &SpinState {
        &self.state
    }

    pub fn into_state(self) -> SpinState {
        self.state
    }

    /// `ln |a_m|` of the normalized ansatz by basis index (`-inf` beyond
    /// `m_+`).
    pub fn log_abs(&self, index: usize) -> f64 {
        if index > self.truncation.plus_index {
            f64::NEG_INFINITY
        } else {
            self.coefficients.f[index] - self.log_norm
        }
    }

    /// `ε = jr |a_{m_+}|`.
    pub fn error(&self) -> ProximityError {
        let ln = self.params.abs_alpha().ln() + self.log_abs(self.truncation.plus_index);
        ProximityError::from_ln(ln, ErrorMethod::AnsatzFormula)
    }
}

pub fn crss_ansatz(params: &CrssParams) -> Result<SpinState> {
    Ok(CrssAnsatz::new(*params)?.into_state())
}

/// `||Jψ - αψ||` evaluated directly from the amplitudes.
pub fn proximity_error_numeric(state: &SpinState, alpha: Complex64) -> ProximityError {
    let spin = state.spin();
    let a = state.amps();
    let n = a.len();
    let mut sum = 0.0;
    for i in 0..n {
        let lowered = if i + 1 < n { a[i + 1] * spin.ladder(i + 1) } else { Complex64::new(0.0, 0.0) };
        sum += (lowered - alpha * a[i]).norm_sqr();
    }
    ProximityError::from_value(sum.sqrt(), ErrorMethod::Numeric)
}

/// `g(r) = artanh(sqrt(1-r^2)) - sqrt(1-r^2)`.
pub fn exponent_g(r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return domain(format!("r = {r} must satisfy 0 < r <= 1"));
    }
    let c = (1.0 - r * r).max(0.0).sqrt();
    if c == 0.0 {
        return Ok(0.0);
    }
    Ok(c.atanh() - c)
}

/// `q(j, r) = j^{3/4} (r^2 sqrt(1-r^2) / π)^{1/4}`.
pub fn prefactor_q(j: f64, r: f64) -> Result<f64> {
    exponent_g(r)?;
    let c = (1.0 - r * r).max(0.0).sqrt();
    Ok(j.powf(0.75) * (r * r * c / PI).powf(0.25))
}

/// `ln(q e^{-2 j g(r)})` for real `j`.
pub fn ln_analytic_error(j: f64, r: f64) -> Result<f64> {
    Ok(prefactor_q(j, r)?.ln() - 2.0 * j * exponent_g(r)?)
}

pub fn proximity_error_analytic(spin: Spin, r: f64) -> Result<ProximityError> {
    Ok(ProximityError::from_ln(ln_analytic_error(spin.j(), r)?, ErrorMethod::Analytic))
}

/// Validity boundary `r_j`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RThreshold {
    /// Root of `ε_analytic(j, r) = 1/e`.
    pub r_j: f64,
    /// `sqrt(1 - (3/2j)^{2/3})`.
    pub asymptotic: f64,
    /// `false` when no sign change was found; `r_j` then holds the bracket
    /// edge.
    pub bracketed: bool,
}

pub fn r_threshold_asymptotic(j: f64) -> f64 {
    (1.0 - (1.5 / j).powf(2.0 / 3.0)).max(0.0).sqrt()
}

/// `r_j` for real `j >= 2`.
///
/// `ε_analytic` rises from zero, peaks below `r = 1` (the prefactor `q`
/// vanishes there) and falls again, so the root is searched between a small
/// `r` and the location of the peak, where `ln ε` is monotone.
pub fn r_threshold_real(j: f64) -> Result<RThreshold> {
    if !(j >= 2.0) {
        return domain(format!("r_j requires j >= 2 (got {j})"));
    }
    let target = |r: f64| ln_analytic_error(j, r).map(|v| v + 1.0).unwrap_or(f64::NAN);
    let (r_peak, neg_peak) = golden_min(|r| -target(r), 1e-3, 1.0 - 1e-15, 1e-13);
    let asymptotic = r_threshold_asymptotic(j);
    if -neg_peak < 0.0 {
        return Ok(RThreshold { r_j: r_peak, asymptotic, bracketed: false });
    }
    let lo = 1e-3;
    match bisect_root(target, lo, r_peak, 1e-15) {
        Some(r_j) => Ok(RThreshold { r_j, asymptotic, bracketed: true }),
        None => Ok(RThreshold { r_j: lo, asymptotic, bracketed: false }),
    }
}

pub fn r_threshold(spin: Spin) -> Result<RThreshold> {
    r_threshold_real(spin.j())
}

/// `K = J - α` as a real bidiagonal matrix after removing phases:
/// diagonal `|α|`, superdiagonal `c_{i+1}`.
pub(crate) fn error_bidiagonal(spin: Spin, abs_alpha: f64) -> UpperBidiagonal {
    let n = spin.dim();
    UpperBidiagonal::new(vec![abs_alpha; n], (1..n).map(|i| spin.ladder(i)).collect())
}

/// State minimizing `||(J - α)ψ||`: ground eigenvector of `K†K`, gauge
/// fixed so that `a_{-j} > 0`.
pub fn crss_minimal(spin: Spin, alpha: Complex64) -> Result<(SpinState, ProximityError)> {
    let abs_alpha = alpha.norm();
    if !(abs_alpha < spin.j()) {
        return domain(format!("|alpha| = {abs_alpha} must be below j = {}", spin.j()));
    }
    if abs_alpha == 0.0 {
        return Ok((SpinState::ground(spin), ProximityError::from_value(0.0, ErrorMethod::Minimal)));
    }
    let phi = -alpha.arg();
    let b = error_bidiagonal(spin, abs_alpha);
    let w = b.smallest_right_singular_vector(500)?;
    let log_mag: Vec<f64> = w.iter().map(|v| v.abs().ln()).collect();
    let phase: Vec<f64> = (0..w.len()).map(|i| -(i as f64) * phi).collect();
    let state = SpinState::from_log_polar(spin, &log_mag, &phase)?;
    let sigma = b.smallest_singular_value();
    let err = if sigma > 0.0 {
        ProximityError::from_value(sigma, ErrorMethod::Minimal)
    } else {
        ProximityError::from_ln(ln_smallest_singular_from_det(&b)?, ErrorMethod::Minimal)
    };
    Ok((state, err))
}

/// `ln σ_min = n ln|α| - Σ_{k>=1} ln σ_k`, from `|det K| = |α|^n`.
pub(crate) fn ln_smallest_singular_from_det(b: &UpperBidiagonal) -> Result<f64> {
    let spec = b.gram_left().spectrum_with_rows(&[])?;
    let n = b.dim() as f64;
    let ln_alpha = b.apply(&{
        let mut e = vec![0.0; b.dim()];
        e[b.dim() - 1] = 1.0;
        e
    })[b.dim() - 1]
        .ln();
    Ok(n * ln_alpha - spec.values[1..].iter().map(|v| 0.5 * v.ln()).sum::<f64>())
}

/// Spectral data linking the ansatz to the eigenbasis of `K†K`.
#[derive(Clone, Debug)]
pub struct AnsatzSpectrum {
    /// `ln ε_ans`.
    pub ln_epsilon: f64,
    /// Smallest eigenvalue `σ_0^2` of `K†K`.
    pub lambda0: f64,
    /// Remaining eigenvalues `σ_k^2`, `k >= 1`.
    pub lambdas: Vec<f64>,
    /// `|u_k(m_+)|^2` for `k >= 1` (left singular vectors of `K`).
    pub weights: Vec<f64>,
}

impl AnsatzSpectrum {
    /// Uses the exact identity `<v_k|ψ> = -α a_s conj(u_k(s)) / σ_k`, valid
    /// because `Kψ = -α a_s |s>` for the truncated recursion.
    pub fn new(params: &CrssParams) -> Result<Self> {
        let ansatz = CrssAnsatz::new(*params)?;
        let s = ansatz.truncation().plus_index;
        let b = error_bidiagonal(params.spin, params.abs_alpha());
        let spec = b.gram_left().spectrum_with_rows(&[s])?;
        let sigma0 = b.smallest_singular_value();
        Ok(Self {
            ln_epsilon: ansatz.error().ln_epsilon,
            lambda0: sigma0 * sigma0,
            lambdas: spec.values[1..].to_vec(),
            weights: spec.rows[0][1..].iter().map(|u| u * u).collect(),
        })
    }

    /// `|<v_k|ψ>|^2` for `k >= 1`.
    pub fn excited_populations(&self) -> Vec<f64> {
        let e2 = (2.0 * self.ln_epsilon).exp();
        self.weights.iter().zip(&self.lambdas).map(|(w, l)| e2 * w / l).collect()
    }

    /// `1 - |<ψ|v_0>|^2`.
    pub fn ground_deficit(&self) -> f64 {
        let sum: f64 = self.weights.iter().zip(&self.lambdas).map(|(w, l)| w / l).sum();
        (2.0 * self.ln_epsilon + sum.ln()).exp().min(1.0)
    }
}

/// `1 - |<ans|min>|` without cancellation.
pub fn ansatz_minimal_infidelity(params: &CrssParams) -> Result<f64> {
    let x = AnsatzSpectrum::new(params)?.ground_deficit();
    Ok(x / (1.0 + (1.0 - x).sqrt()))
}

/// Gaussian approximation of `|a_m|^2` around its peak.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GaussianMoments {
    /// `-j sqrt(1-r^2)`.
    pub center: f64,
    /// `w^2 = j r^2 / (2 sqrt(1-r^2))`.
    pub width_sq: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    /// `sqrt(1-r^2) j^{1/3} >= 1`.
    pub valid: bool,
}

impl GaussianMoments {
    /// Normalized Gaussian density at `m`.
    pub fn density(&self, m: f64) -> f64 {
        (-(m - self.center).powi(2) / (2.0 * self.width_sq)).exp() / (2.0 * PI * self.width_sq).sqrt()
    }
}

pub fn gaussian_moments(spin: Spin, r: f64) -> Result<GaussianMoments> {
    check_r(r)?;
    let j = spin.j();
    let c = (1.0 - r * r).sqrt();
    let r2 = r * r;
    let r4 = r2 * r2;
    Ok(GaussianMoments {
        center: -j * c,
        width_sq: j * r2 / (2.0 * c),
        a2: c / (2.0 * r2 * j),
        a3: (1.0 / (3.0 * r4) - 1.0 / (6.0 * r2)) / (j * j),
        a4: c / (3.0 * r4) * (0.25 - 1.0 / r2) / (j * j * j),
        valid: c * j.cbrt() >= 1.0,
    })
}

/// Endpoint coefficient of the untruncated recursion for one spin.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct EndpointRatio {
    pub spin: Spin,
    /// `ln |a_j / max_m a_m|`: vanishes (goes to `-inf`) with `j` iff the
    /// untruncated recursion approaches an eigenstate.
    pub log_to_peak: f64,
    /// `ln |a_j / a_{-j}|`.
    pub log_to_first: f64,
}

impl EndpointRatio {
    pub fn to_peak(&self) -> f64 {
        self.log_to_peak.exp()
    }
}

pub fn endpoint_ratio_trend(r: f64, spins: &[Spin]) -> Result<Vec<EndpointRatio>> {
    if spins.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CrssError::Domain("spin list must be strictly ascending".into()));
    }
    spins
        .iter()
        .map(|&spin| {
            let c = LogCoefficients::new(spin, r, 0.0)?;
            Ok(EndpointRatio { spin, log_to_peak: c.log_endpoint_to_peak(), log_to_first: c.log_endpoint_ratio() })
        })
        .collect()
}
