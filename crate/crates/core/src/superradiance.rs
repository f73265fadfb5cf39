//! Driven collective decay
//! `dρ/dt = -i(Hρ - ρH†) + γ JρJ†`, `H = (Δ - iγ/2) J†J - (Ω J† + Ω* J)`,
//! with `ħ = 1` and rates in units of `γ`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::banded::BandMatrix;
use crate::crss::{error_bidiagonal, AnsatzSpectrum, CrssParams};
use crate::error::{domain, CrssError, Result};
use crate::numeric::{log_add_exp, log_sum_exp};
use crate::spin::{build_operators, BandedOperator, Spin, SpinExpectation, SpinOperatorSet, SpinState};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest entry modulus.
pub fn max_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Coherent drive `Ω`, collective shift `Δ` and collective decay `γ`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DriveParams {
    pub omega: Complex64,
    pub delta: f64,
    pub gamma: f64,
}

impl DriveParams {
    pub fn new(omega: Complex64, delta: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return domain(format!("gamma = {gamma} must be positive"));
        }
        if !omega.is_finite() || !delta.is_finite() {
            return domain("drive parameters must be finite");
        }
        Ok(Self { omega, delta, gamma })
    }

    /// Resonant drive `Ω = r Ω_c` (real, positive), so that
    /// `α = 2iΩ/γ = i j r`.
    pub fn resonant(spin: Spin, r: f64, gamma: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return domain(format!("r = {r} must be non-negative"));
        }
        let omega_c = critical_drive(spin.n_atoms(), 0.0, gamma);
        Self::new(Complex64::new(r * omega_c, 0.0), 0.0, gamma)
    }

    /// `|Ω| / Ω_c` for the given spin.
    pub fn r(&self, spin: Spin) -> f64 {
        self.omega.norm() / critical_drive(spin.n_atoms(), self.delta, self.gamma)
    }
}

/// Phase `φ` of the resonant drive convention, `α = j r e^{-iφ}`.
pub const RESONANT_PHI: f64 = -FRAC_PI_2;

/// `α = Ω / (Δ - iγ/2)`.
pub fn crss_amplitude(drive: &DriveParams) -> Result<Complex64> {
    let den = Complex64::new(drive.delta, -0.5 * drive.gamma);
    if den == ZERO {
        return domain("delta and gamma both vanish");
    }
    Ok(drive.omega / den)
}

/// `Ω_c = (N/4) sqrt(γ^2 + 4Δ^2)`.
pub fn critical_drive(n_atoms: u32, delta: f64, gamma: f64) -> f64 {
    n_atoms as f64 / 4.0 * (gamma * gamma + 4.0 * delta * delta).sqrt()
}

/// Dense density matrix with validated Hermiticity, trace and positivity.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    spin: Spin,
    rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(spin: Spin, rho: DMatrix<Complex64>) -> Result<Self> {
        let n = spin.dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(CrssError::DimensionMismatch { expected: n, got: rho.nrows() });
        }
        let herm = max_norm(&(&rho - rho.adjoint()));
        if herm > 1e-10 {
            return domain(format!("density matrix is not Hermitian (defect {herm:e})"));
        }
        let tr = rho.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return domain(format!("density matrix trace is {tr}"));
        }
        let out = Self { spin, rho };
        let min = out.min_eigenvalue();
        if min < -1e-8 {
            return domain(format!("density matrix is not positive (eigenvalue {min:e})"));
        }
        Ok(out)
    }

    pub fn pure(state: &SpinState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amps());
        Self { spin: state.spin(), rho: &v * v.adjoint() }
    }

    pub fn ground(spin: Spin) -> Self {
        Self::pure(&SpinState::ground(spin))
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn rho(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.rho
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rho.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `<ψ|ρ|ψ>`.
    pub fn fidelity(&self, state: &SpinState) -> Result<f64> {
        if state.spin() != self.spin {
            return Err(CrssError::DimensionMismatch { expected: self.spin.dim(), got: state.spin().dim() });
        }
        let v = nalgebra::DVector::from_column_slice(state.amps());
        Ok((v.adjoint() * &self.rho * &v)[(0, 0)].re)
    }

    /// `½ Tr|ρ - σ|`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if other.spin != self.spin {
            return Err(CrssError::DimensionMismatch { expected: self.spin.dim(), got: other.spin.dim() });
        }
        let d = &self.rho - &other.rho;
        let d = (&d + d.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(0.5 * d.symmetric_eigenvalues().iter().map(|v| v.abs()).sum::<f64>())
    }
}

impl SpinExpectation for DensityMatrix {
    fn spin(&self) -> Spin {
        self.spin
    }

    fn expect(&self, op: &BandedOperator) -> Result<Complex64> {
        if op.dim() != self.spin.dim() {
            return Err(CrssError::DimensionMismatch { expected: self.spin.dim(), got: op.dim() });
        }
        Ok(op.entries().map(|(r, c, v)| v * self.rho[(c, r)]).sum())
    }
}

/// Exact resonant steady state `ρ ∝ (K†K)^{-1}`, `K = J - α`, kept in
/// factored log form so that it never overflows and never needs `O(n^2)`
/// storage:
/// `ρ_ab = e^{i(b-a)φ} exp(G_a + G_b + S_{max(a,b)} - ln Z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonantSteadyState {
    spin: Spin,
    alpha: Complex64,
    g: Vec<f64>,
    s: Vec<f64>,
    ln_trace: f64,
}

impl ResonantSteadyState {
    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn r(&self) -> f64 {
        self.alpha.norm() / self.spin.j()
    }

    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        let mag = (self.g[a] + self.g[b] + self.s[a.max(b)] - self.ln_trace).exp();
        if mag == 0.0 {
            return ZERO;
        }
        let phi = -self.alpha.arg();
        Complex64::from_polar(mag, (b as f64 - a as f64) * phi)
    }

    /// Diagonal populations `ρ_aa`.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.spin.dim()).map(|a| self.entry(a, a).re).collect()
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        let n = self.spin.dim();
        let rho = DMatrix::from_fn(n, n, |a, b| self.entry(a, b));
        DensityMatrix::new(self.spin, rho)
    }

    pub fn purity(&self) -> f64 {
        let n = self.spin.dim();
        let mut sum = 0.0;
        for a in 0..n {
            for b in 0..n {
                sum += (2.0 * (self.g[a] + self.g[b] + self.s[a.max(b)] - self.ln_trace)).exp();
            }
        }
        sum
    }

    /// `<ψ|ρ|ψ>` in `O(n^2)`.
    pub fn fidelity(&self, state: &SpinState) -> Result<f64> {
        if state.spin() != self.spin {
            return Err(CrssError::DimensionMismatch { expected: self.spin.dim(), got: state.spin().dim() });
        }
        let psi = state.amps();
        let n = psi.len();
        let mut sum = ZERO;
        for a in 0..n {
            for b in 0..n {
                sum += psi[a].conj() * self.entry(a, b) * psi[b];
            }
        }
        Ok(sum.re)
    }
}

impl SpinExpectation for ResonantSteadyState {
    fn spin(&self) -> Spin {
        self.spin
    }

    fn expect(&self, op: &BandedOperator) -> Result<Complex64> {
        if op.dim() != self.spin.dim() {
            return Err(CrssError::DimensionMismatch { expected: self.spin.dim(), got: op.dim() });
        }
        Ok(op.entries().map(|(r, c, v)| v * self.entry(c, r)).sum())
    }
}

/// Steady state for `Δ = 0`, where the drive enters only through
/// `α = 2iΩ/γ`.
pub fn steady_state_resonant(spin: Spin, alpha: Complex64) -> Result<ResonantSteadyState> {
    let abs_alpha = alpha.norm();
    if !abs_alpha.is_finite() || abs_alpha >= spin.j() {
        return domain(format!("|alpha| = {abs_alpha} must be below j = {}", spin.j()));
    }
    let n = spin.dim();
    if abs_alpha == 0.0 {
        let mut g = vec![f64::NEG_INFINITY; n];
        g[0] = 0.0;
        return Ok(ResonantSteadyState { spin, alpha, g, s: vec![0.0; n], ln_trace: 0.0 });
    }
    let ln_a = abs_alpha.ln();
    let mut p = vec![0.0; n];
    for i in 1..n {
        p[i] = p[i - 1] + spin.ladder(i).ln();
    }
    let f: Vec<f64> = (0..n).map(|l| 2.0 * (p[l] - (l as f64 + 1.0) * ln_a)).collect();
    let mut s = vec![0.0; n];
    s[n - 1] = f[n - 1];
    for k in (0..n - 1).rev() {
        s[k] = log_add_exp(s[k + 1], f[k]);
    }
    let g: Vec<f64> = (0..n).map(|a| a as f64 * ln_a - p[a]).collect();
    let diag: Vec<f64> = (0..n).map(|a| 2.0 * g[a] + s[a]).collect();
    let ln_trace = log_sum_exp(&diag);
    Ok(ResonantSteadyState { spin, alpha, g, s, ln_trace })
}

/// The generator of the master equation for one spin and drive.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    ops: SpinOperatorSet,
    drive: DriveParams,
    h: BandedOperator,
    h_dag: BandedOperator,
}

impl Liouvillian {
    pub fn new(spin: Spin, drive: DriveParams) -> Self {
        let ops = build_operators(spin);
        let jj = ops.raising() * ops.lowering();
        let coherent = &ops.raising().scaled(drive.omega) + &ops.lowering().scaled(drive.omega.conj());
        let h = &jj.scaled(Complex64::new(drive.delta, -0.5 * drive.gamma)) - &coherent;
        let h_dag = h.adjoint();
        Self { ops, drive, h, h_dag }
    }

    pub fn spin(&self) -> Spin {
        self.ops.spin()
    }

    pub fn drive(&self) -> &DriveParams {
        &self.drive
    }

    pub fn apply(&self, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let n = self.spin().dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(CrssError::DimensionMismatch { expected: n, got: rho.nrows() });
        }
        let j = self.ops.lowering();
        let hr = self.h.mul_dense(rho);
        let rh = BandedOperator::dense_mul(rho, &self.h_dag);
        let jump = BandedOperator::dense_mul(&j.mul_dense(rho), self.ops.raising());
        Ok((hr - rh) * (-I) + jump * Complex64::new(self.drive.gamma, 0.0))
    }

    /// Vectorized generator acting on `x[a n + b] = ρ_ab`; `n` sub- and
    /// `n + 1` superdiagonals.
    pub fn band_matrix(&self) -> BandMatrix {
        let n = self.spin().dim();
        let mut m = BandMatrix::zeros(n * n, n, n + 1);
        let ladder = self.ops.ladder();
        for a in 0..n {
            for b in 0..n {
                let row = a * n + b;
                for c in self.h.row_cols(a) {
                    m.add(row, c * n + b, -I * self.h.get(a, c));
                }
                for c in self.h.row_cols(b) {
                    m.add(row, a * n + c, I * self.h.get(b, c).conj());
                }
                if a + 1 < n && b + 1 < n {
                    let v = self.drive.gamma * ladder[a + 1] * ladder[b + 1];
                    m.add(row, (a + 1) * n + b + 1, Complex64::new(v, 0.0));
                }
            }
        }
        m
    }
}

pub fn liouvillian_apply(rho: &DMatrix<Complex64>, drive: &DriveParams, spin: Spin) -> Result<DMatrix<Complex64>> {
    Liouvillian::new(spin, *drive).apply(rho)
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SteadyStateOptions {
    /// Largest `j` accepted by the vectorized path.
    pub j_cap: f64,
    /// Trace distance above which two independent starts count as a
    /// degenerate null space.
    pub degeneracy_tol: f64,
    pub max_iterations: usize,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { j_cap: 25.0, degeneracy_tol: 1e-6, max_iterations: 40 }
    }
}

/// Null vector of the vectorized generator by shifted inverse iteration from
/// two independent starts.
pub fn steady_state_general(spin: Spin, drive: &DriveParams, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    if spin.j() > opts.j_cap {
        return Err(CrssError::CapExceeded { j: spin.j(), cap: opts.j_cap });
    }
    let liou = Liouvillian::new(spin, *drive);
    let band = liou.band_matrix();
    let scale = band.max_abs();
    let lu = band.shifted(Complex64::new(-1e-10 * scale, 0.0)).factor()?;
    let n = spin.dim();

    let mut identity = vec![ZERO; n * n];
    for a in 0..n {
        identity[a * n + a] = Complex64::new(1.0, 0.0);
    }
    // deterministic start with no special structure
    let scrambled: Vec<Complex64> = (0..n * n)
        .map(|k| {
            let (u, v) = ((k * 7919) % 1013, (k * 104_729) % 1009);
            Complex64::new(u as f64 / 1013.0 - 0.5, v as f64 / 1009.0 - 0.5)
        })
        .collect();

    let mut results = Vec::with_capacity(2);
    for start in [identity, scrambled] {
        let x = inverse_iterate(&band, &lu, start, scale, opts.max_iterations)?;
        results.push(density_from_vector(spin, &x)?);
    }
    let distance = results[0].trace_distance(&results[1])?;
    if distance > opts.degeneracy_tol {
        return Err(CrssError::DegenerateSteadyState { distance });
    }
    Ok(results.swap_remove(0))
}

fn inverse_iterate(
    band: &BandMatrix,
    lu: &crate::banded::BandLu,
    mut x: Vec<Complex64>,
    scale: f64,
    max_iterations: usize,
) -> Result<Vec<Complex64>> {
    let max_abs = |v: &[Complex64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        lu.solve_in_place(&mut x);
        let m = max_abs(&x);
        if !(m > 0.0) || !m.is_finite() {
            return Err(CrssError::NoConvergence { iterations: 0, residual: f64::NAN });
        }
        x.iter_mut().for_each(|v| *v /= m);
        residual = max_abs(&band.apply(&x)) / scale;
        if residual < 1e-13 {
            return Ok(x);
        }
    }
    if residual < 1e-10 {
        return Ok(x);
    }
    Err(CrssError::NoConvergence { iterations: max_iterations, residual })
}

fn density_from_vector(spin: Spin, x: &[Complex64]) -> Result<DensityMatrix> {
    let n = spin.dim();
    let tr: Complex64 = (0..n).map(|a| x[a * n + a]).sum();
    if tr.norm() < 1e-12 {
        return Err(CrssError::DegenerateSteadyState { distance: f64::NAN });
    }
    let rho = DMatrix::from_fn(n, n, |a, b| x[a * n + b] / tr);
    let herm = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let t = herm.trace();
    DensityMatrix::new(spin, herm / t)
}

/// Adaptive Dormand-Prince 5(4) propagation of the master equation; used as
/// an independent oracle.
pub fn propagate(rho0: &DensityMatrix, drive: &DriveParams, t_end: f64, tol: f64) -> Result<DensityMatrix> {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    if !(t_end >= 0.0) || !(tol > 0.0) {
        return domain("t_end must be non-negative and tol positive");
    }
    let liou = Liouvillian::new(rho0.spin(), *drive);
    let mut y = rho0.rho().clone();
    let mut t = 0.0;
    let mut h = 0.01 / drive.gamma;
    let mut k1 = liou.apply(&y)?;
    let mut steps = 0usize;
    while t < t_end {
        if steps > 2_000_000 {
            return Err(CrssError::Integrator(format!("step limit reached at t = {t}")));
        }
        h = h.min(t_end - t);
        let mut k: Vec<DMatrix<Complex64>> = vec![k1.clone()];
        for s in 1..7 {
            let mut ys = y.clone();
            for (l, kl) in k.iter().enumerate() {
                if A[s][l] != 0.0 {
                    ys += kl * Complex64::new(h * A[s][l], 0.0);
                }
            }
            k.push(liou.apply(&ys)?);
        }
        let mut y_new = y.clone();
        let mut err = DMatrix::<Complex64>::zeros(y.nrows(), y.ncols());
        for (l, kl) in k.iter().enumerate() {
            if l < 6 && A[6][l] != 0.0 {
                y_new += kl * Complex64::new(h * A[6][l], 0.0);
            }
            if E[l] != 0.0 {
                err += kl * Complex64::new(h * E[l], 0.0);
            }
        }
        let scale = tol * (1.0 + max_norm(&y).max(max_norm(&y_new)));
        let ratio = max_norm(&err) / scale;
        if !ratio.is_finite() {
            return Err(CrssError::Integrator(format!("non-finite error estimate at t = {t}")));
        }
        if ratio <= 1.0 {
            t += h;
            y = y_new;
            k1 = k.swap_remove(6);
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * t_end.max(1.0) {
            return Err(CrssError::Integrator(format!("step size underflow at t = {t}")));
        }
        steps += 1;
    }
    let herm = (&y + y.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = herm.trace();
    DensityMatrix::new(rho0.spin(), herm / tr)
}

/// `jr (1 - <ans|ρ_s|ans>)` at `Δ = 0`, from the spectrum of `K†K`. Keeps
/// full relative accuracy far below `1e-16`.
pub fn steadystate_infidelity(spin: Spin, r: f64) -> Result<f64> {
    let params = CrssParams::new(spin, r, RESONANT_PHI)?;
    let spec = AnsatzSpectrum::new(&params)?;
    let pops = spec.excited_populations();
    let lambda0 = spec.lambda0;
    let x = spec.ground_deficit();
    let mut num = x;
    let mut den = 1.0;
    for (l, p) in spec.lambdas.iter().zip(&pops) {
        num += lambda0 * (1.0 - p) / l;
        den += lambda0 / l;
    }
    Ok(spin.j() * r * num / den)
}

/// `1 - Tr ρ_s^2` of the resonant steady state from the spectrum of `K†K`,
/// accurate when the state is almost pure.
pub fn steady_state_impurity(spin: Spin, alpha: Complex64) -> Result<f64> {
    let abs_alpha = alpha.norm();
    if !(abs_alpha < spin.j()) {
        return domain(format!("|alpha| = {abs_alpha} must be below j = {}", spin.j()));
    }
    if abs_alpha == 0.0 {
        return Ok(0.0);
    }
    let b = error_bidiagonal(spin, abs_alpha);
    let sigma0 = b.smallest_singular_value();
    let lambda0 = sigma0 * sigma0;
    let spec = b.gram_left().spectrum_with_rows(&[])?;
    // weights q_k = λ_0/λ_k, p_k = q_k / (1 + Q)
    let q: Vec<f64> = spec.values[1..].iter().map(|l| lambda0 / l).collect();
    let big_q: f64 = q.iter().sum();
    let s = big_q / (1.0 + big_q);
    let sq: f64 = q.iter().map(|v| (v / (1.0 + big_q)).powi(2)).sum();
    Ok(2.0 * s - s * s - sq)
}

/// Single-mode cavity coupling, eliminated adiabatically.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CavityParams {
    pub g_coupling: Complex64,
    pub delta_c: f64,
    pub kappa: f64,
    pub delta_a: f64,
}

/// `Δ - iγ/2 = |g|^2 / (δ_c + iκ/2)`.
pub fn cavity_effective_params(cavity: &CavityParams) -> Result<(f64, f64)> {
    if !(cavity.kappa > 0.0) {
        return domain(format!("kappa = {} must be positive", cavity.kappa));
    }
    let g2 = cavity.g_coupling.norm_sqr();
    let d = cavity.delta_c * cavity.delta_c + 0.25 * cavity.kappa * cavity.kappa;
    Ok((g2 * cavity.delta_c / d, g2 * cavity.kappa / d))
}
