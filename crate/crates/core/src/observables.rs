//! Spin squeezing, dipole quadratures, the emitted-field quadrature and the
//! collective/microscopic split of `Var[J]`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::crss::{r_threshold, RThreshold};
use crate::error::{domain, CrssError, Result};
use crate::numeric::golden_min;
use crate::spin::{build_operators, BandedOperator, Spin, SpinExpectation, SpinOperatorSet, SpinState};
use crate::superradiance::steady_state_resonant;

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn quad_form(c: &[[f64; 3]; 3], u: Vec3, v: Vec3) -> f64 {
    (0..3).map(|i| (0..3).map(|k| u[i] * c[i][k] * v[k]).sum::<f64>()).sum()
}

/// First and symmetrized second moments of `(J_x, J_y, J_z)`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SpinMoments {
    pub mean: Vec3,
    /// `½<J_k J_l + J_l J_k> - <J_k><J_l>`.
    pub covariance: [[f64; 3]; 3],
}

pub fn spin_moments<S: SpinExpectation + ?Sized>(state: &S, ops: &SpinOperatorSet) -> Result<SpinMoments> {
    let comps = [ops.jx(), ops.jy(), ops.jz()];
    let mut mean = [0.0; 3];
    for (k, op) in comps.iter().enumerate() {
        mean[k] = state.expect(op)?.re;
    }
    let mut covariance = [[0.0; 3]; 3];
    for k in 0..3 {
        for l in k..3 {
            let prod = comps[k] * comps[l];
            let sym = if k == l { prod.clone() } else { &prod + &(comps[l] * comps[k]) };
            let scale = if k == l { 1.0 } else { 0.5 };
            let v = scale * state.expect(&sym)?.re - mean[k] * mean[l];
            covariance[k][l] = v;
            covariance[l][k] = v;
        }
    }
    Ok(SpinMoments { mean, covariance })
}

/// Squeezing in the plane perpendicular to the mean spin.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SqueezingReport {
    pub mean_spin: Vec3,
    pub covariance: [[f64; 3]; 3],
    /// `2j λ_min / |<J>|^2` of the projected `2 × 2` covariance.
    pub xi_sq: f64,
    /// Angle of the squeezed direction from `e1`, in `[0, π)`.
    pub optimal_angle: f64,
    pub anti_xi_sq: f64,
    /// Orthonormal basis `(e1, e2)` of the perpendicular plane.
    pub basis: [Vec3; 2],
    pub twice_j: u32,
}

impl SqueezingReport {
    fn scale(&self) -> f64 {
        self.twice_j as f64 / dot(self.mean_spin, self.mean_spin)
    }

    /// Lab-frame unit vector at angle `phi` from `e1` in the perpendicular
    /// plane.
    pub fn direction(&self, phi: f64) -> Vec3 {
        let [e1, e2] = self.basis;
        [
            phi.cos() * e1[0] + phi.sin() * e2[0],
            phi.cos() * e1[1] + phi.sin() * e2[1],
            phi.cos() * e1[2] + phi.sin() * e2[2],
        ]
    }

    /// `ξ²_φ = 2j Var[u·J] / |<J>|^2` for any unit vector `u`.
    pub fn xi_sq_along(&self, u: Vec3) -> f64 {
        self.scale() * quad_form(&self.covariance, u, u)
    }

    pub fn xi_sq_at(&self, phi: f64) -> f64 {
        self.xi_sq_along(self.direction(phi))
    }
}

/// Deterministic perpendicular basis: reference axis `z` unless the mean
/// spin is within `1e-6` of `±z`, then `x`.
pub fn perpendicular_basis(mean: Vec3) -> Result<[Vec3; 2]> {
    let len = dot(mean, mean).sqrt();
    if !(len > 0.0) || !len.is_finite() {
        return Err(CrssError::UndefinedDirection);
    }
    let n = normalize(mean);
    let reference = if 1.0 - n[2].abs() < 1e-6 { [1.0, 0.0, 0.0] } else { [0.0, 0.0, 1.0] };
    let p = dot(reference, n);
    let e1 = normalize([reference[0] - p * n[0], reference[1] - p * n[1], reference[2] - p * n[2]]);
    let e2 = cross(n, e1);
    Ok([e1, e2])
}

pub fn squeezing_parameter<S: SpinExpectation + ?Sized>(state: &S) -> Result<SqueezingReport> {
    let spin = state.spin();
    let ops = build_operators(spin);
    let m = spin_moments(state, &ops)?;
    let len_sq = dot(m.mean, m.mean);
    if len_sq < (1e-12 * spin.j().max(1.0)).powi(2) {
        return Err(CrssError::UndefinedDirection);
    }
    let basis = perpendicular_basis(m.mean)?;
    let [e1, e2] = basis;
    let c11 = quad_form(&m.covariance, e1, e1);
    let c22 = quad_form(&m.covariance, e2, e2);
    let c12 = quad_form(&m.covariance, e1, e2);
    let mid = 0.5 * (c11 + c22);
    let rad = (0.25 * (c11 - c22).powi(2) + c12 * c12).sqrt();
    let scale = spin.twice_j() as f64 / len_sq;
    let major = 0.5 * (2.0 * c12).atan2(c11 - c22);
    let optimal_angle = (major + 0.5 * PI).rem_euclid(PI);
    Ok(SqueezingReport {
        mean_spin: m.mean,
        covariance: m.covariance,
        xi_sq: scale * (mid - rad),
        optimal_angle,
        anti_xi_sq: scale * (mid + rad),
        basis,
        twice_j: spin.twice_j(),
    })
}

/// `ξ²_φ = cos[2(φ - φ_s)] (1 - c^2)/(2c) + (1 + c^2)/(2c)`, with
/// `phi_rel = φ - φ_s`, `c = sqrt(1 - r^2)`.
pub fn crss_squeezing_analytic(r: f64, phi_rel: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return domain(format!("r = {r} must satisfy 0 < r < 1"));
    }
    let c = (1.0 - r * r).sqrt();
    Ok((2.0 * phi_rel).cos() * (1.0 - c * c) / (2.0 * c) + (1.0 + c * c) / (2.0 * c))
}

/// Lowering operator of the frame in which the coherent spin state at
/// `(theta, varphi)` is the lowest Dicke state (`sin θ = r`). The `J_z` term
/// carries `+sin θ` because `theta` is measured from `-z` here.
pub fn rotated_lowering(ops: &SpinOperatorSet, theta: f64, varphi: f64) -> BandedOperator {
    let a = Complex64::from_polar(0.5 * (theta.cos() + 1.0), varphi);
    let b = Complex64::from_polar(0.5 * (theta.cos() - 1.0), -varphi);
    let lowered = &ops.lowering().scaled(a) + &ops.raising().scaled(b);
    &lowered + &ops.jz().scaled(Complex64::new(theta.sin(), 0.0))
}

/// `2j Var[J⊥_φ] / |<J>|^2` with `J⊥_φ = (e^{iφ}J' + e^{-iφ}J'†)/2` built
/// from [`rotated_lowering`]. `φ = 0` is the anti-squeezed quadrature of a
/// CRSS.
pub fn rotated_frame_squeezing<S: SpinExpectation + ?Sized>(
    state: &S,
    theta: f64,
    varphi: f64,
    phi: f64,
) -> Result<f64> {
    let spin = state.spin();
    let ops = build_operators(spin);
    let jp = rotated_lowering(&ops, theta, varphi);
    let e = Complex64::from_polar(0.5, phi);
    let x = &jp.scaled(e) + &jp.adjoint().scaled(e.conj());
    let mean = state.expect(&x)?.re;
    let var = state.expect(&(&x * &x))?.re - mean * mean;
    let m = [state.expect(ops.jx())?.re, state.expect(ops.jy())?.re, state.expect(ops.jz())?.re];
    let len_sq = dot(m, m);
    if !(len_sq > 0.0) {
        return Err(CrssError::UndefinedDirection);
    }
    Ok(spin.twice_j() as f64 * var / len_sq)
}

/// Optimal CRSS squeezing at the validity boundary.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct OptimalSqueezing {
    /// `sqrt(1 - r_j^2)` with `r_j` from the full threshold equation.
    pub xi_min: f64,
    pub r_at_min: f64,
    /// `(3/2j)^{1/3}`.
    pub asymptotic: f64,
    pub threshold: RThreshold,
}

pub fn optimal_squeezing(spin: Spin) -> Result<OptimalSqueezing> {
    let threshold = r_threshold(spin)?;
    Ok(OptimalSqueezing {
        xi_min: (1.0 - threshold.r_j * threshold.r_j).sqrt(),
        r_at_min: threshold.r_j,
        asymptotic: (1.5 / spin.j()).cbrt(),
        threshold,
    })
}

/// `ξ²` of the exact resonant steady state at `Ω = r Ω_c`.
pub fn steady_state_xi_sq(spin: Spin, r: f64) -> Result<f64> {
    let ss = steady_state_resonant(spin, Complex64::new(0.0, spin.j() * r))?;
    Ok(squeezing_parameter(&ss)?.xi_sq)
}

/// Minimum of the exact steady-state `ξ²(r)` on a grid, refined by golden
/// section within one grid step of the grid argmin.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ExactSqueezingMinimum {
    pub grid_r: f64,
    pub grid_xi_sq: f64,
    pub refined_r: f64,
    pub refined_xi_sq: f64,
}

pub fn exact_squeezing_minimum(spin: Spin, r_grid: &[f64]) -> Result<ExactSqueezingMinimum> {
    if r_grid.len() < 2 {
        return domain("r grid needs at least two points");
    }
    let values = r_grid.iter().map(|&r| steady_state_xi_sq(spin, r)).collect::<Result<Vec<f64>>>()?;
    let k = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty");
    let lo = r_grid[k.saturating_sub(1)];
    let hi = r_grid[(k + 1).min(r_grid.len() - 1)];
    let mut failure = None;
    let (refined_r, refined_xi_sq) = golden_min(
        |r| match steady_state_xi_sq(spin, r) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-6,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (refined_r, refined_xi_sq) =
        if refined_xi_sq <= values[k] { (refined_r, refined_xi_sq) } else { (r_grid[k], values[k]) };
    Ok(ExactSqueezingMinimum { grid_r: r_grid[k], grid_xi_sq: values[k], refined_r, refined_xi_sq })
}

/// `Var[J_φ]` with the squeezing threshold `|<J_z>|/2`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DipoleQuadrature {
    pub phi: f64,
    pub variance: f64,
    pub mean_jz: f64,
    pub threshold: f64,
    pub squeezed: bool,
}

impl DipoleQuadrature {
    fn new(phi: f64, variance: f64, mean_jz: f64) -> Self {
        let threshold = 0.5 * mean_jz.abs();
        Self { phi, variance, mean_jz, threshold, squeezed: variance < threshold }
    }
}

/// `J_φ = (e^{iφ}J + e^{-iφ}J†)/2 = cos φ J_x + sin φ J_y`.
pub fn dipole_quadrature_variance<S: SpinExpectation + ?Sized>(state: &S, phi: f64) -> Result<DipoleQuadrature> {
    let ops = build_operators(state.spin());
    let q = ops.quadrature(phi);
    let mean = state.expect(&q)?.re;
    let var = state.expect(&(&q * &q))?.re - mean * mean;
    Ok(DipoleQuadrature::new(phi, var, state.expect(ops.jz())?.re))
}

/// Quadrature with the smallest variance, from the `xy` covariance block.
pub fn optimal_dipole_quadrature<S: SpinExpectation + ?Sized>(state: &S) -> Result<DipoleQuadrature> {
    let ops = build_operators(state.spin());
    let m = spin_moments(state, &ops)?;
    let c = m.covariance;
    let mid = 0.5 * (c[0][0] + c[1][1]);
    let rad = (0.25 * (c[0][0] - c[1][1]).powi(2) + c[0][1] * c[0][1]).sqrt();
    let major = 0.5 * (2.0 * c[0][1]).atan2(c[0][0] - c[1][1]);
    let phi = (major + 0.5 * PI).rem_euclid(PI);
    Ok(DipoleQuadrature::new(phi, mid - rad, m.mean[2]))
}

/// Collective coupling `G` of the dipole to the detected field.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct FieldCoupling {
    g_factor: f64,
}

impl FieldCoupling {
    pub fn new(g_factor: f64) -> Result<Self> {
        if !(g_factor > 0.0 && g_factor.is_finite()) {
            return domain(format!("G = {g_factor} must be finite and positive"));
        }
        Ok(Self { g_factor })
    }

    pub fn g_factor(&self) -> f64 {
        self.g_factor
    }
}

impl Default for FieldCoupling {
    fn default() -> Self {
        Self { g_factor: 1.0 }
    }
}

/// `Var[E_φ] = 1 + 4G^2 (Var[J_φ] + <J_z>/2)`.
pub fn field_quadrature_variance<S: SpinExpectation + ?Sized>(
    state: &S,
    phi: f64,
    coupling: FieldCoupling,
) -> Result<f64> {
    let d = dipole_quadrature_variance(state, phi)?;
    Ok(field_from_dipole(&d, coupling))
}

pub fn field_from_dipole(d: &DipoleQuadrature, coupling: FieldCoupling) -> f64 {
    let g = coupling.g_factor;
    1.0 + 4.0 * g * g * (d.variance + 0.5 * d.mean_jz)
}

/// `<J^2> - <J>^2`.
pub fn lowering_variance<S: SpinExpectation + ?Sized>(state: &S) -> Result<Complex64> {
    let ops = build_operators(state.spin());
    let mean = state.expect(ops.lowering())?;
    Ok(state.expect(&(ops.lowering() * ops.lowering()))? - mean * mean)
}

/// `N` two-level atoms, each in `c_g|g> + c_e|e>`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    atoms: Vec<(Complex64, Complex64)>,
}

impl ProductState {
    pub fn new(atoms: Vec<(Complex64, Complex64)>) -> Result<Self> {
        if atoms.is_empty() {
            return domain("product state needs at least one atom");
        }
        for (k, (g, e)) in atoms.iter().enumerate() {
            let n = g.norm_sqr() + e.norm_sqr();
            if (n - 1.0).abs() > 1e-12 {
                return domain(format!("atom {k} is not normalized (norm^2 = {n})"));
            }
        }
        Ok(Self { atoms })
    }

    pub fn identical(n: u32, c_g: Complex64, c_e: Complex64) -> Result<Self> {
        Self::new(vec![(c_g, c_e); n as usize])
    }

    pub fn atoms(&self) -> &[(Complex64, Complex64)] {
        &self.atoms
    }

    pub fn is_identical(&self) -> bool {
        let first = self.atoms[0];
        self.atoms.iter().all(|a| (a.0 - first.0).norm() < 1e-14 && (a.1 - first.1).norm() < 1e-14)
    }

    /// Dicke-basis state; only defined for identical atoms.
    pub fn to_dicke(&self) -> Result<SpinState> {
        if !self.is_identical() {
            return Err(CrssError::Unsupported("non-identical atoms have no symmetric Dicke representation".into()));
        }
        let (g, e) = self.atoms[0];
        SpinState::symmetric_product(Spin::from_atoms(self.atoms.len() as u32)?, g, e)
    }
}

/// `-Σ_n <σ_n>^2` with `<σ_n> = c_g* c_e`; the correlation term vanishes
/// for product states.
pub fn dipole_variance_microscopic(product: &ProductState) -> Complex64 {
    -product.atoms.iter().map(|(g, e)| (g.conj() * e).powi(2)).sum::<Complex64>()
}

/// `(collective, microscopic)` values of `Var[J]`.
pub fn dipole_variance_decomposition(product: &ProductState) -> Result<(Complex64, Complex64)> {
    let collective = lowering_variance(&product.to_dicke()?)?;
    Ok((collective, dipole_variance_microscopic(product)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crss::{CrssAnsatz, CrssParams};
    use crate::spin::{coherent_spin_state, BlochAngles};
    use crate::superradiance::RESONANT_PHI;
    use approx::assert_abs_diff_eq;

    fn spin(j: u32) -> Spin {
        Spin::integer(j).unwrap()
    }

    #[test]
    fn css_is_unsqueezed() {
        for &(j, th, ph) in &[(10u32, 0.3, 0.0), (25, 1.2, 2.0), (7, 0.0, 0.0), (40, PI, 1.0)] {
            let css = coherent_spin_state(spin(j), BlochAngles::new(th.min(PI / 2.0), ph).unwrap());
            let rep = squeezing_parameter(&css).unwrap();
            assert_abs_diff_eq!(rep.xi_sq, 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(rep.anti_xi_sq, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn crss_squeezing() {
        let a = CrssAnsatz::new(CrssParams::new(spin(100), 0.6, 0.0).unwrap()).unwrap();
        let rep = squeezing_parameter(a.state()).unwrap();
        assert!((rep.xi_sq / 0.8 - 1.0).abs() < 0.01, "{}", rep.xi_sq);
        assert!((rep.xi_sq * rep.anti_xi_sq - 1.0).abs() < 0.01);
        let len = dot(rep.mean_spin, rep.mean_spin).sqrt();
        assert!((len / 100.0 - 1.0).abs() < 1.0 / 60.0);
    }

    #[test]
    fn steady_state_squeezing_matches_crss() {
        let ss = steady_state_resonant(spin(100), Complex64::new(0.0, 50.0)).unwrap();
        let rep = squeezing_parameter(&ss).unwrap();
        assert!((rep.xi_sq / 0.75f64.sqrt() - 1.0).abs() < 0.02, "{}", rep.xi_sq);
    }

    #[test]
    fn exact_minimum_j25() {
        let grid: Vec<f64> = (1..50).map(|k| 0.02 * k as f64).collect();
        let m = exact_squeezing_minimum(spin(25), &grid).unwrap();
        assert!((m.grid_r - 0.88).abs() < 1e-9, "{m:?}");
        assert!(m.refined_xi_sq <= m.grid_xi_sq);
        assert!((m.refined_r - 0.8797).abs() < 1e-3, "{m:?}");
        assert!((m.refined_xi_sq - 0.50553).abs() < 1e-4, "{m:?}");
    }

    #[test]
    fn zero_mean_is_undefined() {
        let s = spin(2);
        let mut amps = vec![Complex64::new(0.0, 0.0); 5];
        amps[2] = Complex64::new(1.0, 0.0);
        let st = SpinState::new(s, amps).unwrap();
        assert_eq!(squeezing_parameter(&st).unwrap_err(), CrssError::UndefinedDirection);
    }

    #[test]
    fn analytic_curve_examples() {
        assert_abs_diff_eq!(crss_squeezing_analytic(0.6, PI / 2.0).unwrap(), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(crss_squeezing_analytic(0.6, 0.0).unwrap(), 1.25, epsilon = 1e-15);
        assert_abs_diff_eq!(crss_squeezing_analytic(1e-9, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(crss_squeezing_analytic(1.0, 0.0).is_err());
    }

    #[test]
    fn rotated_lowering_annihilates_css_at_pole() {
        let s = spin(12);
        let (th, ph) = (0.6, 1.3);
        let css = coherent_spin_state(s, BlochAngles::new(th, ph).unwrap());
        let ops = build_operators(s);
        let v = css.apply(&rotated_lowering(&ops, th, ph)).unwrap();
        assert!(v.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn three_squeezing_paths_agree() {
        let s = spin(200);
        let r = 0.7;
        let varphi = 0.4;
        let a = CrssAnsatz::new(CrssParams::new(s, r, varphi).unwrap()).unwrap();
        let rep = squeezing_parameter(a.state()).unwrap();
        let theta = r.asin();
        let ops = build_operators(s);
        let jp = rotated_lowering(&ops, theta, varphi);
        let t = s.j() * (s.j() + 1.0) * (2.0 * s.j() + 1.0) / 3.0;
        for k in 0..64 {
            let phi = 2.0 * PI * k as f64 / 64.0;
            // J' already carries e^{i varphi}: the quadrature angle is relative
            let analytic = crss_squeezing_analytic(r, phi).unwrap();
            let rotated = rotated_frame_squeezing(a.state(), theta, varphi, phi).unwrap();
            // lab-frame direction of J⊥_φ from Tr(X J_k) / Tr(J_k^2)
            let e = Complex64::from_polar(0.5, phi);
            let x = &jp.scaled(e) + &jp.adjoint().scaled(e.conj());
            let u = [ops.jx(), ops.jy(), ops.jz()].map(|op| (&x * op).entries().filter(|(r, c, _)| r == c).map(|(_, _, v)| v.re).sum::<f64>() / t);
            let projected = rep.xi_sq_along(u);
            assert!((rotated / analytic - 1.0).abs() < 0.01, "phi={phi}: {rotated} vs {analytic}");
            assert!((projected / rotated - 1.0).abs() < 1e-9, "phi={phi}: {projected} vs {rotated}");
        }
    }

    #[test]
    fn optimal_squeezing_examples() {
        let o = optimal_squeezing(spin(100)).unwrap();
        assert_abs_diff_eq!(o.asymptotic, 0.2466, epsilon = 1e-4);
        assert_abs_diff_eq!(o.xi_min, (1.0 - o.r_at_min * o.r_at_min).sqrt(), epsilon = 1e-15);
        assert!(optimal_squeezing(spin(1)).is_err());
    }

    #[test]
    fn dipole_quadrature_examples() {
        let s = spin(10);
        for phi in [0.0, 0.7, 2.0] {
            let g = dipole_quadrature_variance(&SpinState::ground(s), phi).unwrap();
            assert_abs_diff_eq!(g.variance, 5.0, epsilon = 1e-12);
            assert!(!g.squeezed);
        }
        let css = coherent_spin_state(s, BlochAngles::new(PI / 3.0, 0.0).unwrap());
        let opt = optimal_dipole_quadrature(&css).unwrap();
        assert_abs_diff_eq!(opt.variance, 1.25, epsilon = 1e-10);
        assert_abs_diff_eq!(opt.threshold, 2.5, epsilon = 1e-10);
        assert!(opt.squeezed);
        let direct = dipole_quadrature_variance(&css, opt.phi).unwrap();
        assert_abs_diff_eq!(direct.variance, 1.25, epsilon = 1e-10);

        let p = CrssParams::new(spin(50), 0.5, 0.9).unwrap();
        let a = CrssAnsatz::new(p).unwrap();
        let tol = 2.0 * p.abs_alpha() * a.error().epsilon + 1e-9;
        for phi in [0.0, 1.0, 2.5] {
            let d = dipole_quadrature_variance(a.state(), phi).unwrap();
            assert!((d.variance + 0.5 * d.mean_jz).abs() < tol);
        }
    }

    #[test]
    fn field_quadrature_examples() {
        let s = spin(10);
        let g = FieldCoupling::new(0.1).unwrap();
        assert_eq!(field_quadrature_variance(&SpinState::ground(s), 0.3, g).unwrap(), 1.0);
        let css = coherent_spin_state(s, BlochAngles::new(PI / 3.0, 0.0).unwrap());
        let opt = optimal_dipole_quadrature(&css).unwrap();
        assert_abs_diff_eq!(field_from_dipole(&opt, g), 0.95, epsilon = 1e-10);
        let a = CrssAnsatz::new(CrssParams::new(spin(40), 0.5, 0.0).unwrap()).unwrap();
        for phi in [0.0, 1.1] {
            let v = field_quadrature_variance(a.state(), phi, FieldCoupling::default()).unwrap();
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
        }
        assert!(FieldCoupling::new(0.0).is_err());
    }

    #[test]
    fn variance_decomposition_examples() {
        let th = 0.9f64;
        let n = 20;
        let p = ProductState::identical(n, Complex64::new((th / 2.0).cos(), 0.0), Complex64::new((th / 2.0).sin(), 0.0))
            .unwrap();
        let (col, mic) = dipole_variance_decomposition(&p).unwrap();
        let want = -(n as f64) * th.sin().powi(2) / 4.0;
        assert_abs_diff_eq!(mic.re, want, epsilon = 1e-12);
        assert!((col - mic).norm() < 1e-10);

        let ground = ProductState::identical(6, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(dipole_variance_microscopic(&ground), Complex64::new(0.0, 0.0));

        let mixed = ProductState::new(vec![
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)),
        ])
        .unwrap();
        assert!(matches!(dipole_variance_decomposition(&mixed), Err(CrssError::Unsupported(_))));
        assert_abs_diff_eq!(dipole_variance_microscopic(&mixed).re, 0.48 * 0.48, epsilon = 1e-15);

        let pr = CrssParams::new(spin(40), 0.5, 0.0).unwrap();
        let a = CrssAnsatz::new(pr).unwrap();
        let v = lowering_variance(a.state()).unwrap();
        assert!(v.norm() <= 2.0 * pr.abs_alpha() * a.error().epsilon + 1e-9);
    }

    #[test]
    fn resonant_phi_is_consistent() {
        let p = CrssParams::new(spin(10), 0.3, RESONANT_PHI).unwrap();
        assert!((p.alpha() - Complex64::new(0.0, 3.0)).norm() < 1e-14);
    }
}
