//! Finite SU(2) representation in the Dicke basis `|j,m>`, `m = -j..=j`
//! ascending. Index `i` in every vector or matrix stands for `m = i - j`.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, CrssError, Result};
use crate::numeric::log_sum_exp;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Spin quantum number stored as `2j`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice_j: u32,
}

impl Spin {
    pub fn from_twice(twice_j: u32) -> Result<Self> {
        if twice_j == 0 {
            return domain("spin must satisfy j >= 1/2");
        }
        Ok(Self { twice_j })
    }

    /// Integer spin `j`.
    pub fn integer(j: u32) -> Result<Self> {
        Self::from_twice(2 * j)
    }

    pub fn from_f64(j: f64) -> Result<Self> {
        let t = 2.0 * j;
        if !t.is_finite() || t < 1.0 || (t - t.round()).abs() > 1e-9 || t > u32::MAX as f64 {
            return domain(format!("j = {j} is not a positive half-integer"));
        }
        Self::from_twice(t.round() as u32)
    }

    /// Spin carried by `n` two-level atoms, `j = n/2`.
    pub fn from_atoms(n: u32) -> Result<Self> {
        Self::from_twice(n)
    }

    pub fn twice_j(self) -> u32 {
        self.twice_j
    }

    pub fn j(self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    pub fn n_atoms(self) -> u32 {
        self.twice_j
    }

    pub fn dim(self) -> usize {
        self.twice_j as usize + 1
    }

    pub fn twice_m(self, index: usize) -> i64 {
        2 * index as i64 - self.twice_j as i64
    }

    pub fn m(self, index: usize) -> f64 {
        self.twice_m(index) as f64 / 2.0
    }

    pub fn index_of(self, m: f64) -> Result<usize> {
        let x = m + self.j();
        if (x - x.round()).abs() > 1e-9 || x.round() < 0.0 || x.round() > self.twice_j as f64 {
            return domain(format!("m = {m} is not a valid projection for j = {self}"));
        }
        Ok(x.round() as usize)
    }

    /// `j(j+1) - m(m-1)` for `m` at `index`, exact in integer arithmetic.
    pub(crate) fn ladder_sq(self, index: usize) -> f64 {
        let tj = self.twice_j as i64;
        let tm = self.twice_m(index);
        let four_c2 = tj * (tj + 2) - tm * (tm - 2);
        four_c2 as f64 / 4.0
    }

    /// `c_m` with `J|j,m> = c_m |j,m-1>`, addressed by basis index.
    pub fn ladder(self, index: usize) -> f64 {
        self.ladder_sq(index).sqrt()
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice_j % 2 == 0 {
            write!(f, "{}", self.twice_j / 2)
        } else {
            write!(f, "{}/2", self.twice_j)
        }
    }
}

impl FromStr for Spin {
    type Err = CrssError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num
                .trim()
                .parse()
                .map_err(|_| CrssError::Domain(format!("cannot parse spin '{s}'")))?;
            return match den.trim() {
                "2" => Self::from_twice(num),
                "1" => Self::integer(num),
                _ => domain(format!("spin '{s}' must have denominator 1 or 2")),
            };
        }
        let j: f64 = s
            .parse()
            .map_err(|_| CrssError::Domain(format!("cannot parse spin '{s}'")))?;
        Self::from_f64(j)
    }
}

/// `sqrt(j(j+1) - m(m-1))`, the matrix element of `J|j,m> = c_m |j,m-1>`.
pub fn ladder_coefficient(spin: Spin, m: f64) -> Result<f64> {
    Ok(spin.ladder(spin.index_of(m)?))
}

/// Square complex matrix stored by bands: `lower` sub- and `upper`
/// super-diagonals, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedOperator {
    dim: usize,
    lower: usize,
    upper: usize,
    data: Vec<Complex64>,
}

impl BandedOperator {
    pub fn zeros(dim: usize, lower: usize, upper: usize) -> Self {
        let lower = lower.min(dim.saturating_sub(1));
        let upper = upper.min(dim.saturating_sub(1));
        Self { dim, lower, upper, data: vec![Complex64::new(0.0, 0.0); dim * (lower + upper + 1)] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut op = Self::zeros(values.len(), 0, 0);
        op.data.copy_from_slice(values);
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn in_band(&self, row: usize, col: usize) -> bool {
        col + self.lower >= row && col <= row + self.upper
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if row >= self.dim || col >= self.dim || !self.in_band(row, col) {
            return Complex64::new(0.0, 0.0);
        }
        self.data[row * self.width() + col + self.lower - row]
    }

    /// Panics outside the stored band.
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(row < self.dim && col < self.dim && self.in_band(row, col), "({row},{col}) outside band");
        let w = self.width();
        self.data[row * w + col + self.lower - row] = value;
    }

    /// Column range of the band in `row`.
    pub fn row_cols(&self, row: usize) -> std::ops::Range<usize> {
        row.saturating_sub(self.lower)..(row + self.upper + 1).min(self.dim)
    }

    /// Nonzero pattern as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row_cols(i).map(move |k| (i, k, self.get(i, k))))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim, self.upper, self.lower);
        for (i, k, v) in self.entries() {
            out.set(k, i, v.conj());
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::zeros(self.dim, self.lower + other.lower, self.upper + other.upper);
        for i in 0..self.dim {
            for k in self.row_cols(i) {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for l in other.row_cols(k) {
                    let cur = out.get(i, l);
                    out.set(i, l, cur + a * other.get(k, l));
                }
            }
        }
        out
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::zeros(self.dim, self.lower.max(other.lower), self.upper.max(other.upper));
        for (i, k, v) in self.entries() {
            out.set(i, k, out.get(i, k) + v);
        }
        for (i, k, v) in other.entries() {
            out.set(i, k, out.get(i, k) + sign * v);
        }
        out
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { data: self.data.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row_cols(i).map(|k| self.get(i, k) * x[k]).sum())
            .collect()
    }

    /// `A * M` for a dense `M`.
    pub fn mul_dense(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(m.nrows(), self.dim);
        let mut out = DMatrix::zeros(self.dim, m.ncols());
        for i in 0..self.dim {
            for k in self.row_cols(i) {
                let a = self.get(i, k);
                for c in 0..m.ncols() {
                    out[(i, c)] += a * m[(k, c)];
                }
            }
        }
        out
    }

    /// `M * A` for a dense `M`.
    pub fn dense_mul(m: &DMatrix<Complex64>, a: &Self) -> DMatrix<Complex64> {
        assert_eq!(m.ncols(), a.dim);
        let mut out = DMatrix::zeros(m.nrows(), a.dim);
        for (k, l, v) in a.entries() {
            for r in 0..m.nrows() {
                out[(r, l)] += m[(r, k)] * v;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (i, k, v) in self.entries() {
            out[(i, k)] = v;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn commutator(a: &Self, b: &Self) -> Self {
        &a.matmul(b) - &b.matmul(a)
    }
}

impl Add for &BandedOperator {
    type Output = BandedOperator;
    fn add(self, rhs: Self) -> BandedOperator {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &BandedOperator {
    type Output = BandedOperator;
    fn sub(self, rhs: Self) -> BandedOperator {
        self.combine(rhs, -1.0)
    }
}

impl Mul for &BandedOperator {
    type Output = BandedOperator;
    fn mul(self, rhs: Self) -> BandedOperator {
        self.matmul(rhs)
    }
}

/// `J`, `J†`, `J_x`, `J_y`, `J_z` for a fixed spin. Immutable once built.
#[derive(Clone, Debug)]
pub struct SpinOperatorSet {
    spin: Spin,
    ladder: Vec<f64>,
    lowering: BandedOperator,
    raising: BandedOperator,
    jx: BandedOperator,
    jy: BandedOperator,
    jz: BandedOperator,
}

pub fn build_operators(spin: Spin) -> SpinOperatorSet {
    let n = spin.dim();
    let ladder: Vec<f64> = (0..n).map(|i| spin.ladder(i)).collect();
    let mut lowering = BandedOperator::zeros(n, 0, 1);
    for i in 1..n {
        lowering.set(i - 1, i, Complex64::new(ladder[i], 0.0));
    }
    let raising = lowering.adjoint();
    let jx = (&lowering + &raising).scaled(Complex64::new(0.5, 0.0));
    let jy = (&lowering - &raising).scaled(0.5 * I);
    let jz = BandedOperator::diagonal(&(0..n).map(|i| Complex64::new(spin.m(i), 0.0)).collect::<Vec<_>>());
    SpinOperatorSet { spin, ladder, lowering, raising, jx, jy, jz }
}

impl SpinOperatorSet {
    pub fn spin(&self) -> Spin {
        self.spin
    }

    /// Ladder coefficients `c_i` by basis index; `c_0 = 0`.
    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    pub fn lowering(&self) -> &BandedOperator {
        &self.lowering
    }

    pub fn raising(&self) -> &BandedOperator {
        &self.raising
    }

    pub fn jx(&self) -> &BandedOperator {
        &self.jx
    }

    pub fn jy(&self) -> &BandedOperator {
        &self.jy
    }

    pub fn jz(&self) -> &BandedOperator {
        &self.jz
    }

    /// Dipole quadrature `(e^{iφ} J + e^{-iφ} J†) / 2 = cos φ J_x + sin φ J_y`.
    pub fn quadrature(&self, phi: f64) -> BandedOperator {
        let e = Complex64::from_polar(0.5, phi);
        &self.lowering.scaled(e) + &self.raising.scaled(e.conj())
    }

    /// `n·J` for a real direction `n`.
    pub fn along(&self, n: [f64; 3]) -> BandedOperator {
        let c = |x: f64| Complex64::new(x, 0.0);
        &(&self.jx.scaled(c(n[0])) + &self.jy.scaled(c(n[1]))) + &self.jz.scaled(c(n[2]))
    }
}

/// Anything with well-defined spin moments: pure states, dense density
/// matrices and structured steady states.
pub trait SpinExpectation {
    fn spin(&self) -> Spin;

    /// `<ψ|A|ψ>` or `Tr(ρA)`.
    fn expect(&self, op: &BandedOperator) -> Result<Complex64>;
}

/// Normalized pure state `sum_m a_m |j,m>`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinState {
    spin: Spin,
    amps: Vec<Complex64>,
}

impl SpinState {
    /// Takes amplitudes that are already normalized to 1e-12.
    pub fn new(spin: Spin, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != spin.dim() {
            return Err(CrssError::DimensionMismatch { expected: spin.dim(), got: amps.len() });
        }
        let n2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (n2 - 1.0).abs() > 1e-12 {
            return domain(format!("state is not normalized (norm^2 = {n2})"));
        }
        Ok(Self { spin, amps })
    }

    pub fn normalized(spin: Spin, mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != spin.dim() {
            return Err(CrssError::DimensionMismatch { expected: spin.dim(), got: amps.len() });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return domain("cannot normalize a zero or non-finite vector");
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { spin, amps })
    }

    /// Builds from log-magnitudes and phases; entries with `-inf` are zero.
    pub fn from_log_polar(spin: Spin, log_mag: &[f64], phase: &[f64]) -> Result<Self> {
        if log_mag.len() != spin.dim() || phase.len() != spin.dim() {
            return Err(CrssError::DimensionMismatch { expected: spin.dim(), got: log_mag.len() });
        }
        let twice: Vec<f64> = log_mag.iter().map(|x| 2.0 * x).collect();
        let log_norm = 0.5 * log_sum_exp(&twice);
        if !log_norm.is_finite() {
            return domain("all amplitudes vanish");
        }
        let amps = log_mag
            .iter()
            .zip(phase)
            .map(|(&l, &p)| Complex64::from_polar((l - log_norm).exp(), p))
            .collect();
        Self::normalized(spin, amps)
    }

    /// `|j,m>` at basis index.
    pub fn basis(spin: Spin, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); spin.dim()];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { spin, amps }
    }

    /// `|j,-j>`, all atoms in the ground state.
    pub fn ground(spin: Spin) -> Self {
        Self::basis(spin, 0)
    }

    /// `N = 2j` identical two-level atoms each in `c_g|g> + c_e|e>`.
    pub fn symmetric_product(spin: Spin, c_g: Complex64, c_e: Complex64) -> Result<Self> {
        let norm = (c_g.norm_sqr() + c_e.norm_sqr()).sqrt();
        if !(norm > 0.0) {
            return domain("single-atom state vanishes");
        }
        let (c_g, c_e) = (c_g / norm, c_e / norm);
        let n = spin.twice_j() as usize;
        let ln_g = c_g.norm().ln();
        let ln_e = c_e.norm().ln();
        let pow = |ln: f64, k: usize| if k == 0 { 0.0 } else { k as f64 * ln };
        let mut log_mag = Vec::with_capacity(n + 1);
        let mut ln_binom = 0.0;
        for k in 0..=n {
            if k > 0 {
                ln_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
            }
            log_mag.push(0.5 * ln_binom + pow(ln_g, n - k) + pow(ln_e, k));
        }
        let phase: Vec<f64> = (0..=n).map(|k| (n - k) as f64 * c_g.arg() + k as f64 * c_e.arg()).collect();
        Self::from_log_polar(spin, &log_mag, &phase)
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amplitude(&self, m: f64) -> Result<Complex64> {
        Ok(self.amps[self.spin.index_of(m)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.amps.len() != other.amps.len() {
            return Err(CrssError::DimensionMismatch { expected: self.amps.len(), got: other.amps.len() });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `A|ψ>` as a raw vector.
    pub fn apply(&self, op: &BandedOperator) -> Result<Vec<Complex64>> {
        if op.dim() != self.amps.len() {
            return Err(CrssError::DimensionMismatch { expected: self.amps.len(), got: op.dim() });
        }
        Ok(op.apply(&self.amps))
    }
}

impl SpinExpectation for SpinState {
    fn spin(&self) -> Spin {
        self.spin
    }

    fn expect(&self, op: &BandedOperator) -> Result<Complex64> {
        let v = self.apply(op)?;
        Ok(self.amps.iter().zip(&v).map(|(a, b)| a.conj() * b).sum())
    }
}

pub fn expectation<S: SpinExpectation + ?Sized>(state: &S, op: &BandedOperator) -> Result<Complex64> {
    state.expect(op)
}

/// Polar angle measured from the south pole and azimuth.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BlochAngles {
    theta: f64,
    phi: f64,
}

impl BlochAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&theta) {
            return domain(format!("theta = {theta} outside [0, pi/2]"));
        }
        if !phi.is_finite() {
            return domain("phi must be finite");
        }
        Ok(Self { theta: theta.min(std::f64::consts::FRAC_PI_2), phi: phi.rem_euclid(std::f64::consts::TAU) })
    }

    /// Angles with `sin θ = r`.
    pub fn from_r(r: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return domain(format!("r = {r} outside [0, 1]"));
        }
        Self::new(r.asin(), phi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn r(&self) -> f64 {
        self.theta.sin()
    }
}

/// Coherent spin state with mean spin at polar angle `θ` from the south
/// pole: `a_m = sqrt(C(2j, j+m)) cos^{j-m}(θ/2) sin^{j+m}(θ/2) e^{-i(j+m)φ}`.
pub fn coherent_spin_state(spin: Spin, angles: BlochAngles) -> SpinState {
    let half = 0.5 * angles.theta();
    let c_g = Complex64::new(half.cos(), 0.0);
    let c_e = Complex64::from_polar(half.sin(), -angles.phi());
    SpinState::symmetric_product(spin, c_g, c_e).expect("cos and sin cannot both vanish")
}
