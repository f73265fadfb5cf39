//! General complex band matrices with an LU factorization using partial
//! pivoting (row interchanges, fill limited to `kl` extra superdiagonals).

use num_complex::Complex64;

use crate::error::{CrssError, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `n × n` matrix with `kl` sub- and `ku` superdiagonals. Each row keeps a
/// window of columns `i - kl ..= i + ku + kl` so that pivoting fill fits.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![ZERO; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.kl >= row && col <= row + self.ku + self.kl);
        row * self.width + (col + self.kl - row)
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if col + self.kl < row || col > row + self.ku {
            return ZERO;
        }
        self.data[self.slot(row, col)]
    }

    /// Panics outside the declared band.
    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(col + self.kl >= row && col <= row + self.ku, "({row}, {col}) outside band");
        let s = self.slot(row, col);
        self.data[s] += value;
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.data[self.slot(i, c)] * x[c]).sum()
            })
            .collect()
    }

    /// `A - shift·I`.
    pub fn shifted(&self, shift: Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            let s = out.slot(i, i);
            out.data[s] -= shift;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Gaussian elimination with partial pivoting. Exactly zero pivots are
    /// replaced by `tiny · max|A|` so that nearly singular shifted systems
    /// still factor.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let tiny = f64::EPSILON * self.max_abs().max(f64::MIN_POSITIVE);
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].norm();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots.push(p);
            if p != k {
                for c in k..=last_col {
                    let (a, b) = (self.slot(k, c), self.slot(p, c));
                    self.data.swap(a, b);
                }
            }
            let kk = self.slot(k, k);
            if self.data[kk].norm() == 0.0 {
                self.data[kk] = Complex64::new(tiny, 0.0);
            }
            let pivot = self.data[kk];
            if !pivot.is_finite() {
                return Err(CrssError::NoConvergence { iterations: k, residual: f64::NAN });
            }
            for i in k + 1..=last_row {
                let ik = self.slot(i, k);
                let m = self.data[ik] / pivot;
                self.data[ik] = m;
                if m == ZERO {
                    continue;
                }
                for c in k + 1..=last_col {
                    let kc = self.slot(k, c);
                    let ic = self.slot(i, c);
                    let v = self.data[kc];
                    self.data[ic] -= m * v;
                }
            }
        }
        Ok(BandLu { m: self, pivots })
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    m: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let a = &self.m;
        let n = a.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            if bk == ZERO {
                continue;
            }
            for i in k + 1..=(k + a.kl).min(n - 1) {
                b[i] -= a.data[a.slot(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + a.kl + a.ku).min(n - 1) {
                s -= a.data[a.slot(k, c)] * b[c];
            }
            b[k] = s / a.data[a.slot(k, k)];
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn sample(n: usize, kl: usize, ku: usize, weak_diag: bool) -> BandMatrix {
        let mut a = BandMatrix::zeros(n, kl, ku);
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        for i in 0..n {
            for c in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let mut v = Complex64::new(next(), next());
                if c == i && weak_diag {
                    v *= 1e-3;
                }
                a.add(i, c, v);
            }
        }
        a
    }

    #[test]
    fn solve_matches_dense() {
        for &(n, kl, ku) in &[(1, 0, 0), (7, 2, 3), (30, 5, 6), (40, 1, 2)] {
            let a = sample(n, kl, ku, true);
            let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
            let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
            let x = a.clone().factor().unwrap().solve(&b);
            let r = &dense * DVector::from_vec(x) - DVector::from_vec(b);
            let r = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(r < 1e-9, "n={n}: {r}");
        }
    }

    #[test]
    fn apply_matches_dense() {
        let a = sample(12, 3, 4, false);
        let dense = DMatrix::from_fn(12, 12, |i, j| a.get(i, j));
        let x: Vec<Complex64> = (0..12).map(|i| Complex64::new(1.0, i as f64)).collect();
        let want = &dense * DVector::from_vec(x.clone());
        let got = a.apply(&x);
        for i in 0..12 {
            assert!((want[i] - got[i]).norm() < 1e-12);
        }
    }
}
