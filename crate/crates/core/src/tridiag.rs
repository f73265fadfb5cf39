//! Real symmetric tridiagonal and upper-bidiagonal kernels.
//!
//! Hermitian tridiagonal matrices met in this crate (`K†K`, `KK†` with
//! `K = J - α`) are reduced to real symmetric form by a diagonal phase
//! transformation before they get here.

use crate::error::{CrssError, Result};

/// Symmetric tridiagonal matrix; `off[i]` couples rows `i` and `i + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

/// Eigenvalues (ascending) and the requested rows of the eigenvector matrix.
#[derive(Clone, Debug)]
pub struct TridiagonalSpectrum {
    pub values: Vec<f64>,
    /// `rows[r][k]` is component `tracked[r]` of eigenvector `k`.
    pub rows: Vec<Vec<f64>>,
    pub tracked: Vec<usize>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "empty matrix");
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal length");
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn sturm_count(&self, x: f64) -> usize {
        let scale = self.diag.iter().chain(&self.off).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let pivmin = f64::MIN_POSITIVE * scale * scale;
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue_bisect(&self, k: usize) -> f64 {
        assert!(k < self.dim());
        let (mut lo, mut hi) = self.gershgorin();
        let span = (hi - lo).abs().max(f64::MIN_POSITIVE);
        lo -= 1e-12 * span;
        hi += 1e-12 * span;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for an eigenvalue estimate by inverse iteration with a
    /// pivoted tridiagonal LU.
    pub fn inverse_iteration(&self, lambda: f64, max_iter: usize) -> Result<Vec<f64>> {
        let n = self.dim();
        if n == 1 {
            return Ok(vec![1.0]);
        }
        let (glo, ghi) = self.gershgorin();
        let nudge = f64::EPSILON * (ghi - glo).abs().max(1.0);
        let lu = TridiagLu::factor(&self.diag, &self.off, lambda, nudge);
        // alternate signs break symmetry with the start vector
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64 / 13.0).collect();
        normalize(&mut x);
        let mut residual = f64::INFINITY;
        for it in 0..max_iter {
            let mut y = lu.solve(&x);
            normalize(&mut y);
            if y.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
                y.iter_mut().for_each(|v| *v = -*v);
            }
            residual = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = y;
            if residual < 1e-14 && it > 0 {
                return Ok(x);
            }
        }
        if residual < 1e-10 {
            return Ok(x);
        }
        Err(CrssError::NoConvergence { iterations: max_iter, residual })
    }

    /// `k`-th eigenpair via bisection plus inverse iteration.
    pub fn eigenpair(&self, k: usize) -> Result<(f64, Vec<f64>)> {
        let lambda = self.eigenvalue_bisect(k);
        let v = self.inverse_iteration(lambda, 50)?;
        Ok((lambda, v))
    }

    /// All eigenvalues by implicit QL, tracking the listed rows of the
    /// eigenvector matrix. Cost is O(n^2) plus O(n) per tracked row per
    /// rotation sweep.
    pub fn spectrum_with_rows(&self, tracked: &[usize]) -> Result<TridiagonalSpectrum> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e: Vec<f64> = self.off.iter().copied().chain(std::iter::once(0.0)).collect();
        let mut z: Vec<Vec<f64>> = tracked
            .iter()
            .map(|&r| {
                let mut row = vec![0.0; n];
                row[r] = 1.0;
                row
            })
            .collect();

        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                if iter > 60 {
                    return Err(CrssError::NoConvergence { iterations: iter, residual: e[l].abs() });
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut i = m;
                let mut early = false;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        early = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for row in z.iter_mut() {
                        let f = row[i + 1];
                        row[i + 1] = s * row[i] + c * f;
                        row[i] = c * row[i] - s * f;
                    }
                }
                if early {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        Ok(TridiagonalSpectrum {
            values: order.iter().map(|&k| d[k]).collect(),
            rows: z.iter().map(|row| order.iter().map(|&k| row[k]).collect()).collect(),
            tracked: tracked.to_vec(),
        })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }
}

/// LU of `T - λI` with partial pivoting (fill-in on the second
/// superdiagonal).
struct TridiagLu {
    // row-reduced upper factor: u0 diag, u1 first super, u2 second super
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(diag: &[f64], off: &[f64], lambda: f64, nudge: f64) -> Self {
        let n = diag.len();
        let mut u0: Vec<f64> = diag.iter().map(|d| d - lambda).collect();
        let mut u1: Vec<f64> = (0..n).map(|i| if i + 1 < n { off[i] } else { 0.0 }).collect();
        let mut u2 = vec![0.0; n];
        let mut lower: Vec<f64> = off.to_vec();
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if lower[i].abs() > u0[i].abs() {
                // swap rows i and i+1
                swapped[i] = true;
                let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
                u0[i] = lower[i];
                u1[i] = u0[i + 1];
                u2[i] = u1[i + 1];
                let m = a0 / u0[i];
                mult[i] = m;
                u0[i + 1] = a1 - m * u1[i];
                u1[i + 1] = a2 - m * u2[i];
            } else {
                if u0[i] == 0.0 {
                    u0[i] = nudge;
                }
                let m = lower[i] / u0[i];
                mult[i] = m;
                u0[i + 1] -= m * u1[i];
                u1[i + 1] -= m * u2[i];
            }
            lower[i] = 0.0;
        }
        if u0[n - 1] == 0.0 {
            u0[n - 1] = nudge;
        }
        Self { u0, u1, u2, mult, swapped }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.mult[i] * y[i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut v = y[i];
            if i + 1 < n {
                v -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                v -= self.u2[i] * x[i + 2];
            }
            x[i] = v / self.u0[i];
        }
        x
    }
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 && n.is_finite() {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

const RESCALE: f64 = 1e150;

/// Upper bidiagonal `B` with `B[i][i] = diag[i]`, `B[i][i+1] = sup[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperBidiagonal {
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl UpperBidiagonal {
    pub fn new(diag: Vec<f64>, sup: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(sup.len() + 1, diag.len());
        Self { diag, sup }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of singular values strictly below `x > 0`, from a Sturm count
    /// on the zero-diagonal Golub-Kahan form. The recurrence only touches
    /// squared entries, so small singular values keep their relative accuracy.
    pub fn singular_count_below(&self, x: f64) -> usize {
        let n = self.dim();
        let pivmin = f64::MIN_POSITIVE;
        let mut count: usize = 0;
        let mut q = -x;
        if q < 0.0 {
            count += 1;
        }
        for k in 1..2 * n {
            let t = if k % 2 == 1 { self.diag[k / 2] } else { self.sup[k / 2 - 1] };
            q = -x - t * t / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count.saturating_sub(n)
    }

    /// Upper bound on the largest singular value.
    pub fn norm_bound(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| self.diag[i].abs() + if i + 1 < n { self.sup[i].abs() } else { 0.0 })
            .fold(0.0, f64::max)
            .max(self.sup.iter().zip(&self.diag[1..]).map(|(s, d)| s.abs() + d.abs()).fold(0.0, f64::max))
    }

    /// `k`-th smallest singular value by geometric bisection. Values below
    /// `1e-300` are reported as `0`.
    pub fn singular_value(&self, k: usize) -> f64 {
        assert!(k < self.dim());
        let mut hi = self.norm_bound() * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        let mut lo = 1e-300;
        if self.singular_count_below(lo) > k {
            return 0.0;
        }
        while hi / lo > 1.0 + 4.0 * f64::EPSILON {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if self.singular_count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo * hi).sqrt()
    }

    pub fn smallest_singular_value(&self) -> f64 {
        self.singular_value(0)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.diag[i] * x[i] + if i + 1 < n { self.sup[i] * x[i + 1] } else { 0.0 }).collect()
    }

    /// Direction of `B^{-1} y`; overflow is avoided by rescaling, so only the
    /// direction is meaningful.
    pub fn solve_direction(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut rhs = y.to_vec();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut v = rhs[i];
            if i + 1 < n {
                v -= self.sup[i] * x[i + 1];
            }
            x[i] = v / self.diag[i];
            if x[i].abs() > RESCALE {
                x[i..].iter_mut().for_each(|v| *v /= RESCALE);
                rhs[..i].iter_mut().for_each(|v| *v /= RESCALE);
            }
        }
        normalize(&mut x);
        x
    }

    /// Direction of `B^{-T} b`.
    pub fn solve_transpose_direction(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut rhs = b.to_vec();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = rhs[i];
            if i > 0 {
                v -= self.sup[i - 1] * y[i - 1];
            }
            y[i] = v / self.diag[i];
            if y[i].abs() > RESCALE {
                y[..=i].iter_mut().for_each(|v| *v /= RESCALE);
                rhs[i + 1..].iter_mut().for_each(|v| *v /= RESCALE);
            }
        }
        normalize(&mut y);
        y
    }

    /// Right singular vector of the smallest singular value by zero-shift
    /// inverse iteration on `B^T B`. Requires a nonsingular diagonal.
    pub fn smallest_right_singular_vector(&self, max_iter: usize) -> Result<Vec<f64>> {
        let n = self.dim();
        if self.diag.iter().any(|d| *d == 0.0) {
            return Err(CrssError::Domain("singular bidiagonal matrix".into()));
        }
        let mut x: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        normalize(&mut x);
        let mut change = f64::INFINITY;
        for it in 0..max_iter {
            let y = self.solve_transpose_direction(&x);
            let mut z = self.solve_direction(&y);
            if z.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
                z.iter_mut().for_each(|v| *v = -*v);
            }
            change = z.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = z;
            if change < 1e-15 && it > 0 {
                return Ok(x);
            }
        }
        if change < 1e-11 {
            return Ok(x);
        }
        Err(CrssError::NoConvergence { iterations: max_iter, residual: change })
    }

    /// `B B^T`, whose eigenvectors are the left singular vectors.
    pub fn gram_left(&self) -> SymTridiagonal {
        let n = self.dim();
        let diag = (0..n)
            .map(|i| self.diag[i] * self.diag[i] + if i + 1 < n { self.sup[i] * self.sup[i] } else { 0.0 })
            .collect();
        let off = (0..n - 1).map(|i| self.sup[i] * self.diag[i + 1]).collect();
        SymTridiagonal::new(diag, off)
    }

    /// `B^T B`, whose eigenvectors are the right singular vectors.
    pub fn gram_right(&self) -> SymTridiagonal {
        let n = self.dim();
        let diag = (0..n)
            .map(|i| self.diag[i] * self.diag[i] + if i > 0 { self.sup[i - 1] * self.sup[i - 1] } else { 0.0 })
            .collect();
        let off = (0..n - 1).map(|i| self.diag[i] * self.sup[i]).collect();
        SymTridiagonal::new(diag, off)
    }
}
