//! Dense complex matrices and a Lanczos estimate of the largest singular value.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per block in adjoint products; fixed so sums do not depend on the
/// thread count.
const BLOCK: usize = 128;

/// A linear map `ℂ^cols → ℂ^rows` with its adjoint.
pub trait LinearOperator: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64>;
    fn apply_adjoint(&self, u: &[Complex64]) -> Vec<Complex64>;
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64 + Sync) -> Self {
        let data: Vec<Complex64> = (0..rows)
            .into_par_iter()
            .flat_map_iter(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Precondition("matrix data has the wrong length".into()));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale_rows_cols(&self, rs: &[f64], cs: &[f64]) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * (rs[i] * cs[j]))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl LinearOperator for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .into_par_iter()
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    fn apply_adjoint(&self, u: &[Complex64]) -> Vec<Complex64> {
        let blocks: Vec<Vec<Complex64>> = (0..self.rows.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| {
                let mut acc = vec![Complex64::new(0.0, 0.0); self.cols];
                for i in (b * BLOCK)..((b + 1) * BLOCK).min(self.rows) {
                    let ui = u[i];
                    for (a, o) in self.row(i).iter().zip(acc.iter_mut()) {
                        *o += a.conj() * ui;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for b in blocks {
            for (o, x) in out.iter_mut().zip(b) {
                *o += x;
            }
        }
        out
    }
}

/// Entries generated on demand, for operators too large to store.
pub struct KernelOperator<F: Fn(usize, usize) -> Complex64 + Sync> {
    pub rows: usize,
    pub cols: usize,
    pub entry: F,
}

impl<F: Fn(usize, usize) -> Complex64 + Sync> LinearOperator for KernelOperator<F> {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .into_par_iter()
            .map(|i| (0..self.cols).map(|j| (self.entry)(i, j) * v[j]).sum())
            .collect()
    }

    fn apply_adjoint(&self, u: &[Complex64]) -> Vec<Complex64> {
        (0..self.cols)
            .into_par_iter()
            .map(|j| (0..self.rows).map(|i| (self.entry)(i, j).conj() * u[i]).sum())
            .collect()
    }
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn orthogonalize(w: &mut [Complex64], basis: &[Vec<Complex64>]) {
    // twice is enough
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            for (x, y) in w.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
    }
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e`, by Sturm-sequence bisection.
pub fn tridiagonal_max_eigenvalue(d: &[f64], e: &[f64]) -> f64 {
    let n = d.len();
    if n == 0 {
        return 0.0;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    // number of eigenvalues strictly below x
    let below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let qq = if q == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1e-300) } else { q };
            q = d[i] - x - e[i - 1] * e[i - 1] / qq;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) >= n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub sigma: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Top singular value of the `k × (k+1)` upper bidiagonal matrix with
/// diagonal `alphas` and superdiagonal `betas` (`betas.len() == alphas.len()`).
fn bidiagonal_top(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    // B Bᵀ is tridiagonal: (α_i² + β_i², α_{i+1} β_i)
    let d: Vec<f64> = (0..k).map(|i| alphas[i] * alphas[i] + betas[i] * betas[i]).collect();
    let e: Vec<f64> = (0..k.saturating_sub(1)).map(|i| alphas[i + 1] * betas[i]).collect();
    tridiagonal_max_eigenvalue(&d, &e).max(0.0).sqrt()
}

/// Golub–Kahan–Lanczos bidiagonalization with full reorthogonalization.
/// Stops when the top Ritz value changes by less than `tol` (relative) over
/// two consecutive steps, or the Krylov space is exhausted.
pub fn largest_singular_value(op: &dyn LinearOperator, tol: f64, max_iter: usize) -> Result<NormEstimate> {
    let (m, n) = (op.rows(), op.cols());
    if m == 0 || n == 0 {
        return Ok(NormEstimate {
            sigma: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let full = m.min(n);
    let kmax = max_iter.min(full).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut vs: Vec<Vec<Complex64>> = Vec::new();
    let mut us: Vec<Vec<Complex64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev = 0.0_f64;
    let mut stable = 0;
    let mut u = op.apply(&v);
    let done = |sigma: f64, k: usize| NormEstimate {
        sigma,
        iterations: k + 1,
        converged: true,
    };
    for k in 0..kmax {
        orthogonalize(&mut u, &us);
        let alpha = norm2(&u);
        vs.push(v.clone());
        if alpha <= 1e-300 {
            // A v_k lies in the span already found
            alphas.push(0.0);
            betas.push(0.0);
            return Ok(done(bidiagonal_top(&alphas, &betas), k));
        }
        alphas.push(alpha);
        u.iter_mut().for_each(|x| *x /= alpha);
        us.push(u.clone());
        let mut w = op.apply_adjoint(&u);
        for (x, y) in w.iter_mut().zip(&v) {
            *x -= alpha * y;
        }
        orthogonalize(&mut w, &vs);
        let beta = if k + 1 == n { 0.0 } else { norm2(&w) };
        betas.push(beta);
        let sigma = bidiagonal_top(&alphas, &betas);
        if beta <= 1e-14 * sigma.max(1e-300) || k + 1 == full {
            return Ok(done(sigma, k));
        }
        if (sigma - prev).abs() <= tol * sigma {
            stable += 1;
            if stable >= 2 {
                return Ok(done(sigma, k));
            }
        } else {
            stable = 0;
        }
        if k + 1 == kmax {
            return Err(Error::Convergence {
                iterations: kmax,
                residual: (sigma - prev).abs(),
            });
        }
        prev = sigma;
        v = w.into_iter().map(|x| x / beta).collect();
        u = op.apply(&v);
        for (x, y) in u.iter_mut().zip(us.last().expect("nonempty")) {
            *x -= beta * y;
        }
    }
    unreachable!("loop returns")
}
