//! Transfer matrices over a partition, the dimension `δ`, and the discrete
//! Patterson–Sullivan measure carried by the partition-interval centres.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobius::{Interval, MobiusTransform};
use crate::schottky::{Band, Partition, SchottkyData, DEFAULT_BUDGET};
use crate::symbolic::{Letter, Word};

/// Iteration cap for the Perron solver.
pub const EIGEN_MAX_ITER: usize = 200_000;
/// Tolerance used for inner eigenproblems when solving for `δ`.
pub const EIGEN_TOL: f64 = 1e-14;

/// `log |γ'(x)|_𝔹`.
pub fn log_ball_derivative(g: &MobiusTransform, x: f64) -> Result<f64> {
    let den = g.c * x + g.d;
    if den.abs() < crate::mobius::POLE_TOL {
        return Err(Error::Pole(den.abs()));
    }
    let y = (g.a * x + g.b) / den;
    Ok((1.0 + x * x).ln() - (1.0 + y * y).ln() - 2.0 * den.abs().ln())
}

/// Sparse row storage of the discretized transfer operator at exponent `s`.
///
/// Row `b`, column `a` carries `|γ'_{a'}(x_b)|_𝔹^s`, present iff the last
/// letter of `a` is the first letter of `b`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    n: usize,
    s: f64,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    log_w: Vec<f64>,
    vals: Vec<f64>,
    // transpose, for left products
    t_row_ptr: Vec<usize>,
    t_cols: Vec<usize>,
    t_src: Vec<usize>,
}

impl TransferMatrix {
    pub fn build(data: &SchottkyData, z: &Partition, s: f64) -> Result<Self> {
        let q = data.alphabet().size();
        let by_last = z.by_last_letter(q);
        let by_first = z.by_first_letter(q);
        let n = z.len();
        let rows: Vec<Result<Vec<(usize, f64)>>> = z
            .cells
            .par_iter()
            .map(|target| {
                let x = target.center();
                by_last[target.first().slot()]
                    .iter()
                    .map(|&j| Ok((j, log_ball_derivative(&z.cells[j].prefix_map, x)?)))
                    .collect()
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut log_w = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, lw) in row? {
                cols.push(j);
                log_w.push(lw);
            }
            row_ptr.push(cols.len());
        }
        // Transpose: row j lists (i, k) with cols[k] == j, i ascending.
        let mut t_row_ptr = Vec::with_capacity(n + 1);
        let mut t_cols = Vec::with_capacity(cols.len());
        let mut t_src = Vec::with_capacity(cols.len());
        t_row_ptr.push(0);
        let mut cursor: Vec<usize> = row_ptr[..n].to_vec();
        for j in 0..n {
            for &i in &by_first[z.cells[j].last().slot()] {
                let k = cursor[i];
                debug_assert_eq!(cols[k], j);
                cursor[i] += 1;
                t_cols.push(i);
                t_src.push(k);
            }
            t_row_ptr.push(t_cols.len());
        }
        let mut m = TransferMatrix {
            n,
            s,
            row_ptr,
            cols,
            log_w,
            vals: Vec::new(),
            t_row_ptr,
            t_cols,
            t_src,
        };
        m.set_exponent(s);
        Ok(m)
    }

    /// Matrix with the given nonnegative entries at `s = 1`; zeros are
    /// structural.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition("matrix must be square".into()));
        }
        if rows.iter().flatten().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Precondition("entries must be finite and nonnegative".into()));
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut log_w = Vec::new();
        for r in rows {
            for (j, &v) in r.iter().enumerate() {
                if v > 0.0 {
                    cols.push(j);
                    log_w.push(v.ln());
                }
            }
            row_ptr.push(cols.len());
        }
        let mut t_row_ptr = vec![0];
        let mut t_cols = Vec::new();
        let mut t_src = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if let Some(k) = (row_ptr[i]..row_ptr[i + 1]).find(|&k| cols[k] == j) {
                    t_cols.push(i);
                    t_src.push(k);
                }
            }
            t_row_ptr.push(t_cols.len());
        }
        let mut m = TransferMatrix {
            n,
            s: 1.0,
            row_ptr,
            cols,
            log_w,
            vals: Vec::new(),
            t_row_ptr,
            t_cols,
            t_src,
        };
        m.set_exponent(1.0);
        Ok(m)
    }

    /// Re-weights the stored sparsity pattern for exponent `s`.
    pub fn set_exponent(&mut self, s: f64) {
        self.s = s;
        self.vals = self.log_w.par_iter().map(|&l| (s * l).exp()).collect();
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    /// `M v`.
    pub fn mul_right(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, w)| w * v[j]).sum())
            .collect()
    }

    /// `uᵀ M`.
    pub fn mul_left(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|j| {
                let r = self.t_row_ptr[j]..self.t_row_ptr[j + 1];
                self.t_cols[r.clone()]
                    .iter()
                    .zip(&self.t_src[r])
                    .map(|(&i, &k)| u[i] * self.vals[k])
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Left Perron vector, unit sum.
    pub left: Vec<f64>,
    /// Right Perron vector, unit sum.
    pub right: Vec<f64>,
    pub iterations: usize,
    /// `‖uᵀM − λuᵀ‖₁` for the left vector.
    pub residual: f64,
}

/// Perron eigenvalue and unit-sum eigenvectors by shifted power iteration.
pub fn leading_eigen(m: &TransferMatrix, tol: f64) -> Result<Eigenpair> {
    leading_eigen_from(m, tol, None, None)
}

fn unit_sum(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    s
}

fn power_side(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    n: usize,
    shift: f64,
    tol: f64,
    start: Option<&[f64]>,
) -> Result<(f64, Vec<f64>, usize, f64)> {
    let mut u = match start {
        Some(s) if s.len() == n && s.iter().all(|&x| x > 0.0) => s.to_vec(),
        _ => vec![1.0 / n as f64; n],
    };
    unit_sum(&mut u);
    let tol = tol.max(8.0 * n as f64 * f64::EPSILON);
    let mut residual = f64::INFINITY;
    for it in 1..=EIGEN_MAX_ITER {
        let mu = apply(&u);
        let lambda: f64 = mu.iter().sum();
        residual = mu.iter().zip(&u).map(|(a, b)| (a - lambda * b).abs()).sum::<f64>();
        if residual <= tol * lambda.max(f64::MIN_POSITIVE) {
            let mut v = mu;
            unit_sum(&mut v);
            return Ok((lambda, v, it, residual));
        }
        u = mu.iter().zip(&u).map(|(a, b)| a + shift * b).collect();
        unit_sum(&mut u);
    }
    Err(Error::Convergence {
        iterations: EIGEN_MAX_ITER,
        residual,
    })
}

/// As [`leading_eigen`] with optional warm starts; `tol` is relative to `λ`.
pub fn leading_eigen_from(
    m: &TransferMatrix,
    tol: f64,
    left0: Option<&[f64]>,
    right0: Option<&[f64]>,
) -> Result<Eigenpair> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::Precondition("empty transfer matrix".into()));
    }
    let sums = m.row_sums();
    let scale = sums.iter().sum::<f64>() / n as f64;
    let shift = 0.1 * scale;
    let (lambda, left, it_l, residual) = power_side(|u| m.mul_left(u), n, shift, tol, left0)?;
    let (_, right, it_r, _) = power_side(|v| m.mul_right(v), n, shift, tol, right0)?;
    Ok(Eigenpair {
        lambda,
        left,
        right,
        iterations: it_l.max(it_r),
        residual,
    })
}

/// Leading eigenvalue `λ(s)` for the matrix of `z`.
pub fn spectral_radius(data: &SchottkyData, z: &Partition, s: f64) -> Result<f64> {
    let m = TransferMatrix::build(data, z, s)?;
    Ok(leading_eigen(&m, EIGEN_TOL)?.lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BowenSolution {
    pub delta: f64,
    pub lambda_minus_one: f64,
    pub eigen: Eigenpair,
    /// `(s, λ(s))` evaluated along the way.
    pub samples: Vec<(f64, f64)>,
}

/// Solves `λ(s) = 1` on `(0, 1)` for the transfer matrix of `z`.
///
/// `log λ` is convex and decreasing in `s`, so a regula falsi with the
/// Illinois modification converges quickly; a bisection step is taken
/// whenever the bracket fails to shrink by half.
pub fn solve_bowen(data: &SchottkyData, z: &Partition, tol: f64) -> Result<BowenSolution> {
    let mut m = TransferMatrix::build(data, z, 0.0)?;
    let mut samples = Vec::new();
    let mut warm: Option<Eigenpair> = None;
    let mut eval = |s: f64, m: &mut TransferMatrix, warm: &mut Option<Eigenpair>| -> Result<f64> {
        m.set_exponent(s);
        let e = leading_eigen_from(
            m,
            EIGEN_TOL,
            warm.as_ref().map(|w| w.left.as_slice()),
            warm.as_ref().map(|w| w.right.as_slice()),
        )?;
        let l = e.lambda;
        samples.push((s, l));
        *warm = Some(e);
        Ok(l)
    };
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let mut fa = eval(a, &mut m, &mut warm)?.ln();
    let mut fb = eval(b, &mut m, &mut warm)?.ln();
    if !(fa > 0.0 && fb < 0.0) {
        return Err(Error::Precondition(format!(
            "λ(0) = {:.6}, λ(1) = {:.6} do not bracket 1",
            fa.exp(),
            fb.exp()
        )));
    }
    let mut side = 0i32;
    let mut best = (f64::INFINITY, 0.5);
    for _ in 0..200 {
        let width = b - a;
        let mut s = (a * fb - b * fa) / (fb - fa);
        if !(s > a && s < b) {
            s = 0.5 * (a + b);
        }
        let fs = eval(s, &mut m, &mut warm)?.ln();
        if fs.abs() < best.0 {
            best = (fs.abs(), s);
        }
        if fs.abs() <= tol || width < 1e-15 {
            break;
        }
        if fs > 0.0 {
            a = s;
            fa = fs;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = s;
            fb = fs;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
        if b - a > 0.5 * width {
            let mid = 0.5 * (a + b);
            let fm = eval(mid, &mut m, &mut warm)?.ln();
            if fm.abs() < best.0 {
                best = (fm.abs(), mid);
            }
            if fm.abs() <= tol {
                break;
            }
            if fm > 0.0 {
                a = mid;
                fa = fm;
            } else {
                b = mid;
                fb = fm;
            }
            side = 0;
        }
    }
    let delta = best.1;
    let l = eval(delta, &mut m, &mut warm)?;
    if (l - 1.0).abs() > tol.max(1e-12) * 10.0 {
        return Err(Error::Convergence {
            iterations: samples.len(),
            residual: (l - 1.0).abs(),
        });
    }
    Ok(BowenSolution {
        delta,
        lambda_minus_one: l - 1.0,
        eigen: warm.expect("evaluated"),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaStep {
    pub tau: f64,
    pub partition_size: usize,
    pub delta: f64,
    pub lambda_minus_one: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub tau: f64,
    pub history: Vec<DeltaStep>,
    pub converged: bool,
}

/// `δ` from `λ(δ) = 1`, refining `τ → τ/2` until successive estimates
/// differ by less than `tol` (at most `max_refinements` halvings).
pub fn estimate_delta_with(
    data: &SchottkyData,
    tau: f64,
    tol: f64,
    max_refinements: usize,
    budget: usize,
) -> Result<DeltaEstimate> {
    if data.r() < 2 {
        return Err(Error::NonElementary(data.r()));
    }
    let mut history: Vec<DeltaStep> = Vec::new();
    let mut t = tau;
    for _ in 0..=max_refinements {
        let z = data.build_partition(t, budget)?;
        let sol = solve_bowen(data, &z, (tol * 1e-3).max(1e-13))?;
        history.push(DeltaStep {
            tau: t,
            partition_size: z.len(),
            delta: sol.delta,
            lambda_minus_one: sol.lambda_minus_one,
        });
        let k = history.len();
        if k >= 2 && (history[k - 1].delta - history[k - 2].delta).abs() < tol {
            return Ok(DeltaEstimate {
                delta: sol.delta,
                tau: t,
                history,
                converged: true,
            });
        }
        t *= 0.5;
    }
    let last = history.last().expect("nonempty").clone();
    Err(Error::Convergence {
        iterations: history.len(),
        residual: (last.delta - history[history.len() - 2].delta).abs(),
    })
}

pub fn estimate_delta(data: &SchottkyData, tau: f64, tol: f64) -> Result<DeltaEstimate> {
    estimate_delta_with(data, tau, tol, 30, DEFAULT_BUDGET)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareEstimate {
    /// Crossing abscissae `s_n` with `P_{n+1}(s_n) = P_n(s_n)`.
    pub crossings: Vec<(usize, f64)>,
    /// Aitken extrapolation of the last three crossings.
    pub delta: f64,
}

/// Level sums `P_n(s) = Σ_{|a| = n} |I_a|^s`: the abscissa where consecutive
/// levels balance approaches the exponent of convergence.
pub fn poincare_series_delta(data: &SchottkyData, max_len: usize) -> Result<PoincareEstimate> {
    if max_len < 4 {
        return Err(Error::Domain("need max_len >= 4".into()));
    }
    let r = data.r();
    let cap = DEFAULT_BUDGET * 20;
    // entries: (γ_{a}, last letter); the level-n sizes come from γ_{a'} applied to I_{a_n}
    let mut level: Vec<(MobiusTransform, Letter)> = Vec::new();
    let mut logs: Vec<Vec<f64>> = Vec::new();
    let mut sizes = Vec::new();
    for l in data.alphabet().letters() {
        level.push((data.generator(l), l));
        sizes.push(data.interval(l).size().ln());
    }
    logs.push(sizes);
    for _ in 2..=max_len {
        let next_count = level.len() * (2 * r - 1);
        if next_count > cap {
            return Err(Error::Budget {
                what: "Poincaré level".into(),
                cap,
            });
        }
        let next: Vec<Vec<(MobiusTransform, f64, Letter)>> = level
            .par_iter()
            .map(|(g, last)| {
                data.alphabet()
                    .letters()
                    .filter(|&l| l != last.bar(r))
                    .map(|l| {
                        let size = g
                            .image_interval(&data.interval(l))
                            .map(|iv| iv.size().ln())
                            .unwrap_or(f64::NAN);
                        (g.compose(&data.generator(l)), size, l)
                    })
                    .collect()
            })
            .collect();
        let flat: Vec<_> = next.into_iter().flatten().collect();
        logs.push(flat.iter().map(|t| t.1).collect());
        level = flat.into_iter().map(|(g, _, l)| (g, l)).collect();
    }
    let level_sum = |n: usize, s: f64| -> f64 {
        let v = &logs[n - 1];
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (v.iter().map(|&x| (s * (x - m)).exp()).sum::<f64>()).ln() + s * m
    };
    let mut crossings = Vec::new();
    for n in 1..max_len {
        // log P_{n+1} − log P_n is decreasing in s
        let g = |s: f64| level_sum(n + 1, s) - level_sum(n, s);
        let (mut lo, mut hi) = (0.0, 1.0);
        if !(g(lo) > 0.0 && g(hi) < 0.0) {
            continue;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        crossings.push((n, 0.5 * (lo + hi)));
    }
    if crossings.len() < 3 {
        return Err(Error::Convergence {
            iterations: crossings.len(),
            residual: f64::NAN,
        });
    }
    let k = crossings.len();
    let (x0, x1, x2) = (crossings[k - 3].1, crossings[k - 2].1, crossings[k - 1].1);
    let den = x2 - 2.0 * x1 + x0;
    let delta = if den.abs() > 1e-15 && ((x2 - x1) / (x1 - x0)).abs() < 0.9 {
        x2 - (x2 - x1).powi(2) / den
    } else {
        x2
    };
    Ok(PoincareEstimate { crossings, delta })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub word: Word,
    pub center: f64,
    pub mass: f64,
    pub interval: Interval,
}

/// Point masses at the centres of partition intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
    tau: f64,
    delta: f64,
    /// Atom indices by increasing centre.
    order: Vec<usize>,
    /// `cumulative[k]` = mass of the first `k` atoms in `order`.
    cumulative: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn from_atoms(atoms: Vec<Atom>, tau: f64, delta: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Precondition("measure without atoms".into()));
        }
        if atoms.iter().any(|a| !(a.mass >= 0.0) || !a.center.is_finite()) {
            return Err(Error::Precondition("atom masses must be finite and >= 0".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition(format!("total mass {total} != 1")));
        }
        let mut order: Vec<usize> = (0..atoms.len()).collect();
        order.sort_by(|&i, &j| atoms[i].center.total_cmp(&atoms[j].center));
        let mut cumulative = Vec::with_capacity(atoms.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for &i in &order {
            acc += atoms[i].mass;
            cumulative.push(acc);
        }
        Ok(DiscreteMeasure {
            atoms,
            tau,
            delta,
            order,
            cumulative,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.center).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.mass).collect()
    }

    /// Atoms sorted by centre.
    pub fn sorted_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.order.iter().map(|&i| &self.atoms[i])
    }

    /// Smallest closed interval containing every atom.
    pub fn support_hull(&self) -> Interval {
        let lo = self.atoms[self.order[0]].center;
        let hi = self.atoms[*self.order.last().expect("nonempty")].center;
        Interval { lo, hi }
    }

    /// Mass of atoms with centres in the closed interval `j`.
    pub fn interval_mass(&self, j: &Interval) -> f64 {
        let first = self.order.partition_point(|&i| self.atoms[i].center < j.lo);
        let end = self.order.partition_point(|&i| self.atoms[i].center <= j.hi);
        if end <= first {
            0.0
        } else {
            self.cumulative[end] - self.cumulative[first]
        }
    }

    /// Centre of the atom at which the cumulative mass first reaches `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cumulative[1..].partition_point(|&c| c < u);
        self.atoms[self.order[k.min(self.order.len() - 1)]].center
    }

    /// `Σ f(x_a) μ_a`, with compensated summation.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| f(a.center) * a.mass))
    }
}

/// Neumaier summation.
pub fn compensated_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0_f64;
    let mut c = 0.0_f64;
    for x in it {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

fn measure_from_eigen(z: &Partition, left: &[f64], delta: f64) -> Result<DiscreteMeasure> {
    let atoms = z
        .cells
        .iter()
        .zip(left)
        .map(|(c, &m)| Atom {
            word: c.word.clone(),
            center: c.center(),
            mass: m,
            interval: c.interval,
        })
        .collect();
    DiscreteMeasure::from_atoms(atoms, z.tau, delta)
}

/// Normalized left Perron vector of the transfer matrix at `s = δ`.
pub fn build_measure(data: &SchottkyData, tau: f64, delta: f64) -> Result<DiscreteMeasure> {
    let z = data.build_partition(tau, DEFAULT_BUDGET)?;
    let m = TransferMatrix::build(data, &z, delta)?;
    let e = leading_eigen(&m, EIGEN_TOL)?;
    if (e.lambda - 1.0).abs() > 1e-2 {
        return Err(Error::Precondition(format!(
            "λ(δ) = {} is not close to 1",
            e.lambda
        )));
    }
    measure_from_eigen(&z, &e.left, delta)
}

/// Measure at the exponent solving `λ(s) = 1` for this very partition, so the
/// discrete operator fixes it exactly.
pub fn build_measure_fixed_point(
    data: &SchottkyData,
    tau: f64,
    budget: usize,
) -> Result<DiscreteMeasure> {
    let z = data.build_partition(tau, budget)?;
    let sol = solve_bowen(data, &z, 1e-14)?;
    measure_from_eigen(&z, &sol.eigen.left, sol.delta)
}

/// Test functions used for invariance checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    One,
    X,
    X2,
    Sin,
    /// Smooth bump `exp(-1/(1-t²))` with `t = (x - center)/width`.
    Bump { center: f64, width: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::One => 1.0,
            TestFunction::X => x,
            TestFunction::X2 => x * x,
            TestFunction::Sin => x.sin(),
            TestFunction::Bump { center, width } => bump((x - center) / width),
        }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::One => "1".into(),
            TestFunction::X => "x".into(),
            TestFunction::X2 => "x^2".into(),
            TestFunction::Sin => "sin x".into(),
            TestFunction::Bump { center, width } => format!("bump({center},{width})"),
        }
    }

    pub fn standard() -> [TestFunction; 4] {
        [TestFunction::One, TestFunction::X, TestFunction::X2, TestFunction::Sin]
    }
}

/// `exp(-1/(1-t²))` on `|t| < 1`, else 0.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

struct Branches {
    maps: Vec<MobiusTransform>,
    by_last: Vec<Vec<usize>>,
    first_slot: Vec<usize>,
    index_of_center: Vec<f64>,
    masses: Vec<f64>,
}

fn branches(data: &SchottkyData, mu: &DiscreteMeasure) -> Branches {
    let q = data.alphabet().size();
    let mut by_last = vec![Vec::new(); q];
    let mut first_slot = Vec::with_capacity(mu.len());
    let mut maps = Vec::with_capacity(mu.len());
    for (i, a) in mu.atoms().iter().enumerate() {
        by_last[a.word.last().expect("nonempty").slot()].push(i);
        first_slot.push(a.word.first().expect("nonempty").slot());
        maps.push(data.group_element(&a.word.prime()));
    }
    Branches {
        maps,
        by_last,
        first_slot,
        index_of_center: mu.centers(),
        masses: mu.masses(),
    }
}

/// `|∫ f dμ − ∫ 𝓛^k f dμ|` on the atoms.
///
/// The branch weights are those of the discrete operator (derivatives taken at
/// atom centres) and `f` is evaluated at the exact branch images
/// `γ_{a_1'⋯a_k'}(x_b)`, so the residual vanishes for constants at the discrete
/// fixed point and measures the quadrature error otherwise.
pub fn transfer_invariance_residual(
    data: &SchottkyData,
    mu: &DiscreteMeasure,
    f: impl Fn(f64) -> f64 + Sync,
    k: usize,
) -> Result<f64> {
    let lhs = mu.integrate(&f);
    Ok((lhs - transfer_integral(data, mu, f, k)?).abs())
}

/// `∫ 𝓛^k f dμ` with the discrete weights of [`transfer_invariance_residual`].
pub fn transfer_integral(
    data: &SchottkyData,
    mu: &DiscreteMeasure,
    f: impl Fn(f64) -> f64 + Sync,
    k: usize,
) -> Result<f64> {
    if k == 0 || k > 4 {
        return Err(Error::Domain(format!("power k = {k} outside 1..=4")));
    }
    let br = branches(data, mu);
    let delta = mu.delta();
    // weight[b][slot in by_last] = w_{a'}(x_b)^δ
    let weights: Vec<Vec<f64>> = (0..mu.len())
        .into_par_iter()
        .map(|b| {
            let x = br.index_of_center[b];
            br.by_last[br.first_slot[b]]
                .iter()
                .map(|&a| {
                    log_ball_derivative(&br.maps[a], x).map(|l| (delta * l).exp())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    fn descend(
        br: &Branches,
        weights: &[Vec<f64>],
        f: &(dyn Fn(f64) -> f64 + Sync),
        atom: usize,
        map: &MobiusTransform,
        x: f64,
        depth: usize,
    ) -> f64 {
        let mut acc = 0.0;
        for (slot, &a) in br.by_last[br.first_slot[atom]].iter().enumerate() {
            let w = weights[atom][slot];
            let g = br.maps[a].compose(map);
            acc += w * if depth == 1 {
                g.apply_real(x).map_or(0.0, f)
            } else {
                descend(br, weights, f, a, &g, x, depth - 1)
            };
        }
        acc
    }

    let fr: &(dyn Fn(f64) -> f64 + Sync) = &f;
    let terms: Vec<f64> = (0..mu.len())
        .into_par_iter()
        .map(|b| {
            let x = br.index_of_center[b];
            br.masses[b] * descend(&br, &weights, fr, b, &MobiusTransform::IDENTITY, x, k)
        })
        .collect();
    Ok(compensated_sum(terms))
}

/// `|∫_{I_a} f dμ − ∫_{ℐ ∖ I_ā} f(γ_a x) |γ_a'(x)|_𝔹^δ dμ(x)|`.
pub fn equivariance_residual(
    data: &SchottkyData,
    mu: &DiscreteMeasure,
    a: Letter,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    let r = data.r();
    let ia = data.interval(a);
    let ibar = data.interval(a.bar(r));
    let g = data.generator(a);
    let lhs = compensated_sum(
        mu.atoms()
            .iter()
            .filter(|t| ia.contains(t.center))
            .map(|t| f(t.center) * t.mass),
    );
    let mut rhs = Vec::new();
    for t in mu.atoms().iter().filter(|t| !ibar.contains(t.center)) {
        let y = g.apply_real(t.center).ok_or(Error::Pole(0.0))?;
        let w = (mu.delta() * log_ball_derivative(&g, t.center)?).exp();
        rhs.push(f(y) * w * t.mass);
    }
    Ok((lhs - compensated_sum(rhs)).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// `μ(I)/|I|^δ` over random intervals anywhere in the hull.
    pub upper: Band,
    /// `μ(I)/|I|^δ` over random intervals centred on the support.
    pub lower: Band,
    pub n_samples: usize,
    pub size_range: (f64, f64),
}

/// Random intervals with log-uniform sizes in `[10τ, 1]`. Upper-band
/// intervals have uniform centres in the support hull; lower-band intervals
/// are centred at `μ`-quantiles, which stay put as `τ` is refined.
pub fn regularity_scan(mu: &DiscreteMeasure, n_samples: usize, seed: u64) -> RegularityReport {
    let lo_size = (10.0 * mu.tau()).min(1.0);
    let hi_size = 1.0;
    let hull = mu.support_hull();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut upper = Band::default();
    let mut lower = Band::default();
    let d = mu.delta();
    for _ in 0..n_samples {
        let size = (lo_size.ln() + rng.gen::<f64>() * (hi_size / lo_size).ln()).exp();
        let c = hull.lo + rng.gen::<f64>() * hull.size();
        let iv = Interval::centered(c, 0.5 * size).expect("positive size");
        let m = mu.interval_mass(&iv);
        if m > 0.0 {
            upper.push(m / size.powf(d));
        }
        let size2 = (lo_size.ln() + rng.gen::<f64>() * (hi_size / lo_size).ln()).exp();
        let u: f64 = rng.gen();
        let c2 = mu.quantile(u);
        let iv2 = Interval::centered(c2, 0.5 * size2).expect("positive size");
        lower.push(mu.interval_mass(&iv2) / size2.powf(d));
    }
    RegularityReport {
        upper,
        lower,
        n_samples,
        size_range: (lo_size, hi_size),
    }
}

/// Middle-third Cantor measure at depth `n`: `2^n` equal atoms at the
/// centres of the level-`n` intervals, coded by letters 1 (left) and 2 (right).
pub fn cantor_measure(n: usize) -> Result<DiscreteMeasure> {
    if n == 0 || n > 24 {
        return Err(Error::Domain(format!("Cantor depth {n} outside 1..=24")));
    }
    let width = 3f64.powi(-(n as i32));
    let mass = 0.5f64.powi(n as i32);
    let mut atoms = Vec::with_capacity(1 << n);
    for code in 0..(1u64 << n) {
        let mut lo = 0.0;
        let mut letters = Vec::with_capacity(n);
        for level in 0..n {
            let bit = (code >> (n - 1 - level)) & 1;
            letters.push(Letter(bit as u32 + 1));
            lo += 2.0 * bit as f64 * 3f64.powi(-(level as i32 + 1));
        }
        let interval = Interval {
            lo,
            hi: lo + width,
        };
        atoms.push(Atom {
            word: Word::from_letters(letters),
            center: interval.midpoint(),
            mass,
            interval,
        });
    }
    DiscreteMeasure::from_atoms(atoms, width, 2f64.ln() / 3f64.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::Alphabet;

    fn toy() -> SchottkyData {
        SchottkyData::from_disks(&[-1.5, -0.4, 0.4, 1.5], &[0.45, 0.3, 0.3, 0.45]).unwrap()
    }

    #[test]
    fn coarse_partition_matrix_is_identity_at_zero() {
        let g = toy();
        let z = g.build_partition(1.0, DEFAULT_BUDGET).unwrap();
        let m = TransferMatrix::build(&g, &z, 0.0).unwrap();
        assert_eq!(m.nnz(), 4);
        assert!(m.row_sums().iter().all(|&s| (s - 1.0).abs() < 1e-15));
    }

    #[test]
    fn transpose_matches() {
        let g = toy();
        let z = g.build_partition(0.05, DEFAULT_BUDGET).unwrap();
        let m = TransferMatrix::build(&g, &z, 0.4).unwrap();
        let n = m.dim();
        let u: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).sin()).collect();
        let left = m.mul_left(&u);
        let dense = m.to_dense();
        for j in 0..n {
            let want: f64 = (0..n).map(|i| u[i] * dense[i][j]).sum();
            assert!((left[j] - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn measure_has_unit_mass() {
        let g = toy();
        let mu = build_measure_fixed_point(&g, 0.01, DEFAULT_BUDGET).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        let all = Interval::new(-10.0, 10.0).unwrap();
        assert!((mu.interval_mass(&all) - 1.0).abs() < 1e-12);
        let r = transfer_invariance_residual(&g, &mu, |_| 1.0, 1).unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn cantor_basics() {
        let mu = cantor_measure(5).unwrap();
        assert_eq!(mu.len(), 32);
        assert!((mu.total_mass() - 1.0).abs() < 1e-14);
        let left = Interval::new(0.0, 1.0 / 3.0).unwrap();
        assert!((mu.interval_mass(&left) - 0.5).abs() < 1e-14);
        assert!(Alphabet::new(1).is_ok());
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }
}
