//! Fractal uncertainty operators: the atom quadrature of
//! `B(h)u(x) = ∫ e^{iΦ(x,y)/h} G(x,y) u(y) dμ(y)`, its Schur bound, the
//! thickened density `F_h`, and the Lebesgue-side operator sandwiched by
//! indicators of a partition neighbourhood.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_power_law, ScanResult};
use crate::linalg::{largest_singular_value, DenseMatrix, KernelOperator, LinearOperator};
use crate::measure::{build_measure, DiscreteMeasure};
use crate::mobius::Interval;
use crate::schottky::{SchottkyData, DEFAULT_BUDGET};

/// Cap on the grid points of the Lebesgue-side discretization.
pub const LEBESGUE_GRID_CAP: usize = 40_000;
/// Above this many entries the Lebesgue operator is applied matrix-free.
pub const DENSE_ENTRY_CAP: usize = 25_000_000;
/// Grid points per side used when sampling `C³`/`C¹` norms.
const NORM_SAMPLES: usize = 24;
const MAX_LANCZOS: usize = 300;

type PhaseFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type AmplitudeFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// Phase `Φ`, amplitude `G` and the constant `C_{Φ,G}`.
#[derive(Clone)]
pub struct KernelSpec {
    pub name: String,
    pub phi: PhaseFn,
    /// `∂²Φ/∂x∂y`.
    pub phi_xy: PhaseFn,
    pub amplitude: AmplitudeFn,
    /// `G` vanishes for `x` outside (when set).
    pub x_support: Option<Interval>,
    /// `G` vanishes for `y` outside (when set).
    pub y_support: Option<Interval>,
    /// The phase is undefined for `|x - y| < gap`.
    pub gap: f64,
    pub c_bound: f64,
}

impl std::fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("x_support", &self.x_support)
            .field("y_support", &self.y_support)
            .field("gap", &self.gap)
            .field("c_bound", &self.c_bound)
            .finish()
    }
}

/// `Φ(x,y) = 2 log|x−y| − log(1+x²) − log(1+y²)`, with `G ≡ 1` and no support
/// yet; restrict it with [`KernelSpec::with_bump`].
pub fn hyperbolic_phase() -> KernelSpec {
    KernelSpec {
        name: "hyperbolic".into(),
        phi: Arc::new(|x, y| 2.0 * (x - y).abs().ln() - ((x * x).ln_1p() + (y * y).ln_1p())),
        phi_xy: Arc::new(|x, y| 2.0 / ((x - y) * (x - y))),
        amplitude: Arc::new(|_, _| Complex64::new(1.0, 0.0)),
        x_support: None,
        y_support: None,
        gap: 1e-2,
        c_bound: f64::INFINITY,
    }
}

/// `Φ ≡ 0`: the non-oscillating control.
pub fn zero_phase() -> KernelSpec {
    KernelSpec {
        name: "zero".into(),
        phi: Arc::new(|_, _| 0.0),
        phi_xy: Arc::new(|_, _| 0.0),
        amplitude: Arc::new(|_, _| Complex64::new(1.0, 0.0)),
        x_support: None,
        y_support: None,
        gap: 0.0,
        c_bound: f64::INFINITY,
    }
}

/// `exp(1 − 1/(1−t²))` for `t = (x − c)/w`, equal to 1 at the centre.
fn unit_bump(x: f64, c: f64, w: f64) -> f64 {
    let t = (x - c) / w;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Support radius of the bump adapted to interval `iv`.
pub fn bump_radius(iv: &Interval) -> f64 {
    0.625 * iv.size()
}

impl KernelSpec {
    /// Evaluate `Φ`, rejecting points inside the diagonal gap.
    pub fn phase(&self, x: f64, y: f64) -> Result<f64> {
        if (x - y).abs() < self.gap {
            return Err(Error::Domain(format!(
                "|x - y| = {} is inside the diagonal gap {}",
                (x - y).abs(),
                self.gap
            )));
        }
        Ok((self.phi)(x, y))
    }

    pub fn amplitude_at(&self, x: f64, y: f64) -> Complex64 {
        if self.x_support.is_some_and(|s| !s.contains(x)) || self.y_support.is_some_and(|s| !s.contains(y)) {
            return Complex64::new(0.0, 0.0);
        }
        (self.amplitude)(x, y)
    }

    /// `e^{iΦ/h} G`, zero where `G` vanishes.
    pub fn kernel(&self, x: f64, y: f64, h: f64) -> Result<Complex64> {
        let g = self.amplitude_at(x, y);
        if g == Complex64::new(0.0, 0.0) {
            return Ok(g);
        }
        Ok(Complex64::from_polar(1.0, self.phase(x, y)? / h) * g)
    }

    /// `G(x,y) = χ_X(x) χ_Y(y)` with smooth bumps centred on `x_iv`, `y_iv`,
    /// followed by a fresh sampled `c_bound`.
    pub fn with_bump(mut self, x_iv: Interval, y_iv: Interval) -> Result<Self> {
        let (cx, wx) = (x_iv.midpoint(), bump_radius(&x_iv));
        let (cy, wy) = (y_iv.midpoint(), bump_radius(&y_iv));
        self.amplitude = Arc::new(move |x, y| Complex64::new(unit_bump(x, cx, wx) * unit_bump(y, cy, wy), 0.0));
        self.x_support = Some(Interval { lo: cx - wx, hi: cx + wx });
        self.y_support = Some(Interval { lo: cy - wy, hi: cy + wy });
        self.name = format!("{}+bump", self.name);
        self.refresh_c_bound()
    }

    /// Bump amplitude on `I_1 × I_{2r}` with gap `0.01·diam(Λ)`.
    pub fn for_group(self, data: &SchottkyData) -> Result<Self> {
        let n = data.intervals().len();
        let mut ks = self;
        if ks.gap > 0.0 {
            ks.gap = 0.01 * data.hull().size();
        }
        ks.with_bump(data.intervals()[0], data.intervals()[n - 1])
    }

    /// Multiply `G` by a constant.
    pub fn scaled(mut self, c: f64) -> Self {
        let g = self.amplitude.clone();
        self.amplitude = Arc::new(move |x, y| g(x, y) * c);
        self
    }

    pub fn with_c_bound(mut self, c: f64) -> Self {
        self.c_bound = c;
        self
    }

    fn sample_grid(&self) -> Result<Vec<(f64, f64)>> {
        let (Some(xs), Some(ys)) = (self.x_support, self.y_support) else {
            return Err(Error::Precondition("amplitude support is unbounded".into()));
        };
        let mut pts = Vec::with_capacity(NORM_SAMPLES * NORM_SAMPLES);
        for i in 0..NORM_SAMPLES {
            let x = xs.lo + xs.size() * (i as f64 + 0.5) / NORM_SAMPLES as f64;
            for j in 0..NORM_SAMPLES {
                let y = ys.lo + ys.size() * (j as f64 + 0.5) / NORM_SAMPLES as f64;
                pts.push((x, y));
            }
        }
        Ok(pts)
    }

    /// Sampled `(‖Φ‖_{C³} + ‖G‖_{C¹}, inf |∂²_{xy}Φ|)` over the support.
    pub fn sampled_norms(&self) -> Result<(f64, f64)> {
        let pts = self.sample_grid()?;
        let e = 1e-3;
        let mut sup = [0.0_f64; 4];
        let mut sup_g = [0.0_f64; 2];
        let mut inf_mixed = f64::INFINITY;
        for &(x, y) in &pts {
            if (x - y).abs() < self.gap + 3.0 * e {
                return Err(Error::Domain("amplitude support meets the diagonal gap".into()));
            }
            let p = |i: i32, j: i32| (self.phi)(x + i as f64 * e, y + j as f64 * e);
            // central differences for every multi-index of order ≤ 3
            let d1 = [(p(1, 0) - p(-1, 0)) / (2.0 * e), (p(0, 1) - p(0, -1)) / (2.0 * e)];
            let dxx = (p(1, 0) - 2.0 * p(0, 0) + p(-1, 0)) / (e * e);
            let dyy = (p(0, 1) - 2.0 * p(0, 0) + p(0, -1)) / (e * e);
            let dxy = (p(1, 1) - p(1, -1) - p(-1, 1) + p(-1, -1)) / (4.0 * e * e);
            let dxxx = (p(2, 0) - 2.0 * p(1, 0) + 2.0 * p(-1, 0) - p(-2, 0)) / (2.0 * e * e * e);
            let dyyy = (p(0, 2) - 2.0 * p(0, 1) + 2.0 * p(0, -1) - p(0, -2)) / (2.0 * e * e * e);
            let dxxy = (p(1, 1) - 2.0 * p(0, 1) + p(-1, 1) - p(1, -1) + 2.0 * p(0, -1) - p(-1, -1))
                / (2.0 * e * e * e);
            let dxyy = (p(1, 1) - 2.0 * p(1, 0) + p(1, -1) - p(-1, 1) + 2.0 * p(-1, 0) - p(-1, -1))
                / (2.0 * e * e * e);
            sup[0] = sup[0].max(p(0, 0).abs());
            sup[1] = sup[1].max(d1[0].abs()).max(d1[1].abs());
            sup[2] = sup[2].max(dxx.abs()).max(dyy.abs()).max(dxy.abs());
            sup[3] = sup[3].max(dxxx.abs()).max(dyyy.abs()).max(dxxy.abs()).max(dxyy.abs());
            let g = |i: i32, j: i32| (self.amplitude)(x + i as f64 * e, y + j as f64 * e);
            sup_g[0] = sup_g[0].max(g(0, 0).norm());
            sup_g[1] = sup_g[1]
                .max(((g(1, 0) - g(-1, 0)) / (2.0 * e)).norm())
                .max(((g(0, 1) - g(0, -1)) / (2.0 * e)).norm());
            inf_mixed = inf_mixed.min((self.phi_xy)(x, y).abs());
        }
        Ok((sup.iter().sum::<f64>() + sup_g[0] + sup_g[1], inf_mixed))
    }

    /// `c_bound = max(‖Φ‖_{C³} + ‖G‖_{C¹}, 1 / inf |∂²_{xy}Φ|)` on samples.
    pub fn refresh_c_bound(mut self) -> Result<Self> {
        let (norms, inf_mixed) = self.sampled_norms()?;
        self.c_bound = norms.max(1.0 / inf_mixed);
        Ok(self)
    }

    /// `sup |G|` on the sample grid.
    pub fn sup_amplitude(&self) -> Result<f64> {
        Ok(self
            .sample_grid()?
            .iter()
            .map(|&(x, y)| (self.amplitude)(x, y).norm())
            .fold(0.0, f64::max))
    }

    /// Finest `τ` allowed by the resolution guard at this `h`.
    pub fn guard_tau(&self, h: f64) -> f64 {
        h / (10.0 * self.c_bound)
    }
}

/// Difference quotient `φ_{xx'}(y) = (Φ(x,y) − Φ(x',y)) / (x − x')`.
pub fn difference_quotient(ks: &KernelSpec, x: f64, x1: f64, y: f64) -> Result<f64> {
    if x == x1 {
        return Err(Error::Precondition("difference quotient needs x ≠ x'".into()));
    }
    Ok((ks.phase(x, y)? - ks.phase(x1, y)?) / (x - x1))
}

/// Atom quadrature of `B(h)`: rows are x-atoms, columns y-atoms.
#[derive(Debug, Clone)]
pub struct FupMatrix {
    pub h: f64,
    pub row_atoms: Vec<usize>,
    pub col_atoms: Vec<usize>,
    pub row_mass: Vec<f64>,
    pub col_mass: Vec<f64>,
    pub row_centers: Vec<f64>,
    pub col_centers: Vec<f64>,
    /// `e^{iΦ/h} G` without masses.
    kernel: DenseMatrix,
}

impl FupMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.row_atoms.len(), self.col_atoms.len())
    }

    /// `e^{iΦ(x_a,x_b)/h} G(x_a,x_b) · mass_b`.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.kernel.get(i, j) * self.col_mass[j]
    }

    pub fn kernel_entry(&self, i: usize, j: usize) -> Complex64 {
        self.kernel.get(i, j)
    }

    /// `√m_a · K_ab · √m_b`, whose singular values are those of `B(h)` on `L²(μ)`.
    pub fn weighted(&self) -> DenseMatrix {
        let rs: Vec<f64> = self.row_mass.iter().map(|m| m.sqrt()).collect();
        let cs: Vec<f64> = self.col_mass.iter().map(|m| m.sqrt()).collect();
        self.kernel.scale_rows_cols(&rs, &cs)
    }

    /// `(B(h)u)(x_a) = Σ_b entry(a,b) u_b`.
    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let (r, c) = self.shape();
        (0..r)
            .map(|i| (0..c).map(|j| self.entry(i, j) * u[j]).sum())
            .collect()
    }
}

fn select(mu: &DiscreteMeasure, support: Option<Interval>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..mu.len())
        .filter(|&i| support.is_none_or(|s| s.contains(mu.atoms()[i].center)))
        .collect();
    idx.sort_by(|&a, &b| mu.atoms()[a].center.total_cmp(&mu.atoms()[b].center));
    idx
}

/// Assemble `B(h)` on the atoms of `mu`.
pub fn build_fup_matrix(mu: &DiscreteMeasure, ks: &KernelSpec, h: f64) -> Result<FupMatrix> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Precondition(format!("h = {h} is not in (0,1)")));
    }
    if !(mu.tau() <= ks.guard_tau(h)) {
        return Err(Error::Refine(format!(
            "τ = {} exceeds h/(10·c_bound) = {}",
            mu.tau(),
            ks.guard_tau(h)
        )));
    }
    let rows = select(mu, ks.x_support);
    let cols = select(mu, ks.y_support);
    let atoms = mu.atoms();
    let rc: Vec<f64> = rows.iter().map(|&i| atoms[i].center).collect();
    let cc: Vec<f64> = cols.iter().map(|&j| atoms[j].center).collect();
    let entries: Vec<Result<Complex64>> = (0..rows.len() * cols.len())
        .into_par_iter()
        .map(|k| ks.kernel(rc[k / cols.len()], cc[k % cols.len()], h))
        .collect();
    let data = entries.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(z) = data.iter().find(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Domain(format!("non-finite kernel entry {z}")));
    }
    Ok(FupMatrix {
        h,
        row_mass: rows.iter().map(|&i| atoms[i].mass).collect(),
        col_mass: cols.iter().map(|&j| atoms[j].mass).collect(),
        kernel: DenseMatrix::from_rows(rows.len(), cols.len(), data)?,
        row_atoms: rows,
        col_atoms: cols,
        row_centers: rc,
        col_centers: cc,
    })
}

/// `‖B(h)‖_{L²(μ)→L²(μ)}` to relative tolerance `tol`.
pub fn operator_norm(m: &FupMatrix, tol: f64) -> Result<f64> {
    Ok(largest_singular_value(&m.weighted(), tol, MAX_LANCZOS)?.sigma)
}

/// `sup_x Σ_{x'} |𝒦(x,x')| m_{x'}` with `𝒦(x,x') = Σ_y K(x,y) conj K(x',y) m_y`.
pub fn schur_bound(m: &FupMatrix) -> f64 {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    // P = K·diag(√m_y); 𝒦 = P P*
    let cs: Vec<f64> = m.col_mass.iter().map(|v| v.sqrt()).collect();
    let ones = vec![1.0; r];
    let p = m.kernel.scale_rows_cols(&ones, &cs);
    (0..r)
        .into_par_iter()
        .map(|a| {
            let pa = p.row(a);
            (0..r)
                .map(|b| {
                    let k: Complex64 = pa.iter().zip(p.row(b)).map(|(u, v)| u * v.conj()).sum();
                    k.norm() * m.row_mass[b]
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FupPoint {
    pub h: f64,
    pub tau: f64,
    pub rows: usize,
    pub cols: usize,
    pub norm: f64,
    pub schur_bound: f64,
    /// `μ(X)^{1/2} μ(Y)^{1/2} · sup|G|`.
    pub trivial_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FupScan {
    pub points: Vec<FupPoint>,
    /// Fit of `‖B(h)‖ ≈ C h^ε`; `exponent_hat` is `ε̂`.
    pub fit: ScanResult,
}

/// One grid point: the measure at the guard resolution, the matrix, its norm
/// and Schur bound.
pub fn fup_point(data: &SchottkyData, delta: f64, ks: &KernelSpec, h: f64, tol: f64) -> Result<FupPoint> {
    let tau = ks.guard_tau(h);
    let mu = build_measure(data, tau, delta)?;
    let m = build_fup_matrix(&mu, ks, h)?;
    let norm = operator_norm(&m, tol)?;
    let schur = schur_bound(&m);
    let mx: f64 = m.row_mass.iter().sum();
    let my: f64 = m.col_mass.iter().sum();
    Ok(FupPoint {
        h,
        tau,
        rows: m.row_atoms.len(),
        cols: m.col_atoms.len(),
        norm,
        schur_bound: schur,
        trivial_bound: (mx * my).sqrt() * ks.sup_amplitude()?,
    })
}

/// `‖B(h)‖` over `h_grid`, rebuilding `μ` at `τ = h/(10·c_bound)` each time.
pub fn fup_scan(data: &SchottkyData, delta: f64, ks: &KernelSpec, h_grid: &[f64], tol: f64) -> Result<FupScan> {
    let points = h_grid
        .iter()
        .map(|&h| fup_point(data, delta, ks, h, tol))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_power_law(&points.iter().map(|p| (p.h, p.norm)).collect::<Vec<_>>());
    Ok(FupScan { points, fit })
}

/// `F_h(x) = μ([x−2h, x+2h]) / (4 h^δ)`.
pub fn thickened_density(mu: &DiscreteMeasure, h: f64, x: f64) -> f64 {
    mu.interval_mass(&Interval { lo: x - 2.0 * h, hi: x + 2.0 * h }) / (4.0 * h.powf(mu.delta()))
}

/// Union of `thicken(I_a, r)` over partition cells, as sorted disjoint intervals.
pub fn neighbourhood(data: &SchottkyData, tau: f64, r: f64) -> Result<Vec<Interval>> {
    let z = data.build_partition(tau, DEFAULT_BUDGET)?;
    let mut ivs: Vec<Interval> = z.cells.iter().map(|c| c.interval.thicken(r)).collect();
    ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::new();
    for iv in ivs {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    Ok(out)
}

/// Midpoints of the lattice cells `[kΔ, (k+1)Δ]` that lie in `set ∩ window`.
pub fn grid_points(set: &[Interval], window: Option<Interval>, step: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    for iv in set {
        let (lo, hi) = match window {
            Some(w) => (iv.lo.max(w.lo), iv.hi.min(w.hi)),
            None => (iv.lo, iv.hi),
        };
        if hi <= lo {
            continue;
        }
        let k0 = (lo / step).floor() as i64;
        let k1 = (hi / step).ceil() as i64;
        for k in k0..k1 {
            let x = (k as f64 + 0.5) * step;
            if x >= lo && x <= hi && pts.last().is_none_or(|&p| x > p) {
                pts.push(x);
            }
        }
    }
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LebesgueNorm {
    pub h: f64,
    pub rho: f64,
    pub step: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub norm: f64,
}

/// `‖1_{Λ(h^ρ)} 𝓑(h) 1_{Λ(h^ρ)}‖` with `𝓑(h)u(x) = (2πh)^{−1/2} ∫ e^{iΦ/h} G u dy`,
/// by midpoint quadrature of step `h/20` on `Λ(h^ρ)`, the union of
/// `h^ρ`-thickened intervals of `Z(h^ρ)`.
pub fn lebesgue_fup_norm(data: &SchottkyData, ks: &KernelSpec, h: f64, rho: f64, tol: f64) -> Result<LebesgueNorm> {
    lebesgue_fup_norm_with(data, ks, h, rho, tol, LEBESGUE_GRID_CAP)
}

pub fn lebesgue_fup_norm_with(
    data: &SchottkyData,
    ks: &KernelSpec,
    h: f64,
    rho: f64,
    tol: f64,
    cap: usize,
) -> Result<LebesgueNorm> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Precondition(format!("ρ = {rho} is not in (0,1)")));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Precondition(format!("h = {h} is not in (0,1)")));
    }
    let scale = h.powf(rho);
    let set = neighbourhood(data, scale.min(1.0), scale)?;
    let step = h / 20.0;
    let xs = grid_points(&set, ks.x_support, step);
    let ys = grid_points(&set, ks.y_support, step);
    if xs.len() + ys.len() > cap {
        return Err(Error::Budget {
            what: "Lebesgue grid points".into(),
            cap,
        });
    }
    let pref = step / (2.0 * PI * h).sqrt();
    let (n_x, n_y) = (xs.len(), ys.len());
    if n_x == 0 || n_y == 0 {
        return Ok(LebesgueNorm { h, rho, step, n_x, n_y, norm: 0.0 });
    }
    // reject amplitude support inside the gap up front, then evaluate freely
    for &x in &xs {
        let k = ys.partition_point(|&y| y < x);
        for &y in ys.get(k.saturating_sub(1)..(k + 1).min(n_y)).unwrap_or(&[]) {
            ks.kernel(x, y, h)?;
        }
    }
    let entry = |i: usize, j: usize| ks.kernel(xs[i], ys[j], h).unwrap_or_default() * pref;
    let sigma = if n_x * n_y <= DENSE_ENTRY_CAP {
        let m = DenseMatrix::from_fn(n_x, n_y, entry);
        largest_singular_value(&m, tol, MAX_LANCZOS)?.sigma
    } else {
        let op = KernelOperator { rows: n_x, cols: n_y, entry };
        largest_singular_value(&op as &dyn LinearOperator, tol, MAX_LANCZOS)?.sigma
    };
    Ok(LebesgueNorm { h, rho, step, n_x, n_y, norm: sigma })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LebesgueScan {
    pub points: Vec<LebesgueNorm>,
    /// Fit of the norm against `h`; `exponent_hat` is `β̂`.
    pub fit: ScanResult,
}

pub fn lebesgue_scan(data: &SchottkyData, ks: &KernelSpec, h_grid: &[f64], rho: f64, tol: f64) -> Result<LebesgueScan> {
    let points = h_grid
        .iter()
        .map(|&h| lebesgue_fup_norm(data, ks, h, rho, tol))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_power_law(&points.iter().map(|p| (p.h, p.norm)).collect::<Vec<_>>());
    Ok(LebesgueScan { points, fit })
}
