//! Oscillatory integrals against the discrete measure and the combinatorial
//! statistics behind the Fourier decay argument: linearized slopes `ζ`,
//! exponential sums, box-dimension counts and regular sequences.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_power_law_window, ScanResult};
use crate::measure::{compensated_sum, DiscreteMeasure};
use crate::mobius::Interval;
use crate::schottky::Partition;
use crate::symbolic::{squiggle, Word};

/// `|ξ| · τ · sup|φ'|` above which the atom quadrature is rejected.
pub const RESOLUTION_LIMIT: f64 = 0.1;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type ComplexFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Phase `φ` and amplitude `g` of `∫ e^{iξφ} g dμ`.
#[derive(Clone)]
pub struct PhasePair {
    pub phi: RealFn,
    pub dphi: RealFn,
    pub d2phi: RealFn,
    pub g: ComplexFn,
    pub dg: ComplexFn,
    pub c_bound: f64,
}

impl std::fmt::Debug for PhasePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhasePair")
            .field("c_bound", &self.c_bound)
            .finish_non_exhaustive()
    }
}

impl PhasePair {
    /// `φ(x) = x`, `g ≡ 1`: plain Fourier transform.
    pub fn linear(c_bound: f64) -> Self {
        PhasePair {
            phi: Arc::new(|x| x),
            dphi: Arc::new(|_| 1.0),
            d2phi: Arc::new(|_| 0.0),
            g: Arc::new(|_| Complex64::new(1.0, 0.0)),
            dg: Arc::new(|_| Complex64::new(0.0, 0.0)),
            c_bound,
        }
    }

    /// `φ(x) = x + κ x²/2`, `g ≡ 1`.
    pub fn quadratic(kappa: f64, c_bound: f64) -> Self {
        PhasePair {
            phi: Arc::new(move |x| x + 0.5 * kappa * x * x),
            dphi: Arc::new(move |x| 1.0 + kappa * x),
            d2phi: Arc::new(move |_| kappa),
            g: Arc::new(|_| Complex64::new(1.0, 0.0)),
            dg: Arc::new(|_| Complex64::new(0.0, 0.0)),
            c_bound,
        }
    }

    pub fn with_amplitude(mut self, g: ComplexFn, dg: ComplexFn) -> Self {
        self.g = g;
        self.dg = dg;
        self
    }

    /// `sup |φ'|` over the atoms.
    pub fn sup_dphi(&self, mu: &DiscreteMeasure) -> f64 {
        mu.atoms()
            .iter()
            .map(|a| (self.dphi)(a.center).abs())
            .fold(0.0, f64::max)
    }

    /// Sampled `‖φ‖_{C²} + ‖g‖_{C¹}` and `inf |φ'|` on the atoms.
    pub fn sampled_norms(&self, mu: &DiscreteMeasure) -> (f64, f64) {
        let mut s = [0.0_f64; 5];
        let mut inf_d = f64::INFINITY;
        for a in mu.atoms() {
            let x = a.center;
            s[0] = s[0].max((self.phi)(x).abs());
            s[1] = s[1].max((self.dphi)(x).abs());
            s[2] = s[2].max((self.d2phi)(x).abs());
            s[3] = s[3].max((self.g)(x).norm());
            s[4] = s[4].max((self.dg)(x).norm());
            inf_d = inf_d.min((self.dphi)(x).abs());
        }
        (s.iter().sum(), inf_d)
    }

    /// Both hypotheses on the constant `C_{φ,g}`, tested on the atoms.
    pub fn satisfies_bounds(&self, mu: &DiscreteMeasure) -> bool {
        let (norm, inf_d) = self.sampled_norms(mu);
        norm <= self.c_bound && inf_d >= 1.0 / self.c_bound
    }

    pub fn sup_g(&self, mu: &DiscreteMeasure) -> f64 {
        mu.atoms()
            .iter()
            .map(|a| (self.g)(a.center).norm())
            .fold(0.0, f64::max)
    }
}

fn exp_i(t: f64) -> Complex64 {
    let (s, c) = t.sin_cos();
    Complex64::new(c, s)
}

/// Compensated sum of complex terms.
pub fn complex_sum(terms: &[Complex64]) -> Complex64 {
    Complex64::new(
        compensated_sum(terms.iter().map(|z| z.re)),
        compensated_sum(terms.iter().map(|z| z.im)),
    )
}

/// Fails unless the atom spacing resolves the oscillation at frequency `xi`.
pub fn resolution_check(mu: &DiscreteMeasure, sup_dphi: f64, xi: f64) -> Result<()> {
    let q = xi.abs() * mu.tau() * sup_dphi;
    if q > RESOLUTION_LIMIT {
        return Err(Error::Refine(format!(
            "|xi| tau sup|phi'| = {q:.3e} > {RESOLUTION_LIMIT}; use tau <= {:.3e}",
            RESOLUTION_LIMIT / (xi.abs() * sup_dphi)
        )));
    }
    Ok(())
}

/// `Σ_a e^{iξφ(x_a)} g(x_a) μ_a`.
pub fn oscillatory_integral(mu: &DiscreteMeasure, pp: &PhasePair, xi: f64) -> Result<Complex64> {
    if xi.abs() < 1.0 {
        return Err(Error::Domain(format!("|xi| = {} < 1", xi.abs())));
    }
    resolution_check(mu, pp.sup_dphi(mu), xi)?;
    Ok(integral_unchecked(mu, pp, xi))
}

fn integral_unchecked(mu: &DiscreteMeasure, pp: &PhasePair, xi: f64) -> Complex64 {
    let terms: Vec<Complex64> = mu
        .atoms()
        .iter()
        .map(|a| exp_i(xi * (pp.phi)(a.center)) * (pp.g)(a.center) * a.mass)
        .collect();
    complex_sum(&terms)
}

/// Largest `τ` for which a scan up to `xi_max` passes the resolution guard.
pub fn tau_for_xi(xi_max: f64, sup_dphi: f64) -> f64 {
    (0.99 * RESOLUTION_LIMIT / (xi_max.abs() * sup_dphi)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierOptions {
    /// `0`: raw `|μ̂(ξ)|`. Otherwise the value at `ξ` is the maximum over this
    /// many equispaced frequencies in `[ξ, 2ξ]`.
    pub envelope_samples: usize,
    pub min_decades: f64,
    pub r2_min: f64,
}

impl Default for FourierOptions {
    fn default() -> Self {
        FourierOptions {
            envelope_samples: 256,
            min_decades: 1.0,
            r2_min: 0.8,
        }
    }
}

impl FourierOptions {
    pub fn raw() -> Self {
        FourierOptions {
            envelope_samples: 0,
            ..Default::default()
        }
    }
}

/// `|∫ e^{iξφ} g dμ|` over `xi_grid` with a windowed power-law fit;
/// the decay exponent is `-exponent_hat`.
pub fn fourier_scan(
    mu: &DiscreteMeasure,
    pp: &PhasePair,
    xi_grid: &[f64],
    opts: &FourierOptions,
) -> Result<ScanResult> {
    let sup = pp.sup_dphi(mu);
    let reach = if opts.envelope_samples > 0 { 2.0 } else { 1.0 };
    for &xi in xi_grid {
        if xi.abs() < 1.0 {
            return Err(Error::Domain(format!("|xi| = {} < 1", xi.abs())));
        }
        resolution_check(mu, sup, reach * xi)?;
    }
    let points: Vec<(f64, f64)> = xi_grid
        .par_iter()
        .map(|&xi| {
            let v = if opts.envelope_samples == 0 {
                integral_unchecked(mu, pp, xi).norm()
            } else {
                let m = opts.envelope_samples;
                (0..m)
                    .map(|i| {
                        let t = xi * (1.0 + i as f64 / (m - 1).max(1) as f64);
                        integral_unchecked(mu, pp, t).norm()
                    })
                    .fold(0.0, f64::max)
            };
            (xi, v)
        })
        .collect();
    Ok(fit_power_law_window(&points, opts.min_decades, opts.r2_min))
}

/// Raw `|μ̂|` on the self-similar frequencies `2π·3^k`, `k ∈ ks`.
pub fn cantor_control_scan(mu: &DiscreteMeasure, ks: std::ops::RangeInclusive<u32>) -> Result<ScanResult> {
    let pp = PhasePair::linear(4.0);
    let grid: Vec<f64> = ks.map(|k| 2.0 * std::f64::consts::PI * 3f64.powi(k as i32)).collect();
    let points = grid
        .iter()
        .map(|&xi| Ok((xi, oscillatory_integral(mu, &pp, xi)?.norm())))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::fit::fit_power_law(&points))
}

/// `τ` with `|ξ| = τ^{-2k-3/2}`.
pub fn tau_from_xi(xi: f64, k: usize) -> f64 {
    xi.abs().powf(-1.0 / (2.0 * k as f64 + 1.5))
}

/// Frequency window `J_τ = [τ^{-1/4}, C τ^{-1/2}]`.
pub fn j_tau_window(tau: f64, c: f64) -> Interval {
    Interval {
        lo: tau.powf(-0.25),
        hi: c * tau.powf(-0.5),
    }
}

/// `ε₁ = ε₂ δ / (40 (2k + 3/2))`.
pub fn epsilon1_formula(epsilon2: f64, k: usize, delta: f64) -> Result<f64> {
    if !(epsilon2 > 0.0) || k == 0 {
        return Err(Error::Domain("need epsilon2 > 0 and k >= 1".into()));
    }
    Ok(epsilon2 * delta / (40.0 * (2.0 * k as f64 + 1.5)))
}

/// Cell indices `b ∈ Z` with `a ⇝ b ⇝ d`.
pub fn linking_cells(z: &Partition, a: &Word, d: &Word) -> Vec<usize> {
    z.cells
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            squiggle(a, &c.word).unwrap_or(false) && squiggle(&c.word, d).unwrap_or(false)
        })
        .map(|(i, _)| i)
        .collect()
}

fn cell_index(z: &Partition, w: &Word) -> Result<usize> {
    z.cells
        .binary_search_by(|c| c.word.cmp(w))
        .map_err(|_| Error::Precondition(format!("{w} is not in Z({})", z.tau)))
}

/// `ζ_{j,A}(b) = τ^{-2} γ'_{a'_{j-1} b'}(x_{a_j})` for every `b` with
/// `a_{j-1} ⇝ b ⇝ a_j`.
pub fn zeta_values(z: &Partition, seq: &[Word], j: usize) -> Result<Vec<(Word, f64)>> {
    if j == 0 || j >= seq.len() {
        return Err(Error::Domain(format!("j = {j} outside 1..{}", seq.len())));
    }
    let ia = cell_index(z, &seq[j - 1])?;
    let id = cell_index(z, &seq[j])?;
    let x = z.cells[id].center();
    let pa = z.cells[ia].prefix_map;
    let links = linking_cells(z, &seq[j - 1], &seq[j]);
    if links.is_empty() {
        return Err(Error::NoAdmissibleWords);
    }
    let t2 = z.tau * z.tau;
    links
        .into_iter()
        .map(|b| {
            let g = pa.compose(&z.cells[b].prefix_map);
            Ok((z.cells[b].word.clone(), g.derivative(x)? / t2))
        })
        .collect()
}

/// `S_k(η) = N^{-k} Σ exp(2πiη ζ_1(b_1)⋯ζ_k(b_k))`.
pub fn exp_sum(zetas: &[Vec<f64>], eta: f64, n_z: f64) -> Result<Complex64> {
    if zetas.is_empty() || zetas.iter().any(|z| z.is_empty()) {
        return Err(Error::Precondition("exp_sum needs k >= 1 nonempty value sets".into()));
    }
    // Products of the first k-1 factors, then one sum per product.
    let mut prods = vec![1.0_f64];
    for zj in &zetas[..zetas.len() - 1] {
        prods = prods
            .iter()
            .flat_map(|p| zj.iter().map(move |z| p * z))
            .collect();
    }
    let last = zetas.last().expect("nonempty");
    let two_pi_eta = 2.0 * std::f64::consts::PI * eta;
    let partial: Vec<Complex64> = prods
        .par_iter()
        .map(|&p| {
            let terms: Vec<Complex64> = last.iter().map(|&z| exp_i(two_pi_eta * p * z)).collect();
            complex_sum(&terms)
        })
        .collect();
    Ok(complex_sum(&partial) / n_z.powi(zetas.len() as i32))
}

/// Ordered pairs within `sigma`, diagonal included; `values` must be sorted.
fn pair_count_sorted(values: &[f64], sigma: f64) -> u64 {
    let mut count = 0u64;
    let mut hi = 0usize;
    for i in 0..values.len() {
        while hi < values.len() && values[hi] - values[i] <= sigma {
            hi += 1;
        }
        // pairs (i, i..hi)
        count += (hi - i) as u64;
    }
    2 * count - values.len() as u64
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `#{(b, c) : |ζ(b) − ζ(c)| ≤ σ} / N²`.
pub fn box_dim_statistic(zetas: &[f64], sigma: f64, n_z: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain("sigma must be positive".into()));
    }
    Ok(pair_count_sorted(&sorted(zetas), sigma) as f64 / (n_z * n_z))
}

/// Largest `ratio` such that `count(σ) τ^{2δ} / σ^{δ/4}` stays at most one,
/// probed at `σ = τ`, `σ = τ^{ε₂/4}` and every pair distance between them.
fn regular_margin(zetas: &[f64], tau: f64, delta: f64, epsilon2: f64) -> f64 {
    let v = sorted(zetas);
    let s_lo = tau;
    let s_hi = tau.powf(epsilon2 / 4.0);
    let mut dists: Vec<f64> = Vec::new();
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            let d = v[j] - v[i];
            if d > s_hi {
                break;
            }
            if d >= s_lo {
                dists.push(d);
            }
        }
    }
    dists.push(s_lo);
    dists.push(s_hi);
    dists.sort_by(f64::total_cmp);
    dists.dedup();
    let t2d = tau.powf(2.0 * delta);
    dists
        .iter()
        .map(|&s| pair_count_sorted(&v, s) as f64 * t2d / s.powf(delta / 4.0))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityFraction {
    pub fraction: f64,
    pub sampled: usize,
    pub regular: usize,
    pub exhaustive: bool,
    pub worst_margin: f64,
}

/// Fraction of `A ∈ Z(τ)^{k+1}` satisfying the regular-sequence condition
/// for every `j` and `σ ∈ [τ, τ^{ε₂/4}]`. Exhaustive when `|Z|^{k+1}` does not
/// exceed `n_samples`; otherwise a seeded uniform sample without replacement.
pub fn regular_sequence_fraction(
    z: &Partition,
    k: usize,
    delta: f64,
    epsilon2: f64,
    n_samples: usize,
    seed: u64,
) -> Result<RegularityFraction> {
    if !(epsilon2 > 0.0 && epsilon2 < 1.0) || k == 0 {
        return Err(Error::Domain("need epsilon2 in (0,1) and k >= 1".into()));
    }
    let n = z.len();
    let total = (n as f64).powi(k as i32 + 1);
    let exhaustive = total <= n_samples as f64;
    let indices: Vec<u64> = if exhaustive {
        (0..total as u64).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = total.min(u64::MAX as f64 / 2.0);
        if space <= usize::MAX as f64 && space < 1e15 {
            sample(&mut rng, space as usize, n_samples)
                .into_iter()
                .map(|i| i as u64)
                .collect()
        } else {
            return Err(Error::Budget {
                what: "sequence space".into(),
                cap: usize::MAX,
            });
        }
    };
    let tau = z.tau;
    let pair_ok = |ia: usize, id: usize| -> Result<f64> {
        let seq = [z.cells[ia].word.clone(), z.cells[id].word.clone()];
        match zeta_values(z, &seq, 1) {
            Ok(vals) => {
                let v: Vec<f64> = vals.into_iter().map(|t| t.1).collect();
                Ok(regular_margin(&v, tau, delta, epsilon2))
            }
            Err(Error::NoAdmissibleWords) => Ok(0.0),
            Err(e) => Err(e),
        }
    };
    let margins: Vec<Result<f64>> = indices
        .par_iter()
        .map(|&code| {
            let mut c = code;
            let mut idx = Vec::with_capacity(k + 1);
            for _ in 0..=k {
                idx.push((c % n as u64) as usize);
                c /= n as u64;
            }
            idx.reverse();
            let mut worst = 0.0_f64;
            for j in 1..=k {
                worst = worst.max(pair_ok(idx[j - 1], idx[j])?);
            }
            Ok(worst)
        })
        .collect();
    let mut regular = 0;
    let mut worst_margin = 0.0_f64;
    for m in margins {
        let m = m?;
        worst_margin = worst_margin.max(m);
        if m <= 1.0 {
            regular += 1;
        }
    }
    let sampled = indices.len();
    Ok(RegularityFraction {
        fraction: regular as f64 / sampled as f64,
        sampled,
        regular,
        exhaustive,
        worst_margin,
    })
}

/// Cap on enumerated triples.
pub const TRIPLE_CAP: u64 = 100_000_000;

/// `τ^{3δ} · #{(b, c, d) : a ⇝ (b, c) ⇝ d, |γ'_{a'b'}(x_d) − γ'_{a'c'}(x_d)| ≤ τ²σ}`.
pub fn triple_count_statistic(
    z: &Partition,
    a: &Word,
    sigma: f64,
    delta: f64,
) -> Result<f64> {
    let counts = triple_counts(z, a, &[sigma])?;
    Ok(counts[0] as f64 * z.tau.powf(3.0 * delta))
}

/// Raw triple counts for several `σ` at once.
pub fn triple_counts(z: &Partition, a: &Word, sigmas: &[f64]) -> Result<Vec<u64>> {
    let tau = z.tau;
    if sigmas.iter().any(|&s| !(s >= tau * (1.0 - 1e-12) && s <= 1.0)) {
        return Err(Error::Domain("sigma must lie in [tau, 1]".into()));
    }
    let ia = cell_index(z, a)?;
    let pa = z.cells[ia].prefix_map;
    let last_a = a.last().ok_or(Error::EmptyWord)?;
    let bs: Vec<usize> = (0..z.len())
        .filter(|&i| z.cells[i].first() == last_a)
        .collect();
    let mut est: u64 = 0;
    for d in &z.cells {
        let m = bs.iter().filter(|&&b| z.cells[b].last() == d.first()).count() as u64;
        est += m * m;
    }
    if est > TRIPLE_CAP {
        return Err(Error::Budget {
            what: "triple count".into(),
            cap: TRIPLE_CAP as usize,
        });
    }
    let maps: Vec<_> = bs.iter().map(|&b| pa.compose(&z.cells[b].prefix_map)).collect();
    let t2 = tau * tau;
    let per_d: Vec<Result<Vec<u64>>> = z
        .cells
        .par_iter()
        .map(|d| {
            let x = d.center();
            let mut vals = Vec::new();
            for (k, &b) in bs.iter().enumerate() {
                if z.cells[b].last() == d.first() {
                    vals.push(maps[k].derivative(x)?);
                }
            }
            vals.sort_by(f64::total_cmp);
            Ok(sigmas.iter().map(|&s| pair_count_sorted(&vals, t2 * s)).collect())
        })
        .collect();
    let mut out = vec![0u64; sigmas.len()];
    for r in per_d {
        for (o, c) in out.iter_mut().zip(r?) {
            *o += c;
        }
    }
    Ok(out)
}
