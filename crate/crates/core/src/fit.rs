//! Log-log power-law fits over the best decade window.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// `(parameter, value)` samples in increasing parameter order.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of `log value` against `log parameter`.
    pub exponent_hat: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Parameter range used by the fit.
    pub window: (f64, f64),
    /// True when the window meets the span and `r²` requirements.
    pub window_ok: bool,
}

impl ScanResult {
    /// Fitted value `exp(intercept) · parameter^exponent_hat`.
    pub fn predicted(&self, parameter: f64) -> f64 {
        (self.intercept + self.exponent_hat * parameter.ln()).exp()
    }

    pub fn decades(&self) -> f64 {
        (self.window.1 / self.window.0).log10()
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, r²)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (b, a, r2)
}

fn clean(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .collect();
    p.sort_by(|a, b| a.0.total_cmp(&b.0));
    p
}

fn fit_slice(p: &[(f64, f64)], window_ok: bool, all: &[(f64, f64)]) -> ScanResult {
    let xs: Vec<f64> = p.iter().map(|q| q.0.ln()).collect();
    let ys: Vec<f64> = p.iter().map(|q| q.1.ln()).collect();
    let (b, a, r2) = least_squares(&xs, &ys);
    ScanResult {
        points: all.to_vec(),
        exponent_hat: b,
        intercept: a,
        r2,
        window: (p[0].0, p[p.len() - 1].0),
        window_ok,
    }
}

/// Fit over every positive sample.
pub fn fit_power_law(points: &[(f64, f64)]) -> ScanResult {
    let p = clean(points);
    if p.len() < 2 {
        return ScanResult {
            points: points.to_vec(),
            exponent_hat: f64::NAN,
            intercept: f64::NAN,
            r2: 0.0,
            window: (f64::NAN, f64::NAN),
            window_ok: false,
        };
    }
    fit_slice(&p, true, &p)
}

/// Fit over the widest contiguous window spanning at least `min_decades`
/// with `r² ≥ r2_min`; ties go to more points, then higher `r²`. Falls back
/// to the full range (with `window_ok = false`) when no window qualifies.
pub fn fit_power_law_window(points: &[(f64, f64)], min_decades: f64, r2_min: f64) -> ScanResult {
    let p = clean(points);
    if p.len() < 3 {
        let mut r = fit_power_law(points);
        r.window_ok = false;
        return r;
    }
    let mut best: Option<(f64, usize, f64, usize, usize)> = None;
    for i in 0..p.len() {
        for j in (i + 2)..p.len() {
            let span = (p[j].0 / p[i].0).log10();
            if span + 1e-12 < min_decades {
                continue;
            }
            let s = &p[i..=j];
            let xs: Vec<f64> = s.iter().map(|q| q.0.ln()).collect();
            let ys: Vec<f64> = s.iter().map(|q| q.1.ln()).collect();
            let (_, _, r2) = least_squares(&xs, &ys);
            if r2 < r2_min {
                continue;
            }
            let key = (span, j - i + 1, r2);
            let better = match best {
                None => true,
                Some((bs, bn, br, _, _)) => {
                    key.0 > bs + 1e-12
                        || ((key.0 - bs).abs() <= 1e-12
                            && (key.1 > bn || (key.1 == bn && key.2 > br)))
                }
            };
            if better {
                best = Some((key.0, key.1, key.2, i, j));
            }
        }
    }
    match best {
        Some((_, _, _, i, j)) => fit_slice(&p[i..=j], true, &p),
        None => fit_slice(&p, false, &p),
    }
}

/// `n ≥ 2` log-spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = log_grid(1.0, 1e3, 10)
            .into_iter()
            .map(|x| (x, 3.0 * x.powf(-0.25)))
            .collect();
        let r = fit_power_law_window(&pts, 1.0, 0.8);
        assert!((r.exponent_hat + 0.25).abs() < 1e-12);
        assert!((r.r2 - 1.0).abs() < 1e-12);
        assert!(r.window_ok);
        assert!((r.predicted(10.0) - 3.0 * 10f64.powf(-0.25)).abs() < 1e-12);
    }

    #[test]
    fn window_skips_noisy_head() {
        let mut pts: Vec<(f64, f64)> = log_grid(10.0, 1e4, 31)
            .into_iter()
            .map(|x| (x, x.powf(-0.5)))
            .collect();
        for (k, p) in pts.iter_mut().take(6).enumerate() {
            p.1 *= if k % 2 == 0 { 20.0 } else { 0.05 };
        }
        let r = fit_power_law_window(&pts, 1.0, 0.99);
        assert!((r.exponent_hat + 0.5).abs() < 1e-9);
        assert!(r.window.0 > 10.0);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(10.0, 1e4, 7);
        assert_eq!(g[0], 10.0);
        assert_eq!(g[6], 1e4);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
