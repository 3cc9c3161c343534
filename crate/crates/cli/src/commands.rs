use std::fmt;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use schottky_lab::fit::{log_grid, ScanResult};
use schottky_lab::fup::{fup_scan, hyperbolic_phase, lebesgue_scan};
use schottky_lab::measure::{
    build_measure, estimate_delta, estimate_delta_with, poincare_series_delta, regularity_scan,
    spectral_radius,
};
use schottky_lab::oscillatory::{
    epsilon1_formula, exp_sum, fourier_scan, j_tau_window, regular_sequence_fraction, tau_for_xi,
    zeta_values, FourierOptions, PhasePair,
};
use schottky_lab::{Error, GroupConfig, Partition, SchottkyData, Word};

use crate::output::{num, Sink};
use crate::{Command, Common, HGrid, XiGrid};

#[derive(Debug)]
pub enum Failure {
    /// A check ran and failed.
    Validation(String),
    Usage(String),
    Io(String),
    MissingDelta(String),
    Compute(Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Compute(Error::Budget { .. } | Error::Convergence { .. } | Error::Refine(_)) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(s) => write!(f, "check failed: {s}"),
            Failure::Usage(s) => write!(f, "{s}"),
            Failure::Io(s) => write!(f, "i/o: {s}"),
            Failure::MissingDelta(s) => write!(f, "{s}"),
            Failure::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaReport {
    pub group: String,
    pub config: GroupConfig,
    pub tau_grid: Vec<f64>,
    pub partition_sizes: Vec<usize>,
    pub deltas: Vec<f64>,
    /// `(s, λ(s))` on the finest partition.
    pub lambda_samples: Vec<(f64, f64)>,
    pub delta_hat: f64,
    pub oracle_delta: f64,
    pub oracle_len: usize,
    /// Successive gaps `|δ(τ/2) − δ(τ)|`.
    pub residuals: Vec<f64>,
    pub lambda_minus_one: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
struct FitSummary {
    exponent_hat: f64,
    r2: f64,
    window: (f64, f64),
    window_ok: bool,
    decades: f64,
}

impl From<&ScanResult> for FitSummary {
    fn from(s: &ScanResult) -> Self {
        FitSummary {
            exponent_hat: s.exponent_hat,
            r2: s.r2,
            window: s.window,
            window_ok: s.window_ok,
            decades: s.decades(),
        }
    }
}

struct Group {
    name: String,
    data: SchottkyData,
}

fn load_group(spec: &str) -> Result<Group, Failure> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{spec}: {e}")))?;
        let cfg = GroupConfig::from_json(&text).map_err(|e| Failure::Validation(e.to_string()))?;
        let data = SchottkyData::from_config(&cfg).map_err(|e| Failure::Validation(e.to_string()))?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(Group { name, data });
    }
    match schottky_lab::examples::shipped(spec) {
        Some(d) => Ok(Group {
            name: spec.to_string(),
            data: d?,
        }),
        None => Err(Failure::Usage(format!("{spec:?} is neither a config file nor a shipped group"))),
    }
}

fn grid(lo: f64, hi: f64, n: usize, what: &str) -> Result<Vec<f64>, Failure> {
    if n < 2 || !(lo > 0.0 && hi > lo) {
        return Err(Failure::Usage(format!("{what} grid needs 0 < min < max and at least 2 points")));
    }
    Ok(log_grid(lo, hi, n))
}

fn delta_for(common: &Common, g: &Group) -> Result<f64, Failure> {
    if common.recompute {
        return Ok(estimate_delta(&g.data, 1e-2, 1e-7)?.delta);
    }
    let path = common.out.join("delta.json");
    let text = std::fs::read_to_string(&path).map_err(|_| {
        Failure::MissingDelta(format!(
            "no delta report at {}; run `schottky-lab delta` first or pass --recompute",
            path.display()
        ))
    })?;
    let rep: DeltaReport = serde_json::from_str(&text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    if rep.config != g.data.to_config() {
        return Err(Failure::MissingDelta(format!(
            "delta report at {} is for group {:?}; rerun `schottky-lab delta` or pass --recompute",
            path.display(),
            rep.group
        )));
    }
    Ok(rep.delta_hat)
}

fn scan_rows(s: &ScanResult) -> Vec<Vec<String>> {
    s.points
        .iter()
        .map(|&(p, v)| vec![num(p), num(v), num(s.predicted(p))])
        .collect()
}

pub fn run(cmd: &Command, common: &Common) -> Result<(), Failure> {
    let start = Instant::now();
    let g = load_group(&common.group)?;
    let mut sink = Sink::new(&common.out)?;
    let name = match cmd {
        Command::Validate => validate(&g, &mut sink)?,
        Command::Partition { tau } => partition(&g, *tau, common, &mut sink)?,
        Command::VerifyPartition { input, tau } => {
            let p = input.clone().unwrap_or_else(|| sink.path("partition.csv"));
            verify_partition(&g, &p, *tau, &mut sink)?
        }
        Command::Delta { tau, tol, oracle_len } => delta(&g, *tau, *tol, *oracle_len, common, &mut sink)?,
        Command::Measure { tau, samples } => measure(&g, *tau, *samples, common, &mut sink)?,
        Command::Fourier { grid, tau } => fourier(&g, grid, *tau, common, &mut sink)?,
        Command::Expsum { tau, k, epsilon2, xi_points, samples } => {
            expsum(&g, *tau, *k, *epsilon2, *xi_points, *samples, common, &mut sink)?
        }
        Command::Fup { grid, tol } => fup(&g, grid, *tol, common, &mut sink)?,
        Command::LebesgueFup { grid, rho, tol } => lebesgue(&g, grid, *rho, *tol, common, &mut sink)?,
        Command::Report => report(&mut sink)?,
    };
    let inputs = json!({
        "group": g.name,
        "config": g.data.to_config(),
        "command": cmd,
        "budget": common.budget,
        "recompute": common.recompute,
    });
    sink.manifest(name, inputs, common.seed, start.elapsed().as_secs_f64())?;
    Ok(())
}

fn validate(g: &Group, sink: &mut Sink) -> Result<&'static str, Failure> {
    let rep = g.data.validate();
    sink.json("validation.json", &rep)?;
    for c in &rep.checks {
        println!("{:<22} {} defect {:.3e}", c.name, if c.passed { "ok" } else { "FAIL" }, c.defect);
    }
    if !rep.passed {
        return Err(Failure::Validation(format!("failing axioms: {}", rep.failing().join(", "))));
    }
    Ok("validate")
}

fn partition(g: &Group, tau: f64, common: &Common, sink: &mut Sink) -> Result<&'static str, Failure> {
    let z = g.data.build_partition(tau, common.budget)?;
    let rows = z
        .cells
        .iter()
        .map(|c| {
            Ok(vec![
                c.word.to_string(),
                num(c.interval.lo),
                num(c.interval.hi),
                num(g.data.interval_size(&c.word)?),
            ])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    sink.csv("partition.csv", &["word", "lo", "hi", "size"], &rows)?;
    println!("Z({tau}) has {} members, longest word {}", z.len(), z.max_word_len());
    Ok("partition")
}

#[derive(Debug, Serialize)]
struct PartitionVerdict {
    rows: usize,
    tau: f64,
    endpoint_mismatches: usize,
    size_violations: usize,
    is_partition: bool,
    passed: bool,
}

fn verify_partition(g: &Group, input: &Path, tau: f64, sink: &mut Sink) -> Result<&'static str, Failure> {
    let mut rdr = csv::Reader::from_path(input).map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?;
    let mut words = Vec::new();
    let mut mismatches = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Failure::Io(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Failure::Validation(format!("short row {rec:?}")));
        let w: Word = field(0)?.parse().map_err(|e: Error| Failure::Validation(e.to_string()))?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Failure::Validation(format!("{s:?}: {e}")));
        let (lo, hi) = (parse(field(1)?)?, parse(field(2)?)?);
        let iv = g.data.interval_of(&w).map_err(|e| Failure::Validation(format!("{w}: {e}")))?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        if !close(lo, iv.lo) || !close(hi, iv.hi) {
            mismatches += 1;
        }
        words.push(w);
    }
    let z = Partition::from_words(&g.data, tau, &words)?;
    let check = z.verify(&g.data)?;
    let verdict = PartitionVerdict {
        rows: words.len(),
        tau,
        endpoint_mismatches: mismatches,
        size_violations: check.size_violations,
        is_partition: check.is_partition,
        passed: check.ok() && mismatches == 0 && !words.is_empty(),
    };
    sink.json("verify_partition.json", &verdict)?;
    println!(
        "{} rows: {} endpoint mismatches, {} size violations, partition {}",
        verdict.rows, mismatches, verdict.size_violations, verdict.is_partition
    );
    if !verdict.passed {
        return Err(Failure::Validation(format!("{} is not Z({tau})", input.display())));
    }
    Ok("verify-partition")
}

fn delta(
    g: &Group,
    tau: f64,
    tol: f64,
    oracle_len: Option<usize>,
    common: &Common,
    sink: &mut Sink,
) -> Result<&'static str, Failure> {
    let est = estimate_delta_with(&g.data, tau, tol, 30, common.budget)?;
    let z = g.data.build_partition(est.tau, common.budget)?;
    let lambda_samples = (0..=10)
        .map(|i| {
            let s = i as f64 / 10.0;
            Ok((s, spectral_radius(&g.data, &z, s)?))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let len = oracle_len.unwrap_or(if g.data.r() == 2 { 12 } else { 9 });
    let oracle = poincare_series_delta(&g.data, len)?;
    let deltas: Vec<f64> = est.history.iter().map(|h| h.delta).collect();
    let rep = DeltaReport {
        group: g.name.clone(),
        config: g.data.to_config(),
        tau_grid: est.history.iter().map(|h| h.tau).collect(),
        partition_sizes: est.history.iter().map(|h| h.partition_size).collect(),
        residuals: deltas.windows(2).map(|w| (w[1] - w[0]).abs()).collect(),
        deltas,
        lambda_samples,
        delta_hat: est.delta,
        oracle_delta: oracle.delta,
        oracle_len: len,
        lambda_minus_one: est.history.last().map(|h| h.lambda_minus_one).unwrap_or(0.0),
        converged: est.converged,
    };
    sink.json("delta.json", &rep)?;
    println!(
        "δ̂ = {:.10} at τ = {:.3e} (oracle {:.10}, |Δ| = {:.2e})",
        rep.delta_hat,
        est.tau,
        rep.oracle_delta,
        (rep.delta_hat - rep.oracle_delta).abs()
    );
    Ok("delta")
}

fn measure(g: &Group, tau: f64, samples: usize, common: &Common, sink: &mut Sink) -> Result<&'static str, Failure> {
    let d = delta_for(common, g)?;
    let mu = build_measure(&g.data, tau, d)?;
    let rows: Vec<Vec<String>> = mu
        .atoms()
        .iter()
        .map(|a| vec![a.word.to_string(), num(a.center), num(a.mass)])
        .collect();
    sink.csv("measure.csv", &["word", "center", "mass"], &rows)?;
    let reg = regularity_scan(&mu, samples, common.seed);
    sink.json("regularity.json", &reg)?;
    println!(
        "{} atoms; μ(I)/|I|^δ upper ≤ {:.4}, centred ≥ {:.4}",
        mu.len(),
        reg.upper.max,
        reg.lower.min
    );
    Ok("measure")
}

fn fourier(g: &Group, xi: &XiGrid, tau: Option<f64>, common: &Common, sink: &mut Sink) -> Result<&'static str, Failure> {
    let d = delta_for(common, g)?;
    let grid = grid(xi.xi_min, xi.xi_max, xi.xi_points, "xi")?;
    let opts = FourierOptions::default();
    // the envelope samples up to 2ξ; φ' ≡ 1
    let tau = tau.unwrap_or_else(|| tau_for_xi(2.0 * xi.xi_max, 1.0));
    let mu = build_measure(&g.data, tau, d)?;
    let s = fourier_scan(&mu, &PhasePair::linear(4.0), &grid, &opts)?;
    sink.csv("fourier.csv", &["parameter", "value", "predicted"], &scan_rows(&s))?;
    let fit = FitSummary::from(&s);
    sink.json(
        "fourier_fit.json",
        &json!({
            "fit": fit,
            "epsilon1_hat": -s.exponent_hat,
            "tau": tau,
            "atoms": mu.len(),
            "delta_hat": d,
            "envelope_samples": opts.envelope_samples,
        }),
    )?;
    println!("ε̂₁ = {:.4} (r² {:.3}, window {:?})", -s.exponent_hat, s.r2, s.window);
    Ok("fourier")
}

#[allow(clippy::too_many_arguments)]
fn expsum(
    g: &Group,
    tau: f64,
    k: usize,
    epsilon2: Option<f64>,
    points: usize,
    samples: usize,
    common: &Common,
    sink: &mut Sink,
) -> Result<&'static str, Failure> {
    if k == 0 {
        return Err(Failure::Usage("k must be at least 1".into()));
    }
    let d = delta_for(common, g)?;
    let z = g.data.build_partition(tau, common.budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let mut found = None;
    for _ in 0..10_000 {
        let seq: Vec<Word> = (0..=k).map(|_| z.cells[rng.gen_range(0..z.len())].word.clone()).collect();
        let zetas: Result<Vec<Vec<f64>>, Error> = (1..=k)
            .map(|j| Ok(zeta_values(&z, &seq, j)?.into_iter().map(|t| t.1).collect()))
            .collect();
        if let Ok(zs) = zetas {
            found = Some((seq, zs));
            break;
        }
    }
    let (seq, zetas) = found.ok_or(Error::NoAdmissibleWords)?;
    let n_z = tau.powf(-d);
    let window = j_tau_window(tau, 10.0);
    let etas = grid(window.lo, window.hi, points, "eta")?;
    let points = etas
        .iter()
        .map(|&eta| Ok((eta, exp_sum(&zetas, eta, n_z)?.norm())))
        .collect::<Result<Vec<_>, Error>>()?;
    let s = schottky_lab::fit::fit_power_law(&points);
    sink.csv("expsum.csv", &["parameter", "value", "predicted"], &scan_rows(&s))?;
    let mut out = json!({
        "sequence": seq,
        "k": k,
        "tau": tau,
        "window": [window.lo, window.hi],
        "fit": FitSummary::from(&s),
        "delta_hat": d,
    });
    if let Some(e2) = epsilon2 {
        let frac = regular_sequence_fraction(&z, k, d, e2, samples, common.seed)?;
        out["epsilon2"] = json!(e2);
        out["epsilon1_formula"] = json!(epsilon1_formula(e2, k, d)?);
        out["regular_fraction"] = serde_json::to_value(&frac).map_err(|e| Failure::Io(e.to_string()))?;
        println!("regular fraction {:.4} of {} sequences", frac.fraction, frac.sampled);
    }
    sink.json("expsum.json", &out)?;
    println!("|S_k(η)| fit exponent {:.4} over η ∈ [{:.2}, {:.2}]", s.exponent_hat, window.lo, window.hi);
    Ok("expsum")
}

fn fup(g: &Group, h: &HGrid, tol: f64, common: &Common, sink: &mut Sink) -> Result<&'static str, Failure> {
    let d = delta_for(common, g)?;
    let hs = grid(h.h_min, h.h_max, h.h_points, "h")?;
    let ks = hyperbolic_phase().for_group(&g.data)?;
    let scan = fup_scan(&g.data, d, &ks, &hs, tol)?;
    let rows: Vec<Vec<String>> = scan
        .points
        .iter()
        .map(|p| {
            vec![
                num(p.h),
                num(p.norm),
                num(scan.fit.predicted(p.h)),
                num(p.schur_bound),
                num(p.trivial_bound),
                num(p.tau),
                p.rows.to_string(),
                p.cols.to_string(),
            ]
        })
        .collect();
    sink.csv(
        "fup.csv",
        &["parameter", "value", "predicted", "schur_bound", "trivial_bound", "tau", "rows", "cols"],
        &rows,
    )?;
    sink.json(
        "fup.json",
        &json!({
            "h_grid": hs,
            "norms": scan.points.iter().map(|p| p.norm).collect::<Vec<_>>(),
            "beta_hat": scan.fit.exponent_hat,
            "schur_bounds": scan.points.iter().map(|p| p.schur_bound).collect::<Vec<_>>(),
            "delta_hat": d,
            "rho": Value::Null,
            "fit": FitSummary::from(&scan.fit),
            "c_bound": ks.c_bound,
        }),
    )?;
    println!("‖B(h)‖ ~ h^{:.4} (r² {:.3})", scan.fit.exponent_hat, scan.fit.r2);
    Ok("fup")
}

fn lebesgue(g: &Group, h: &HGrid, rho: f64, tol: f64, common: &Common, sink: &mut Sink) -> Result<&'static str, Failure> {
    let d = delta_for(common, g)?;
    let hs = grid(h.h_min, h.h_max, h.h_points, "h")?;
    let ks = hyperbolic_phase().for_group(&g.data)?;
    let scan = lebesgue_scan(&g.data, &ks, &hs, rho, tol)?;
    let rows: Vec<Vec<String>> = scan
        .points
        .iter()
        .map(|p| {
            vec![
                num(p.h),
                num(p.norm),
                num(scan.fit.predicted(p.h)),
                num(p.step),
                p.n_x.to_string(),
                p.n_y.to_string(),
            ]
        })
        .collect();
    sink.csv("lebesgue.csv", &["parameter", "value", "predicted", "step", "n_x", "n_y"], &rows)?;
    let floor = (0.5 - d) - (1.0 - d) * (1.0 - rho);
    sink.json(
        "lebesgue.json",
        &json!({
            "h_grid": hs,
            "norms": scan.points.iter().map(|p| p.norm).collect::<Vec<_>>(),
            "beta_hat": scan.fit.exponent_hat,
            "schur_bounds": Value::Null,
            "delta_hat": d,
            "rho": rho,
            "trivial_floor": floor,
            "fit": FitSummary::from(&scan.fit),
        }),
    )?;
    println!("β̂ = {:.4} (floor (1/2−δ) − (1−δ)(1−ρ) = {floor:.4})", scan.fit.exponent_hat);
    Ok("lebesgue-fup")
}

const REPORTS: [&str; 8] = [
    "validation.json",
    "verify_partition.json",
    "delta.json",
    "regularity.json",
    "fourier_fit.json",
    "expsum.json",
    "fup.json",
    "lebesgue.json",
];

fn report(sink: &mut Sink) -> Result<&'static str, Failure> {
    let mut all = serde_json::Map::new();
    for name in REPORTS {
        let p = sink.path(name);
        if let Ok(text) = std::fs::read_to_string(&p) {
            let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            all.insert(name.trim_end_matches(".json").to_string(), v);
        }
    }
    if all.is_empty() {
        return Err(Failure::Usage("no reports found in the output directory".into()));
    }
    let pick = |k: &str, f: &str| all.get(k).and_then(|v| v.get(f)).cloned();
    let summary = json!({
        "validation_passed": pick("validation", "passed"),
        "delta_hat": pick("delta", "delta_hat"),
        "oracle_delta": pick("delta", "oracle_delta"),
        "epsilon1_hat": pick("fourier_fit", "epsilon1_hat"),
        "fup_exponent": pick("fup", "beta_hat"),
        "lebesgue_beta_hat": pick("lebesgue", "beta_hat"),
    });
    for (k, v) in summary.as_object().expect("object") {
        if !v.is_null() {
            println!("{k:<20} {v}");
        }
    }
    sink.json("report.json", &json!({ "summary": summary, "reports": all }))?;
    Ok("report")
}
