mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schottky_lab::measure::estimate_delta;
use schottky_lab::schottky::{derivative_bracket, GroupConfig, DEFAULT_BUDGET};
use schottky_lab::{Error, Interval, MobiusTransform, SchottkyData, Word};

fn config_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

type M = [[f64; 2]; 2];

fn mat_mul(x: &M, y: &M) -> M {
    [
        [x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
        [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]],
    ]
}

/// `I_a` from raw (unnormalized) matrix products and endpoint images.
fn oracle_interval(cfg: &GroupConfig, w: &Word) -> (f64, f64) {
    let mut m: M = [[1.0, 0.0], [0.0, 1.0]];
    for l in w.prime().letters() {
        m = mat_mul(&m, &cfg.generators[l.slot()]);
    }
    let [lo, hi] = cfg.intervals[w.last().unwrap().slot()];
    let f = |x: f64| (m[0][0] * x + m[0][1]) / (m[1][0] * x + m[1][1]);
    let (p, q) = (f(lo), f(hi));
    (p.min(q), p.max(q))
}

#[test]
fn shipped_configs_validate_and_match_disks() {
    for (name, data) in common::shipped() {
        let text = std::fs::read_to_string(config_dir().join(format!("{name}.json"))).unwrap();
        let loaded = SchottkyData::from_json(&text).unwrap();
        assert_eq!(loaded.r(), data.r());
        assert_eq!(loaded.intervals(), data.intervals(), "{name} config is stale");
        for (g, h) in loaded.generators().iter().zip(data.generators()) {
            assert!(g.max_entry_diff(h) < 1e-14, "{name} config is stale");
        }
        let rep = loaded.validate();
        assert!(rep.passed, "{name}: {:?}", rep.failing());
        assert!(rep.worst_defect() < 1e-9);
    }
}

#[test]
fn half_generator_configs_derive_inverses() {
    let data = common::asymmetric();
    let mut cfg = data.to_config();
    cfg.generators.truncate(2);
    let rebuilt = SchottkyData::from_config(&cfg).unwrap();
    for (g, h) in rebuilt.generators().iter().zip(data.generators()) {
        assert!(g.max_entry_diff(h) < 1e-12);
    }
    cfg.generators.truncate(1);
    assert!(matches!(SchottkyData::from_config(&cfg), Err(Error::Config(_))));
}

#[test]
fn mutated_configs_fail_the_right_axiom() {
    for (name, data) in common::shipped() {
        let r = data.r();
        let mut cfg = data.to_config();
        cfg.generators[r][0][0] += 1e-3;
        let rep = SchottkyData::from_config(&cfg).unwrap().validate();
        assert!(!rep.passed);
        assert!(rep.failing().contains(&"inverse_pairs"), "{name}");

        let mut cfg = data.to_config();
        cfg.intervals[1][0] = cfg.intervals[0][1] - 0.05;
        let rep = SchottkyData::from_config(&cfg).unwrap().validate();
        assert!(rep.failing().contains(&"disjoint_intervals"), "{name}");

        let mut cfg = data.to_config();
        cfg.intervals[1][0] = cfg.intervals[0][1];
        let rep = SchottkyData::from_config(&cfg).unwrap().validate();
        assert!(rep.failing().contains(&"disjoint_intervals"), "tangency admitted for {name}");
    }
}

#[test]
fn group_element_is_a_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (_, data) in common::shipped() {
        let r = data.r();
        assert_eq!(data.group_element(&Word::empty()), MobiusTransform::IDENTITY);
        for l in data.alphabet().letters() {
            let w = Word::from_letters(vec![l]);
            assert_eq!(data.group_element(&w), data.generator(l));
        }
        for _ in 0..500 {
            let n = rng.gen_range(1..6);
            let a = common::random_word(&mut rng, r, n);
            let n = rng.gen_range(1..6);
            let b = common::random_word(&mut rng, r, n);
            if a.last().unwrap().bar(r) == b.first().unwrap() {
                continue;
            }
            let ab = data.group_element(&a.concat(&b));
            let prod = data.group_element(&a).compose(&data.group_element(&b));
            let scale = 1.0 + ab.max_entry_diff(&MobiusTransform::IDENTITY);
            assert!(ab.projective_diff(&prod) < 1e-9 * scale);
            let inv = data.group_element(&a.bar(r));
            let ga = data.group_element(&a);
            assert!(inv.projective_diff(&ga.inverse()) < 1e-9 * (1.0 + ga.max_entry_diff(&MobiusTransform::IDENTITY)));
        }
    }
}

#[test]
fn interval_of_matches_raw_product_oracle() {
    for (_, data) in common::shipped() {
        let cfg = data.to_config();
        for l in data.alphabet().letters() {
            assert_eq!(data.interval_of(&Word::from_letters(vec![l])).unwrap(), data.interval(l));
        }
        for w in data.alphabet().words_of_length(3) {
            let iv = data.interval_of(&w).unwrap();
            let (lo, hi) = oracle_interval(&cfg, &w);
            assert!((iv.lo - lo).abs() < 1e-12 && (iv.hi - hi).abs() < 1e-12);
            assert!((iv.size() - (hi - lo)).abs() < 1e-12 * iv.size().max(1e-3));
            assert!((data.interval_size(&w).unwrap() - iv.size()).abs() < 1e-10 * iv.size());
        }
    }
}

fn check_nesting(data: &SchottkyData, w: &Word) {
    let iv = data.interval_of(w).unwrap();
    let parent = data.interval_of(&w.prime()).unwrap();
    // rounding in the endpoints grows with the number of factors
    let slack = 8.0 * w.len() as f64 * f64::EPSILON * parent.lo.abs().max(parent.hi.abs());
    assert!(parent.lo <= iv.lo + slack && iv.hi <= parent.hi + slack, "{w} not nested");
    assert!(data.interval_size(w).unwrap() < data.interval_size(&w.prime()).unwrap());
}

#[test]
fn nesting_contraction_and_disjointness_exhaustive() {
    for (_, data) in common::shipped() {
        for n in 1..=5 {
            let words = data.alphabet().words_of_length(n);
            let mut ivs: Vec<Interval> = words.iter().map(|w| data.interval_of(w).unwrap()).collect();
            if n > 1 {
                words.iter().for_each(|w| check_nesting(&data, w));
            }
            ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            assert!(ivs.windows(2).all(|p| p[0].hi < p[1].lo), "overlap at depth {n}");
        }
    }
}

#[test]
fn nesting_and_separation_on_random_deep_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (_, data) in common::shipped() {
        let r = data.r();
        let bands = data.interval_bands(6, 2000, 9).unwrap();
        let mut resolved = 0;
        for _ in 0..10_000 {
            let n = rng.gen_range(6..=10);
            let w = common::random_word(&mut rng, r, n);
            check_nesting(&data, &w);
            // sibling: same prefix, different last letter
            let last = w.last().unwrap();
            let other = data
                .alphabet()
                .letters()
                .find(|&l| l != last && w.len() > 1 && l != w.letters()[w.len() - 2].bar(r))
                .unwrap();
            let sib = w.prime().child(other);
            let (a, b) = (data.interval_of(&w).unwrap(), data.interval_of(&sib).unwrap());
            // endpoints only resolve intervals well above their ulp
            if data.interval_size(&w).unwrap().min(data.interval_size(&sib).unwrap()) < 1e-12 {
                continue;
            }
            resolved += 1;
            assert!(!a.intersects(&b));
            let sep = a.distance(&b) / data.interval_size(&w).unwrap().max(data.interval_size(&sib).unwrap());
            assert!(sep >= 0.5 * bands.separation.min, "separation {sep} below band");
        }
        assert!(resolved > 5_000, "only {resolved} resolved pairs");
    }
}

#[test]
fn interval_bands_are_bounded_and_stable() {
    for (name, data) in common::shipped() {
        let shallow = data.interval_bands(6, 10_000, 1).unwrap();
        let deep = data.interval_bands(9, 10_000, 2).unwrap();
        for b in [&shallow, &deep] {
            assert!(b.parent_child.is_bounded_positive() && b.parent_child.max < 1.0);
            assert!(b.concatenation.is_bounded_positive());
            assert!(b.reversal.is_bounded_positive());
            assert!(b.separation.min > 0.0);
        }
        let close = |x: f64, y: f64| (x / y).max(y / x) < 1.5;
        assert!(close(shallow.parent_child.min, deep.parent_child.min), "{name}");
        assert!(close(shallow.concatenation.min, deep.concatenation.min), "{name}");
        assert!(close(shallow.concatenation.max, deep.concatenation.max), "{name}");
        assert!(close(shallow.reversal.min, deep.reversal.min), "{name}");
        assert!(close(shallow.reversal.max, deep.reversal.max), "{name}");
        assert!(close(shallow.separation.min, deep.separation.min), "{name}");
    }
}

#[test]
fn partition_examples_and_invariants() {
    for (name, data) in common::shipped() {
        let z = data.build_partition(data.max_base_size(), DEFAULT_BUDGET).unwrap();
        assert_eq!(z.len(), 2 * data.r());
        assert!(z.words().all(|w| w.len() == 1));
        let pc_min = data.interval_bands(8, 1, 0).unwrap().parent_child.min;
        for tau in [1e-1, 3e-2, 1e-2, 1e-3, 1e-4] {
            let z = data.build_partition(tau, DEFAULT_BUDGET).unwrap();
            assert!(z.verify(&data).unwrap().ok(), "{name} τ={tau}");
            for c in &z.cells {
                let s = data.interval_size(&c.word).unwrap();
                assert!(s <= tau && s >= pc_min * tau * (1.0 - 1e-9));
            }
        }
        assert!(matches!(data.build_partition(1e-6, 100), Err(Error::Budget { .. })));
        assert!(data.build_partition(0.0, 100).is_err());
        assert!(data.build_partition(1.5, 100).is_err());
    }
}

#[test]
fn partition_has_unique_prefixes() {
    for (_, data) in common::shipped() {
        let z = data.build_partition(0.03, DEFAULT_BUDGET).unwrap();
        let members: BTreeSet<Word> = z.words().cloned().collect();
        let n = z.max_word_len();
        for w in data.alphabet().words_of_length(n) {
            let hits = (1..=n)
                .filter(|&k| members.contains(&Word::from_letters(w.letters()[..k].to_vec())))
                .count();
            assert_eq!(hits, 1, "{w}");
        }
    }
}

#[test]
fn partition_count_scales_like_tau_to_delta() {
    for (name, data) in common::shipped() {
        let delta = estimate_delta(&data, 1e-2, 1e-6).unwrap().delta;
        let scaled: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&t| data.build_partition(t, DEFAULT_BUDGET).unwrap().len() as f64 * t.powf(delta))
            .collect();
        let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo <= 10.0, "{name}: {scaled:?}");
    }
}

/// Upper bound on `|α(γ_{a'}, I_{a_n})|`: the pole lies in a base interval
/// other than `I_{a_n}`.
fn alpha_bound(data: &SchottkyData) -> f64 {
    let ivs = data.intervals();
    let mut worst: f64 = 0.0;
    for (i, a) in ivs.iter().enumerate() {
        for (j, b) in ivs.iter().enumerate() {
            if i != j {
                worst = worst.max((1.0 + a.size() / a.distance(b)).ln());
            }
        }
    }
    worst
}

#[test]
fn derivative_bracket_holds() {
    for (name, data) in common::shipped() {
        let alpha = alpha_bound(&data);
        let sizes: Vec<f64> = data.intervals().iter().map(|i| i.size()).collect();
        let smin = sizes.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = sizes.iter().cloned().fold(0.0, f64::max);
        let pc_min = data.interval_bands(8, 1, 0).unwrap().parent_child.min;
        let lo = (-alpha).exp() * pc_min / smax;
        let hi = alpha.exp() / smin;
        for tau in [1e-1, 1e-2, 1e-3, 1e-4] {
            let z = data.build_partition(tau, DEFAULT_BUDGET).unwrap();
            let b = derivative_bracket(&z, &data).unwrap();
            assert!(b.min >= lo && b.max <= hi, "{name} τ={tau}: {b:?} vs [{lo}, {hi}]");
        }
    }
}

#[test]
fn words_intersecting_examples() {
    for (_, data) in common::shipped() {
        let far = Interval::new(100.0, 101.0).unwrap();
        assert!(data.words_intersecting(&far, 1e-4, 1.0, DEFAULT_BUDGET).unwrap().is_empty());
        let first = data.intervals()[0];
        let got: BTreeSet<Word> = data
            .words_intersecting(&first, 1e-3, 10.0, DEFAULT_BUDGET)
            .unwrap()
            .into_iter()
            .collect();
        let want: BTreeSet<Word> = common::all_words(&data, 7)
            .into_iter()
            .filter(|w| w.first().unwrap().index() == 1)
            .filter(|w| data.interval_size(w).unwrap() >= 1e-3)
            .collect();
        assert_eq!(got, want);
        assert!(matches!(data.words_intersecting(&first, 1e-2, 1e-3, 10), Err(Error::Domain(_))));
    }
}

#[test]
fn words_intersecting_count_bound_is_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (name, data) in common::shipped() {
        let delta = estimate_delta(&data, 1e-2, 1e-6).unwrap().delta;
        let hull = data.hull();
        let c0: f64 = 2.0;
        let mut worst = Vec::new();
        for tau in [1e-3, 1e-4] {
            let mut w: f64 = 0.0;
            for _ in 0..200 {
                let len = 10f64.powf(rng.gen_range(-3.0..0.0));
                let lo = rng.gen_range(hull.lo..hull.hi - len);
                let j = Interval::new(lo, lo + len).unwrap();
                let n = data.words_intersecting(&j, tau, c0 * tau, DEFAULT_BUDGET).unwrap().len() as f64;
                let bound = tau.powf(-delta) * len.powf(delta) + c0.ln();
                w = w.max(n / bound);
            }
            worst.push(w);
        }
        assert!(worst.iter().all(|w| w.is_finite() && *w > 0.0));
        assert!(worst[0] / worst[1] < 2.0 && worst[1] / worst[0] < 2.0, "{name}: {worst:?}");
    }
}
