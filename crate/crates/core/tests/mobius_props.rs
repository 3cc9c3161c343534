mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schottky_lab::mobius::{affine_onto, distortion_factor, standard_distortion, verify_decomposition};
use schottky_lab::{Error, ExtendedReal, Interval, MobiusTransform, SchottkyData, Word};

fn mobius() -> impl Strategy<Value = MobiusTransform> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
        .prop_filter("det bounded away from 0", |(a, b, c, d)| a * d - b * c > 0.1)
        .prop_map(|(a, b, c, d)| MobiusTransform::new(a, b, c, d).unwrap())
}

/// Interval at least `margin` away from the pole of `g`.
fn interval_avoiding(g: &MobiusTransform, lo: f64, w: f64, margin: f64) -> Option<Interval> {
    let iv = Interval::new(lo, lo + w).ok()?;
    match g.pole() {
        ExtendedReal::Finite(p) if iv.thicken(margin).contains(p) => None,
        _ => Some(iv),
    }
}

/// `(g, I, J)` triples from Schottky words: `γ_{a'}` maps `I_{a_n}` onto `I_a`.
fn schottky_triples() -> Vec<(MobiusTransform, Interval, Interval)> {
    let mut out = Vec::new();
    for (_, data) in common::shipped() {
        for w in common::all_words(&data, 4) {
            let g = data.group_element(&w.prime());
            let i = data.interval(w.last().unwrap());
            out.push((g, i, data.interval_of(&w).unwrap()));
        }
    }
    out
}

fn sandwich_defect(g: &MobiusTransform, i: &Interval, j: &Interval) -> f64 {
    let alpha = distortion_factor(g, i).unwrap().abs();
    let ratio = j.size() / i.size();
    i.samples(200)
        .map(|x| {
            let d = g.derivative(x).unwrap();
            let lo = (-alpha).exp() * ratio;
            let hi = alpha.exp() * ratio;
            ((lo - d) / d).max((d - hi) / d)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn derivative_sandwich_on_schottky_words() {
    for (g, i, j) in schottky_triples() {
        assert!(sandwich_defect(&g, &i, &j) <= 1e-9, "sandwich fails on {i:?} -> {j:?}");
    }
}

#[test]
fn derivative_ratio_bound_on_schottky_words() {
    for (g, i, _) in schottky_triples() {
        let alpha = distortion_factor(&g, &i).unwrap().abs();
        let xs: Vec<f64> = i.samples(40).collect();
        for &x in &xs {
            for &y in &xs {
                let lhs = g.derivative(x).unwrap() / g.derivative(y).unwrap();
                let rhs = (2.0 * alpha.exp() * (x - y).abs() / i.size()).exp();
                assert!(lhs <= rhs * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn decomposition_holds_for_every_generator() {
    for (_, data) in common::shipped() {
        for a in data.alphabet().letters() {
            let g = data.generator(a);
            for b in data.alphabet().letters().filter(|&b| b != a.bar(data.r())) {
                let i = data.interval(b);
                let j = g.image_interval(&i).unwrap();
                assert!(verify_decomposition(&g, &i, &j).unwrap() < 1e-8);
            }
            // wrong target
            let i = data.interval(a);
            let j = Interval::new(10.0, 11.0).unwrap();
            if g.pole().finite().is_some_and(|p| !i.contains(p)) {
                assert!(matches!(verify_decomposition(&g, &i, &j), Err(Error::Precondition(_))));
            }
        }
    }
}

#[test]
fn distortion_examples() {
    // pole at 2 and at -1
    let g2 = MobiusTransform::new(0.0, 1.0, -1.0, 2.0).unwrap();
    let g1 = MobiusTransform::new(0.0, 1.0, -1.0, -1.0).unwrap();
    let unit = Interval::new(0.0, 1.0).unwrap();
    assert!((distortion_factor(&g2, &unit).unwrap() - 0.5f64.ln()).abs() < 1e-15);
    assert!((distortion_factor(&g1, &unit).unwrap() - 2f64.ln()).abs() < 1e-15);
    let inside = MobiusTransform::new(0.0, 1.0, -1.0, 0.5).unwrap();
    assert!(matches!(distortion_factor(&inside, &unit), Err(Error::PoleInInterval { .. })));
    let shift = MobiusTransform::new(2.0, 3.0, 0.0, 0.5).unwrap();
    assert_eq!(distortion_factor(&shift, &unit).unwrap(), 0.0);
    let g = affine_onto(&Interval::new(2.0, 4.0).unwrap());
    for x in [0.0, 0.3, 1.0, -2.0] {
        assert!((g.apply_real(x).unwrap() - (2.0 * x + 2.0)).abs() < 1e-12);
    }
    assert!(affine_onto(&unit).max_entry_diff(&MobiusTransform::IDENTITY) < 1e-15);
    assert!(standard_distortion(0.0).max_entry_diff(&MobiusTransform::IDENTITY) < 1e-15);
}

#[test]
fn standard_distortion_reconstructs_half_point() {
    // the unique map [0,1] -> [0,1] with distortion log 4, checked through the decomposition
    let alpha = 4f64.ln();
    let ga = standard_distortion(alpha);
    let unit = Interval::new(0.0, 1.0).unwrap();
    assert!((distortion_factor(&ga, &unit).unwrap() - alpha).abs() < 1e-12);
    assert!(verify_decomposition(&ga, &unit, &unit).unwrap() < 1e-14);
    // with pole p = -1/(e^α - 1) = -1/3: γ(1/2) = e^α·(1/2)/((e^α-1)/2 + 1)
    let want = 4.0 * 0.5 / (3.0 * 0.5 + 1.0);
    assert!((ga.apply_real(0.5).unwrap() - want).abs() < 1e-14);
}

#[test]
fn distortion_discrepancy_on_sampled_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    use rand::Rng;
    let triples = schottky_triples();
    let mut checked = 0;
    for _ in 0..400 {
        let (g1, i, _) = triples[rng.gen_range(0..triples.len())];
        let (g2, i2, _) = triples[rng.gen_range(0..triples.len())];
        if i != i2 {
            continue;
        }
        let a1 = distortion_factor(&g1, &i).unwrap();
        let a2 = distortion_factor(&g2, &i).unwrap();
        if (a1 - a2).abs() < 1e-6 {
            continue;
        }
        let xs: Vec<f64> = i.samples(2000).collect();
        let vals: Vec<f64> = xs
            .iter()
            .map(|&x| (g1.derivative(x).unwrap() / g2.derivative(x).unwrap()).ln())
            .collect();
        let c = vals[rng.gen_range(0..vals.len())];
        let half = rng.gen_range(1e-3..0.2);
        let (llo, lhi) = (c - half, c + half);
        let inside: Vec<f64> = xs
            .iter()
            .zip(&vals)
            .filter(|(_, &v)| v >= llo && v <= lhi)
            .map(|(&x, _)| x)
            .collect();
        let diam = inside.last().unwrap() - inside[0];
        let bound = (a1.abs() + a2.abs()).exp() * i.size() * (lhi - llo) / (a1 - a2).abs();
        assert!(diam <= bound * (1.0 + 1e-9) + 1e-12, "diam {diam} > {bound}");
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn measure_distortion_for_unions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    use rand::Rng;
    for (g, i, j) in schottky_triples().into_iter().step_by(7) {
        let alpha = distortion_factor(&g, &i).unwrap().abs();
        // disjoint subintervals from a sorted cut list
        let mut cuts: Vec<f64> = (0..8).map(|_| rng.gen_range(i.lo..i.hi)).collect();
        cuts.sort_by(f64::total_cmp);
        let pieces: Vec<Interval> = cuts
            .chunks(2)
            .filter(|c| c[1] > c[0])
            .map(|c| Interval::new(c[0], c[1]).unwrap())
            .collect();
        let len: f64 = pieces.iter().map(|p| p.size()).sum();
        let img: f64 = pieces.iter().map(|p| g.image_interval(p).unwrap().size()).sum();
        let scale = len * j.size() / i.size();
        assert!(img >= (-alpha).exp() * scale * (1.0 - 1e-12));
        assert!(img <= alpha.exp() * scale * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn unit_determinant_and_associativity(g in mobius(), h in mobius(), k in mobius()) {
        prop_assert!((g.det() - 1.0).abs() < 1e-12);
        prop_assert!((g.compose(&h).det() - 1.0).abs() < 1e-12);
        let left = g.compose(&h).compose(&k);
        let right = g.compose(&h.compose(&k));
        prop_assert!(left.max_entry_diff(&right) < 1e-12 * (1.0 + left.max_entry_diff(&MobiusTransform::IDENTITY)).powi(2));
    }

    #[test]
    fn chain_rule(g in mobius(), h in mobius(), x in -5.0..5.0f64) {
        let hx = h.apply_real(x);
        prop_assume!(hx.is_some());
        let dh = h.derivative(x);
        let dg = g.derivative(hx.unwrap());
        let dgh = g.compose(&h).derivative(x);
        prop_assume!(dh.is_ok() && dg.is_ok() && dgh.is_ok());
        let (dh, dg, dgh) = (dh.unwrap(), dg.unwrap(), dgh.unwrap());
        prop_assume!(dh < 1e6 && dg < 1e6);
        prop_assert!(dgh > 0.0);
        prop_assert!((dgh - dg * dh).abs() <= 1e-9 * dgh);
    }

    #[test]
    fn ball_cocycle(g in mobius(), h in mobius(), x in -5.0..5.0f64) {
        let hx = h.apply_real(x);
        prop_assume!(hx.is_some());
        let a = h.ball_derivative(x);
        let b = g.ball_derivative(hx.unwrap());
        let c = g.compose(&h).ball_derivative(x);
        prop_assume!(a.is_ok() && b.is_ok() && c.is_ok());
        let (a, b, c) = (a.unwrap(), b.unwrap(), c.unwrap());
        prop_assume!(a < 1e6 && b < 1e6);
        prop_assert!((c - a * b).abs() <= 1e-9 * c);
    }

    #[test]
    fn apply_never_nan(g in mobius(), x in -10.0..10.0f64) {
        match g.apply(ExtendedReal::Finite(x)) {
            ExtendedReal::Finite(y) => prop_assert!(!y.is_nan()),
            ExtendedReal::Infinity => {}
        }
        let at_inf = g.apply(ExtendedReal::Infinity).finite();
        prop_assert!(at_inf.is_none_or(|y| !y.is_nan()));
    }

    #[test]
    fn sandwich_random(g in mobius(), lo in -4.0..4.0f64, w in 0.01..2.0f64) {
        let iv = interval_avoiding(&g, lo, w, 0.05);
        prop_assume!(iv.is_some());
        let i = iv.unwrap();
        let j = g.image_interval(&i).unwrap();
        prop_assert!(sandwich_defect(&g, &i, &j) <= 1e-9);
        prop_assert!(verify_decomposition(&g, &i, &j).unwrap() < 1e-8 * (1.0 + j.size()));
    }

    #[test]
    fn standard_distortion_fixes_endpoints(alpha in -5.0..5.0f64) {
        let g = standard_distortion(alpha);
        prop_assert!(g.apply_real(0.0).unwrap().abs() < 1e-12);
        prop_assert!((g.apply_real(1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_round_trip(lo in -10.0..10.0f64, w in 1e-6..10.0f64) {
        let iv = Interval::new(lo, lo + w).unwrap();
        let g = affine_onto(&iv);
        prop_assert!(g.is_affine());
        prop_assert!((g.det() - 1.0).abs() < 1e-12);
        prop_assert!((g.apply_real(0.0).unwrap() - iv.lo).abs() < 1e-12 * (1.0 + lo.abs()));
        prop_assert!((g.apply_real(1.0).unwrap() - iv.hi).abs() < 1e-12 * (1.0 + lo.abs() + w));
    }
}

#[test]
fn example_words_are_admissible_inputs() {
    let data: SchottkyData = common::symmetric();
    assert_eq!(data.group_element(&Word::empty()), MobiusTransform::IDENTITY);
}
