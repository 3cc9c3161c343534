use std::collections::BTreeSet;

use proptest::prelude::*;
use schottky_lab::symbolic::{arrow, glue, is_prefix, squiggle};
use schottky_lab::{Alphabet, Error, Letter, Word};

fn w(ix: &[u32]) -> Word {
    Word::from_indices(ix)
}

/// Brute force: every sequence over `1..=2r` of length `n`, filtered by the
/// cancellation rule.
fn brute_force(r: usize, n: usize) -> BTreeSet<Vec<u32>> {
    let q = 2 * r as u32;
    let bar = |a: u32| if a as usize <= r { a + r as u32 } else { a - r as u32 };
    let mut out = BTreeSet::new();
    let total = (q as usize).pow(n as u32);
    for mut code in 0..total {
        let mut seq = Vec::with_capacity(n);
        for _ in 0..n {
            seq.push((code % q as usize) as u32 + 1);
            code /= q as usize;
        }
        if seq.windows(2).all(|p| p[1] != bar(p[0])) {
            out.insert(seq);
        }
    }
    out
}

#[test]
fn admissibility_examples() {
    let a = Alphabet::new(2).unwrap();
    let l = |ix: &[u32]| ix.iter().map(|&i| Letter(i)).collect::<Vec<_>>();
    assert!(a.is_admissible(&l(&[1, 2, 1])));
    assert!(!a.is_admissible(&l(&[1, 3])));
    assert!(a.is_admissible(&[]));
}

#[test]
fn bar_examples() {
    assert_eq!(Word::empty().bar(2), Word::empty());
    assert_eq!(w(&[1]).bar(2), w(&[3]));
    assert_eq!(w(&[1, 2]).bar(2), w(&[4, 3]));
}

#[test]
fn relation_examples() {
    assert!(arrow(&w(&[1]), &w(&[2]), 2));
    assert!(!arrow(&w(&[1]), &w(&[3]), 2));
    assert!(arrow(&Word::empty(), &w(&[2]), 2));
    assert!(squiggle(&w(&[1, 2]), &w(&[2, 3])).unwrap());
    assert!(!squiggle(&w(&[1, 2]), &w(&[1, 3])).unwrap());
    assert!(matches!(squiggle(&Word::empty(), &w(&[1])), Err(Error::EmptyWord)));
    assert_eq!(glue(&w(&[1, 2]), &w(&[2, 3])).unwrap(), w(&[1, 2, 3]));
    assert!(is_prefix(&w(&[1]), &w(&[1, 2])));
    assert!(!is_prefix(&w(&[2]), &w(&[1, 2])));
    assert!(is_prefix(&w(&[1, 2]), &w(&[1, 2])));
}

#[test]
fn children_examples() {
    let a = Alphabet::new(2).unwrap();
    assert_eq!(a.children(&Word::empty()).len(), 4);
    let c = a.children(&w(&[1]));
    assert_eq!(c.len(), 3);
    assert!(c.iter().all(|x| x.last() != Some(Letter(3))));
    assert!(c.windows(2).all(|p| p[0] < p[1]));
}

#[test]
fn enumeration_matches_brute_force() {
    for r in 2..=3 {
        let a = Alphabet::new(r).unwrap();
        let max_n = if r == 2 { 6 } else { 5 };
        for n in 1..=max_n {
            let words = a.words_of_length(n);
            let got: BTreeSet<Vec<u32>> = words.iter().map(|x| x.indices()).collect();
            assert_eq!(got.len(), words.len(), "duplicates at r={r} n={n}");
            assert_eq!(got, brute_force(r, n));
            let want = 2 * r as u64 * (2 * r as u64 - 1).pow(n as u32 - 1);
            assert_eq!(words.len() as u64, want);
            assert_eq!(a.count_of_length(n), want);
            assert!(words.iter().all(|x| a.is_admissible(x.letters())));
        }
    }
}

#[test]
fn dot_serialization_round_trip() {
    let x = w(&[1, 2, 1]);
    assert_eq!(x.to_string(), "1.2.1");
    assert_eq!("1.2.1".parse::<Word>().unwrap(), x);
    assert_eq!(serde_json::to_string(&x).unwrap(), "\"1.2.1\"");
}

fn word(r: usize) -> impl Strategy<Value = Word> {
    let q = 2 * r as u32;
    proptest::collection::vec(1..=q, 0..12).prop_map(move |raw| {
        let mut out = Word::empty();
        for i in raw {
            let l = Letter(i);
            if out.last().is_none_or(|p| p.bar(r) != l) {
                out.push(l);
            }
        }
        out
    })
}

proptest! {
    #[test]
    fn bar_is_involution_and_reverses_arrow(x in word(3), y in word(3)) {
        let a = Alphabet::new(3).unwrap();
        prop_assert_eq!(x.bar(3).bar(3), x.clone());
        prop_assert!(a.is_admissible(x.bar(3).letters()));
        prop_assert_eq!(arrow(&x, &y, 3), arrow(&y.bar(3), &x.bar(3), 3));
        prop_assert_eq!(arrow(&x, &y, 3), a.is_admissible(x.concat(&y).letters()));
    }

    #[test]
    fn glue_is_admissible(x in word(2), y in word(2)) {
        prop_assume!(!x.is_empty() && !y.is_empty());
        let a = Alphabet::new(2).unwrap();
        if squiggle(&x, &y).unwrap() {
            let g = glue(&x, &y).unwrap();
            prop_assert_eq!(g.len(), x.len() + y.len() - 1);
            prop_assert!(a.is_admissible(g.letters()));
        } else {
            prop_assert!(glue(&x, &y).is_err());
        }
    }
}
