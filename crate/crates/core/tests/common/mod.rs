#![allow(dead_code)]

use rand::Rng;
use schottky_lab::examples::SHIPPED;
use schottky_lab::{Letter, SchottkyData, Word};

pub fn shipped() -> Vec<(&'static str, SchottkyData)> {
    SHIPPED
        .iter()
        .map(|(n, c, r)| (*n, SchottkyData::from_disks(c, r).unwrap()))
        .collect()
}

pub fn symmetric() -> SchottkyData {
    shipped().remove(0).1
}

pub fn asymmetric() -> SchottkyData {
    shipped().remove(1).1
}

pub fn rank3() -> SchottkyData {
    shipped().remove(2).1
}

/// Uniform random admissible word of length `n`.
pub fn random_word(rng: &mut impl Rng, r: usize, n: usize) -> Word {
    let q = 2 * r as u32;
    let mut w = Word::empty();
    for _ in 0..n {
        loop {
            let l = Letter(rng.gen_range(1..=q));
            if w.last().is_none_or(|p| p.bar(r) != l) {
                w.push(l);
                break;
            }
        }
    }
    w
}

/// Every admissible word of length `1..=depth`.
pub fn all_words(data: &SchottkyData, depth: usize) -> Vec<Word> {
    let a = data.alphabet();
    (1..=depth).flat_map(|n| a.words_of_length(n)).collect()
}
