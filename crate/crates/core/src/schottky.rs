//! Schottky data, the interval tree `a ↦ I_a`, and the partitions `Z(τ)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobius::{Interval, MobiusTransform};
use crate::symbolic::{Alphabet, Letter, Word};

/// Default cap on the number of words a tree search may produce.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Tolerance for `γ_{ā} = γ_a⁻¹`.
pub const INVERSE_TOL: f64 = 1e-10;
/// Tolerance for endpoint images and exterior samples.
pub const MAPPING_TOL: f64 = 1e-9;

/// On-disk group description.
///
/// `generators` holds either all `2r` matrices or only the first `r`; in the
/// latter case `γ_{a+r}` is the matrix inverse of `γ_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupConfig {
    pub r: usize,
    pub intervals: Vec<[f64; 2]>,
    pub generators: Vec<[[f64; 2]; 2]>,
}

impl GroupConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Clone)]
pub struct SchottkyData {
    alphabet: Alphabet,
    intervals: Vec<Interval>,
    generators: Vec<MobiusTransform>,
}

impl SchottkyData {
    /// Structural construction; the Schottky axioms are checked by [`SchottkyData::validate`].
    pub fn new(r: usize, intervals: Vec<Interval>, generators: Vec<MobiusTransform>) -> Result<Self> {
        let alphabet = Alphabet::new(r)?;
        if intervals.len() != 2 * r {
            return Err(Error::Config(format!(
                "expected {} intervals, got {}",
                2 * r,
                intervals.len()
            )));
        }
        let generators = match generators.len() {
            n if n == 2 * r => generators,
            n if n == r => {
                let mut all = generators.clone();
                all.extend(generators.iter().map(MobiusTransform::inverse));
                all
            }
            n => {
                return Err(Error::Config(format!(
                    "expected {r} or {} generators, got {n}",
                    2 * r
                )))
            }
        };
        Ok(SchottkyData {
            alphabet,
            intervals,
            generators,
        })
    }

    pub fn from_config(cfg: &GroupConfig) -> Result<Self> {
        let intervals = cfg
            .intervals
            .iter()
            .map(|&[lo, hi]| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        let generators = cfg
            .generators
            .iter()
            .map(|&m| MobiusTransform::from_rows(m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cfg.r, intervals, generators)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_config(&GroupConfig::from_json(s)?)
    }

    /// Config with all `2r` generators written out.
    pub fn to_config(&self) -> GroupConfig {
        GroupConfig {
            r: self.r(),
            intervals: self.intervals.iter().map(|i| [i.lo, i.hi]).collect(),
            generators: self.generators.iter().map(|g| g.rows()).collect(),
        }
    }

    /// Group generated by the hyperbolic maps `γ_a(z) = c_a - ρ_a ρ_ā / (z - c_ā)`,
    /// which send the circle of radius `ρ_ā` about `c_ā` to the circle of radius `ρ_a`
    /// about `c_a`, the exterior of `D_ā` onto `D_a`, and `∞` to the center `c_a`.
    /// Generators `r+1..2r` are exact matrix inverses.
    pub fn from_disks(centers: &[f64], radii: &[f64]) -> Result<Self> {
        if centers.len() != radii.len() || centers.len() % 2 != 0 || centers.is_empty() {
            return Err(Error::Config("need 2r centers and 2r radii".into()));
        }
        let r = centers.len() / 2;
        let intervals = centers
            .iter()
            .zip(radii)
            .map(|(&c, &rho)| Interval::centered(c, rho))
            .collect::<Result<Vec<_>>>()?;
        let generators = (0..r)
            .map(|a| {
                let (ca, ra) = (centers[a], radii[a]);
                let (cb, rb) = (centers[a + r], radii[a + r]);
                MobiusTransform::new(ca, -ca * cb - ra * rb, 1.0, -cb)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(r, intervals, generators)
    }

    pub fn r(&self) -> usize {
        self.alphabet.r()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval(&self, l: Letter) -> Interval {
        self.intervals[l.slot()]
    }

    pub fn generator(&self, l: Letter) -> MobiusTransform {
        self.generators[l.slot()]
    }

    pub fn generators(&self) -> &[MobiusTransform] {
        &self.generators
    }

    /// Smallest interval containing all base intervals.
    pub fn hull(&self) -> Interval {
        let lo = self.intervals.iter().map(|i| i.lo).fold(f64::INFINITY, f64::min);
        let hi = self.intervals.iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }

    pub fn max_base_size(&self) -> f64 {
        self.intervals.iter().map(Interval::size).fold(0.0, f64::max)
    }

    /// `γ_{a_1} ⋯ γ_{a_n}`.
    pub fn group_element(&self, w: &Word) -> MobiusTransform {
        match w.letters().split_first() {
            None => MobiusTransform::IDENTITY,
            Some((&l, rest)) => rest
                .iter()
                .fold(self.generator(l), |acc, &m| acc.compose(&self.generator(m))),
        }
    }

    /// `I_a = γ_{a'}(I_{a_n})`.
    pub fn interval_of(&self, w: &Word) -> Result<Interval> {
        let last = w.last().ok_or(Error::EmptyWord)?;
        if w.len() == 1 {
            return Ok(self.interval(last));
        }
        self.group_element(&w.prime())
            .image_interval(&self.interval(last))
    }

    /// `|I_a|` from `|γ_{a'}(I)| = |I| / ((c x₀ + d)(c x₁ + d))`, accurate even
    /// when `I_a` is below the resolution of its endpoints.
    pub fn interval_size(&self, w: &Word) -> Result<f64> {
        let last = w.last().ok_or(Error::EmptyWord)?;
        let base = self.interval(last);
        let g = self.group_element(&w.prime());
        let d0 = g.c * base.lo + g.d;
        let d1 = g.c * base.hi + g.d;
        if d0.abs() < crate::mobius::POLE_TOL || d1.abs() < crate::mobius::POLE_TOL || d0.signum() != d1.signum() {
            return Err(Error::PoleInInterval {
                pole: g.pole().finite().unwrap_or(f64::INFINITY),
                lo: base.lo,
                hi: base.hi,
            });
        }
        Ok(base.size() / (d0 * d1))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let n = self.intervals.len();

        let mut min_gap = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = self.intervals[i];
                let b = self.intervals[j];
                let gap = if a.hi < b.lo {
                    b.lo - a.hi
                } else if b.hi < a.lo {
                    a.lo - b.hi
                } else {
                    -(a.hi.min(b.hi) - a.lo.max(b.lo))
                };
                min_gap = min_gap.min(gap);
            }
        }
        checks.push(AxiomCheck {
            name: "disjoint_intervals".into(),
            passed: min_gap > 0.0,
            defect: (-min_gap).max(0.0),
            detail: format!("minimum gap {min_gap:.3e}"),
        });

        let det_defect = self
            .generators
            .iter()
            .map(|g| (g.det() - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(AxiomCheck {
            name: "unit_determinant".into(),
            passed: det_defect <= 1e-12,
            defect: det_defect,
            detail: String::new(),
        });

        let r = self.r();
        let mut inv_defect = 0.0_f64;
        let mut worst_inv = 0;
        for a in self.alphabet.letters() {
            let d = self
                .generator(a.bar(r))
                .max_entry_diff(&self.generator(a).inverse());
            if d > inv_defect {
                inv_defect = d;
                worst_inv = a.0;
            }
        }
        checks.push(AxiomCheck {
            name: "inverse_pairs".into(),
            passed: inv_defect <= INVERSE_TOL,
            defect: inv_defect,
            detail: format!("worst letter {worst_inv}"),
        });

        // γ_a sends the arc hi_ā → ∞ → lo_ā onto lo_a → hi_a.
        let mut end_defect = 0.0_f64;
        let mut ext_defect = 0.0_f64;
        let hull = self.hull();
        let span = hull.size().max(1.0);
        for a in self.alphabet.letters() {
            let g = self.generator(a);
            let ia = self.interval(a);
            let ib = self.interval(a.bar(r));
            let img_hi = g.apply_real(ib.hi);
            let img_lo = g.apply_real(ib.lo);
            match (img_hi, img_lo) {
                (Some(p), Some(q)) => {
                    end_defect = end_defect.max((p - ia.lo).abs()).max((q - ia.hi).abs());
                }
                _ => end_defect = f64::INFINITY,
            }
            let mut exterior: Vec<crate::mobius::ExtendedReal> = Vec::new();
            let left = Interval {
                lo: hull.lo - 10.0 * span,
                hi: ib.lo,
            };
            let right = Interval {
                lo: ib.hi,
                hi: hull.hi + 10.0 * span,
            };
            exterior.extend(left.samples(200).map(crate::mobius::ExtendedReal::Finite));
            exterior.extend(right.samples(200).map(crate::mobius::ExtendedReal::Finite));
            exterior.extend([-1e8, 1e8].map(crate::mobius::ExtendedReal::Finite));
            exterior.push(crate::mobius::ExtendedReal::Infinity);
            for x in exterior {
                let d = match g.apply(x).finite() {
                    Some(y) => (ia.lo - y).max(y - ia.hi).max(0.0),
                    None => f64::INFINITY,
                };
                ext_defect = ext_defect.max(d);
            }
        }
        checks.push(AxiomCheck {
            name: "mapping_endpoints".into(),
            passed: end_defect <= MAPPING_TOL,
            defect: end_defect,
            detail: String::new(),
        });
        checks.push(AxiomCheck {
            name: "mapping_exterior".into(),
            passed: ext_defect <= MAPPING_TOL,
            defect: ext_defect,
            detail: String::new(),
        });

        let passed = checks.iter().all(|c| c.passed);
        ValidationReport { passed, checks }
    }

    /// `Z(τ) = {a : |I_a| ≤ τ < |I_{a'}|}` by depth-first search, lexicographic.
    pub fn build_partition(&self, tau: f64, budget: usize) -> Result<Partition> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Domain(format!("tau = {tau} outside (0, 1]")));
        }
        let r = self.r();
        let mut cells = Vec::new();
        // (word, γ_{a'}, I_a)
        let mut stack: Vec<(Word, MobiusTransform, Interval)> = self
            .alphabet
            .letters()
            .rev()
            .map(|l| (Word::from_letters(vec![l]), MobiusTransform::IDENTITY, self.interval(l)))
            .collect();
        while let Some((word, prefix_map, interval)) = stack.pop() {
            if interval.size() <= tau {
                if cells.len() >= budget {
                    return Err(Error::Budget {
                        what: format!("partition Z({tau})"),
                        cap: budget,
                    });
                }
                cells.push(PartitionCell {
                    word,
                    interval,
                    prefix_map,
                });
                continue;
            }
            let last = word.last().expect("nonempty");
            let map = prefix_map.compose(&self.generator(last));
            for l in self.alphabet.letters().rev() {
                if l == last.bar(r) {
                    continue;
                }
                let iv = map.image_interval(&self.interval(l))?;
                stack.push((word.child(l), map, iv));
            }
        }
        Ok(Partition { tau, cells })
    }

    /// Words with `tau_lo ≤ |I_a| ≤ tau_hi` whose interval meets `j`.
    pub fn words_intersecting(
        &self,
        j: &Interval,
        tau_lo: f64,
        tau_hi: f64,
        budget: usize,
    ) -> Result<Vec<Word>> {
        if !(tau_lo > 0.0 && tau_lo <= tau_hi) {
            return Err(Error::Domain(format!(
                "size band [{tau_lo}, {tau_hi}] is empty"
            )));
        }
        let r = self.r();
        let mut out = Vec::new();
        let mut visited = 0usize;
        let mut stack: Vec<(Word, MobiusTransform, Interval)> = self
            .alphabet
            .letters()
            .rev()
            .map(|l| (Word::from_letters(vec![l]), MobiusTransform::IDENTITY, self.interval(l)))
            .collect();
        while let Some((word, prefix_map, interval)) = stack.pop() {
            if !interval.intersects(j) || interval.size() < tau_lo {
                continue;
            }
            visited += 1;
            if visited > budget {
                return Err(Error::Budget {
                    what: "interval search".into(),
                    cap: budget,
                });
            }
            if interval.size() <= tau_hi {
                out.push(word.clone());
            }
            let last = word.last().expect("nonempty");
            let map = prefix_map.compose(&self.generator(last));
            for l in self.alphabet.letters().rev() {
                if l == last.bar(r) {
                    continue;
                }
                let iv = map.image_interval(&self.interval(l))?;
                stack.push((word.child(l), map, iv));
            }
        }
        out.sort();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub name: String,
    pub passed: bool,
    pub defect: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<AxiomCheck>,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn worst_defect(&self) -> f64 {
        self.checks.iter().map(|c| c.defect).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionCell {
    pub word: Word,
    pub interval: Interval,
    /// `γ_{a'}`, which maps `I_{a_n}` onto `I_a`.
    pub prefix_map: MobiusTransform,
}

impl PartitionCell {
    pub fn center(&self) -> f64 {
        self.interval.midpoint()
    }

    pub fn first(&self) -> Letter {
        self.word.first().expect("partition words are nonempty")
    }

    pub fn last(&self) -> Letter {
        self.word.last().expect("partition words are nonempty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub tau: f64,
    pub cells: Vec<PartitionCell>,
}

impl Partition {
    /// Cells for an explicit word list, in the given order. The words are not
    /// checked against the size condition.
    pub fn from_words(data: &SchottkyData, tau: f64, words: &[Word]) -> Result<Self> {
        let cells = words
            .iter()
            .map(|w| {
                if w.is_empty() {
                    return Err(Error::EmptyWord);
                }
                Ok(PartitionCell {
                    word: w.clone(),
                    interval: data.interval_of(w)?,
                    prefix_map: data.group_element(&w.prime()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Partition { tau, cells })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.cells.iter().map(|c| &c.word)
    }

    pub fn max_word_len(&self) -> usize {
        self.cells.iter().map(|c| c.word.len()).max().unwrap_or(0)
    }

    /// Cell indices grouped by first letter (slot-indexed).
    pub fn by_first_letter(&self, alphabet_size: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); alphabet_size];
        for (i, c) in self.cells.iter().enumerate() {
            out[c.first().slot()].push(i);
        }
        out
    }

    /// Cell indices grouped by last letter (slot-indexed).
    pub fn by_last_letter(&self, alphabet_size: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); alphabet_size];
        for (i, c) in self.cells.iter().enumerate() {
            out[c.last().slot()].push(i);
        }
        out
    }

    /// Checks the size condition `|I_a| ≤ τ < |I_{a'}|` against `data`
    /// and the combinatorial partition property.
    pub fn verify(&self, data: &SchottkyData) -> Result<PartitionCheck> {
        let mut size_violations = 0;
        for c in &self.cells {
            let size = data.interval_of(&c.word)?.size();
            let parent = if c.word.len() == 1 {
                f64::INFINITY
            } else {
                data.interval_of(&c.word.prime())?.size()
            };
            if !(size <= self.tau * (1.0 + 1e-12) && self.tau < parent * (1.0 + 1e-12)) {
                size_violations += 1;
            }
        }
        let words: Vec<Word> = self.words().cloned().collect();
        Ok(PartitionCheck {
            size_violations,
            is_partition: is_combinatorial_partition(data.alphabet(), &words),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub size_violations: usize,
    pub is_partition: bool,
}

impl PartitionCheck {
    pub fn ok(&self) -> bool {
        self.size_violations == 0 && self.is_partition
    }
}

/// True iff every sufficiently long admissible word has exactly one prefix in
/// `words`: no member is a prefix of another, and every proper prefix of a
/// member has all of its admissible children covered.
pub fn is_combinatorial_partition(alphabet: Alphabet, words: &[Word]) -> bool {
    if words.is_empty() || words.iter().any(|w| w.is_empty()) {
        return false;
    }
    if words.iter().any(|w| !alphabet.is_admissible(w.letters())) {
        return false;
    }
    // node -> is_member
    let mut nodes: BTreeMap<Word, bool> = BTreeMap::new();
    for w in words {
        if let Some(prev) = nodes.insert(w.clone(), true) {
            if prev {
                return false;
            }
            // w was already recorded as an internal node: prefix clash
            return false;
        }
        let mut p = w.prime();
        loop {
            match nodes.get(&p) {
                Some(true) => return false,
                Some(false) => {}
                None => {
                    nodes.insert(p.clone(), false);
                }
            }
            if p.is_empty() {
                break;
            }
            p = p.prime();
        }
    }
    nodes
        .iter()
        .filter(|(_, &member)| !member)
        .all(|(node, _)| alphabet.children(node).iter().all(|c| nodes.contains_key(c)))
}

/// Running minimum and maximum of a ratio statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for Band {
    fn default() -> Self {
        Band {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            count: 0,
        }
    }
}

impl Band {
    pub fn push(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Band) {
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        self.count += other.count;
    }

    /// Finite with a strictly positive lower end.
    pub fn is_bounded_positive(&self) -> bool {
        self.count > 0 && self.min > 0.0 && self.max.is_finite()
    }

    pub fn width_ratio(&self) -> f64 {
        self.max / self.min
    }
}

/// Empirical constants of the interval bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalBands {
    pub depth: usize,
    /// `|I_{ab}| / |I_a|` over every word of length `≤ depth`.
    pub parent_child: Band,
    /// `|I_{a'b}| / (|I_a| |I_b|)` over random pairs with `a ⇝ b`.
    pub concatenation: Band,
    /// `|I_{ā}| / |I_a|`.
    pub reversal: Band,
    /// `dist(I_a, I_b) / max(|I_a|, |I_b|)` over random prefix-incomparable pairs.
    pub separation: Band,
}

impl SchottkyData {
    /// Uniform random admissible word of length `n`.
    pub fn random_word(&self, rng: &mut impl Rng, n: usize) -> Word {
        let r = self.r();
        let q = self.alphabet.size() as u32;
        let mut w = Word::empty();
        while w.len() < n {
            let l = Letter(rng.gen_range(1..=q));
            if w.last().is_none_or(|p| p.bar(r) != l) {
                w.push(l);
            }
        }
        w
    }

    /// Exhaustive parent-child and reversal bands to `depth`, plus `n_random`
    /// random pairs (lengths up to `depth`) for concatenation and separation.
    pub fn interval_bands(&self, depth: usize, n_random: usize, seed: u64) -> Result<IntervalBands> {
        let r = self.r();
        let mut parent_child = Band::default();
        let mut reversal = Band::default();
        let mut stack: Vec<(Word, MobiusTransform, Interval)> = self
            .alphabet
            .letters()
            .rev()
            .map(|l| (Word::from_letters(vec![l]), MobiusTransform::IDENTITY, self.interval(l)))
            .collect();
        while let Some((word, prefix_map, _)) = stack.pop() {
            reversal.push(self.interval_size(&word.bar(r))? / self.interval_size(&word)?);
            if word.len() >= depth {
                continue;
            }
            let last = word.last().expect("nonempty");
            let map = prefix_map.compose(&self.generator(last));
            for l in self.alphabet.letters().rev() {
                if l == last.bar(r) {
                    continue;
                }
                let iv = map.image_interval(&self.interval(l))?;
                let child = word.child(l);
                parent_child.push(self.interval_size(&child)? / self.interval_size(&word)?);
                stack.push((child, map, iv));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut concatenation = Band::default();
        let mut separation = Band::default();
        let max_len = depth.max(2);
        while concatenation.count < n_random {
            let n = rng.gen_range(1..=max_len);
            let a = self.random_word(&mut rng, n);
            let n = rng.gen_range(1..=max_len);
            let mut b = self.random_word(&mut rng, n);
            if !squiggle_words(&a, &b) {
                // force the link letter, keeping b admissible
                let first = a.last().expect("nonempty");
                let mut letters = vec![first];
                for &l in b.letters() {
                    if letters.last().is_some_and(|p: &Letter| p.bar(r) == l) {
                        break;
                    }
                    letters.push(l);
                }
                b = Word::from_letters(letters);
            }
            let glued = a.prime().concat(&b);
            let ia = self.interval_size(&a)?;
            let ib = self.interval_size(&b)?;
            concatenation.push(self.interval_size(&glued)? / (ia * ib));
        }
        while separation.count < n_random {
            let n = rng.gen_range(1..=max_len);
            let a = self.random_word(&mut rng, n);
            let n = rng.gen_range(1..=max_len);
            let b = self.random_word(&mut rng, n);
            if a.is_prefix_of(&b) || b.is_prefix_of(&a) {
                continue;
            }
            let (ia, ib) = (self.interval_of(&a)?, self.interval_of(&b)?);
            separation.push(ia.distance(&ib) / ia.size().max(ib.size()));
        }
        Ok(IntervalBands {
            depth,
            parent_child,
            concatenation,
            reversal,
            separation,
        })
    }
}

fn squiggle_words(a: &Word, b: &Word) -> bool {
    a.last().is_some() && a.last() == b.first()
}

/// `γ'_{a'}(x) / τ` over `x ∈ I_{a_n}` (endpoints and midpoint) for every cell.
pub fn derivative_bracket(z: &Partition, data: &SchottkyData) -> Result<Band> {
    let mut band = Band::default();
    for c in &z.cells {
        let base = data.interval(c.last());
        for x in [base.lo, base.midpoint(), base.hi] {
            band.push(c.prefix_map.derivative(x)? / z.tau);
        }
    }
    Ok(band)
}
