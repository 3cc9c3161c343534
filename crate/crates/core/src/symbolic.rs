//! Words in the free group on `r` generators.
//!
//! Letters are the integers `1..=2r`; the inverse of `a` is `a + r` for
//! `a <= r` and `a - r` otherwise. A word is admissible when no letter is
//! immediately followed by its inverse.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u32);

impl Letter {
    pub fn index(self) -> u32 {
        self.0
    }

    /// Zero-based position, for indexing per-letter arrays.
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }

    pub fn bar(self, r: usize) -> Letter {
        let r = r as u32;
        if self.0 <= r {
            Letter(self.0 + r)
        } else {
            Letter(self.0 - r)
        }
    }
}

/// A (possibly empty) sequence of letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn from_indices(indices: &[u32]) -> Self {
        Word(indices.iter().map(|&i| Letter(i)).collect())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    /// The parent `a'`: drops the last letter (the empty word is its own parent).
    pub fn prime(&self) -> Word {
        let n = self.0.len().saturating_sub(1);
        Word(self.0[..n].to_vec())
    }

    pub fn push(&mut self, l: Letter) {
        self.0.push(l);
    }

    pub fn child(&self, l: Letter) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(l);
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Reverses the word and inverts every letter.
    pub fn bar(&self, r: usize) -> Word {
        Word(self.0.iter().rev().map(|l| l.bar(r)).collect())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Letters as plain integers, e.g. for Python or JSON.
    pub fn indices(&self) -> Vec<u32> {
        self.0.iter().map(|l| l.0).collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{}", l.0)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(Word::empty());
        }
        s.trim()
            .split('.')
            .map(|t| match t.parse::<u32>() {
                Ok(i) if i >= 1 => Ok(Letter(i)),
                _ => Err(Error::Config(format!("bad letter {t:?} in word {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The alphabet `{1, …, 2r}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    r: usize,
}

impl Alphabet {
    pub fn new(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::Config("alphabet needs r >= 1".into()));
        }
        Ok(Alphabet { r })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn size(&self) -> usize {
        2 * self.r
    }

    pub fn letters(&self) -> impl DoubleEndedIterator<Item = Letter> {
        (1..self.size() as u32 + 1).map(Letter)
    }

    pub fn contains(&self, l: Letter) -> bool {
        l.0 >= 1 && l.0 as usize <= self.size()
    }

    pub fn is_admissible(&self, letters: &[Letter]) -> bool {
        letters.iter().all(|&l| self.contains(l))
            && letters.windows(2).all(|w| w[1] != w[0].bar(self.r))
    }

    /// The admissible one-letter extensions of `w` in letter order.
    pub fn children(&self, w: &Word) -> Vec<Word> {
        let forbidden = w.last().map(|l| l.bar(self.r));
        self.letters()
            .filter(|&l| Some(l) != forbidden)
            .map(|l| w.child(l))
            .collect()
    }

    /// All admissible words of length `n`, lexicographically.
    pub fn words_of_length(&self, n: usize) -> Vec<Word> {
        let mut level = vec![Word::empty()];
        for _ in 0..n {
            level = level.iter().flat_map(|w| self.children(w)).collect();
        }
        level
    }

    /// `2r (2r - 1)^{n-1}` for `n >= 1`.
    pub fn count_of_length(&self, n: usize) -> u64 {
        if n == 0 {
            1
        } else {
            let q = self.size() as u64;
            q * (q - 1).pow(n as u32 - 1)
        }
    }
}

/// `a → b`: the concatenation `ab` is admissible.
pub fn arrow(a: &Word, b: &Word, r: usize) -> bool {
    match (a.last(), b.first()) {
        (Some(x), Some(y)) => x != y.bar(r),
        _ => true,
    }
}

/// `a ⇝ b`: the last letter of `a` equals the first letter of `b`.
pub fn squiggle(a: &Word, b: &Word) -> Result<bool> {
    match (a.last(), b.first()) {
        (Some(x), Some(y)) => Ok(x == y),
        _ => Err(Error::EmptyWord),
    }
}

/// `a'b` for `a ⇝ b`, a word of length `|a| + |b| - 1`.
pub fn glue(a: &Word, b: &Word) -> Result<Word> {
    if !squiggle(a, b)? {
        return Err(Error::Precondition(format!("{a} does not link to {b}")));
    }
    Ok(a.prime().concat(b))
}

pub fn is_prefix(a: &Word, b: &Word) -> bool {
    a.is_prefix_of(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(ix: &[u32]) -> Word {
        Word::from_indices(ix)
    }

    #[test]
    fn admissibility_examples() {
        let alph = Alphabet::new(2).unwrap();
        assert!(alph.is_admissible(w(&[1, 2, 1]).letters()));
        assert!(!alph.is_admissible(w(&[1, 3]).letters()));
        assert!(alph.is_admissible(&[]));
        assert!(!alph.is_admissible(w(&[5]).letters()));
    }

    #[test]
    fn bar_examples() {
        assert_eq!(Word::empty().bar(2), Word::empty());
        assert_eq!(w(&[1]).bar(2), w(&[3]));
        assert_eq!(w(&[1, 2]).bar(2), w(&[4, 3]));
        assert_eq!(Letter(3).bar(2), Letter(1));
        assert_eq!(Letter(6).bar(3), Letter(3));
    }

    #[test]
    fn relations() {
        assert!(arrow(&w(&[1]), &w(&[2]), 2));
        assert!(!arrow(&w(&[1]), &w(&[3]), 2));
        assert!(arrow(&Word::empty(), &w(&[2]), 2));
        assert!(squiggle(&w(&[1, 2]), &w(&[2, 3])).unwrap());
        assert!(!squiggle(&w(&[1, 2]), &w(&[1, 3])).unwrap());
        assert_eq!(squiggle(&Word::empty(), &w(&[1])), Err(Error::EmptyWord));
        assert_eq!(glue(&w(&[1, 2]), &w(&[2, 3])).unwrap(), w(&[1, 2, 3]));
        assert!(is_prefix(&w(&[1]), &w(&[1, 2])));
        assert!(!is_prefix(&w(&[2]), &w(&[1, 2])));
        assert!(is_prefix(&w(&[1, 2]), &w(&[1, 2])));
    }

    #[test]
    fn children_counts() {
        let alph = Alphabet::new(2).unwrap();
        assert_eq!(alph.children(&Word::empty()).len(), 4);
        let c = alph.children(&w(&[1]));
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|x| x.last() != Some(Letter(3))));
        assert_eq!(c, vec![w(&[1, 1]), w(&[1, 2]), w(&[1, 4])]);
    }

    #[test]
    fn display_and_parse() {
        let x = w(&[1, 2, 1]);
        assert_eq!(x.to_string(), "1.2.1");
        assert_eq!("1.2.1".parse::<Word>().unwrap(), x);
        assert_eq!("".parse::<Word>().unwrap(), Word::empty());
        assert!("1.x".parse::<Word>().is_err());
        assert!("0".parse::<Word>().is_err());
        let j = serde_json::to_string(&x).unwrap();
        assert_eq!(j, "\"1.2.1\"");
        assert_eq!(serde_json::from_str::<Word>(&j).unwrap(), x);
    }

    #[test]
    fn prime_drops_last() {
        assert_eq!(w(&[1, 2, 4]).prime(), w(&[1, 2]));
        assert_eq!(Word::empty().prime(), Word::empty());
    }
}
