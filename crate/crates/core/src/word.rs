//! Finite words over the map alphabet and eventually periodic tails.
//!
//! Symbols are stored zero-based; the text form is one-based, so the
//! word `"12"` means "map 1 then map 2". Alphabets beyond nine maps use a
//! comma-separated text form (`"1,10,3"`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Build from zero-based symbol indices.
    pub fn from_indices(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    pub fn single(index: u8) -> Self {
        Word(vec![index])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Zero-based symbols.
    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    pub fn push(&mut self, index: u8) {
        self.0.push(index);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn repeat(&self, times: usize) -> Word {
        Word(self.0.repeat(times))
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Length of the longest common prefix.
    pub fn common_prefix_len(&self, other: &Word) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Word {
        Word(self.0[range].to_vec())
    }

    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s as usize >= alphabet) {
            Some(&s) => Err(Error::SymbolOutOfRange {
                symbol: s as usize + 1,
                alphabet,
            }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 9) {
            for &s in &self.0 {
                write!(f, "{}", s + 1)?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| (s + 1).to_string()).collect();
            f.write_str(&parts.join(","))
        }
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::WordParse(s.to_string());
        if s.is_empty() {
            return Ok(Word::empty());
        }
        let parse_symbol = |t: &str| -> Result<u8> {
            let v: usize = t.trim().parse().map_err(|_| bad())?;
            if v == 0 || v > 256 {
                return Err(bad());
            }
            Ok((v - 1) as u8)
        };
        if s.contains(',') {
            s.split(',').map(parse_symbol).collect::<Result<Vec<_>>>().map(Word)
        } else {
            s.chars()
                .map(|c| match c.to_digit(10) {
                    Some(d) if d > 0 => Ok((d - 1) as u8),
                    _ => Err(bad()),
                })
                .collect::<Result<Vec<_>>>()
                .map(Word)
        }
    }
}

impl TryFrom<String> for Word {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

/// The eventually periodic sequence `prefix · period · period · …`.
///
/// Always held in canonical form (primitive period, prefix absorbed into
/// the period as far as possible) so derived equality is equality of the
/// represented infinite sequences.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTail", into = "RawTail")]
pub struct TailWord {
    prefix: Word,
    period: Word,
}

#[derive(Serialize, Deserialize)]
struct RawTail {
    prefix: Word,
    period: Word,
}

impl TryFrom<RawTail> for TailWord {
    type Error = Error;
    fn try_from(raw: RawTail) -> Result<Self> {
        TailWord::new(raw.prefix, raw.period)
    }
}

impl From<TailWord> for RawTail {
    fn from(t: TailWord) -> RawTail {
        RawTail {
            prefix: t.prefix,
            period: t.period,
        }
    }
}

impl TailWord {
    pub fn new(prefix: Word, period: Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Empty("tail period"));
        }
        let mut prefix = prefix.0;
        let mut period = primitive_root(period.0);
        while let (Some(&p), Some(&q)) = (prefix.last(), period.last()) {
            if p != q {
                break;
            }
            prefix.pop();
            period.rotate_right(1);
        }
        Ok(TailWord {
            prefix: Word(prefix),
            period: Word(period),
        })
    }

    /// `ū = u u u …`
    pub fn periodic(period: &Word) -> Result<Self> {
        TailWord::new(Word::empty(), period.clone())
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn period(&self) -> &Word {
        &self.period
    }

    /// Zero-based symbol at position `i` of the infinite sequence.
    pub fn symbol_at(&self, i: usize) -> u8 {
        if i < self.prefix.len() {
            self.prefix.0[i]
        } else {
            let j = (i - self.prefix.len()) % self.period.len();
            self.period.0[j]
        }
    }

    /// First `n` symbols.
    pub fn truncate(&self, n: usize) -> Word {
        Word((0..n).map(|i| self.symbol_at(i)).collect())
    }

    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        self.prefix.check_alphabet(alphabet)?;
        self.period.check_alphabet(alphabet)
    }
}

impl fmt::Display for TailWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})^inf", self.prefix, self.period)
    }
}

fn primitive_root(w: Vec<u8>) -> Vec<u8> {
    let n = w.len();
    for d in 1..n {
        if n % d == 0 && (d..n).all(|i| w[i] == w[i - d]) {
            return w[..d].to_vec();
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        assert_eq!(w("123").indices(), &[0, 1, 2]);
        assert_eq!(w("").len(), 0);
        assert_eq!(w("1,10,3").indices(), &[0, 9, 2]);
        assert_eq!(w("1,10,3").to_string(), "1,10,3");
        assert_eq!(w("312").to_string(), "312");
        assert!("10".parse::<Word>().is_err());
        assert!("1a".parse::<Word>().is_err());
    }

    #[test]
    fn alphabet_check_reports_one_based_symbol() {
        let err = w("14").check_alphabet(3).unwrap_err();
        assert_eq!(
            err,
            Error::SymbolOutOfRange {
                symbol: 4,
                alphabet: 3
            }
        );
    }

    #[test]
    fn canonical_tail_absorbs_prefix_and_reduces_period() {
        let a = TailWord::new(w("12"), w("1212")).unwrap();
        let b = TailWord::new(w(""), w("12")).unwrap();
        assert_eq!(a, b);
        // 3 1 2 1 2 … vs 3 (12)^inf: same
        let c = TailWord::new(w("312"), w("12")).unwrap();
        let d = TailWord::new(w("3"), w("12")).unwrap();
        assert_eq!(c, d);
        // 2 (12)^inf = (21)^inf
        let e = TailWord::new(w("2"), w("12")).unwrap();
        assert_eq!(e, TailWord::new(w(""), w("21")).unwrap());
        assert!(TailWord::new(w("1"), w("")).is_err());
    }

    proptest! {
        #[test]
        fn canonical_form_preserves_sequence(
            prefix in proptest::collection::vec(0u8..3, 0..6),
            period in proptest::collection::vec(0u8..3, 1..5),
        ) {
            let raw_prefix = Word::from_indices(prefix.clone());
            let raw_period = Word::from_indices(period.clone());
            let t = TailWord::new(raw_prefix, raw_period).unwrap();
            for i in 0..40 {
                let expected = if i < prefix.len() { prefix[i] } else { period[(i - prefix.len()) % period.len()] };
                prop_assert_eq!(t.symbol_at(i), expected);
            }
        }
    }
}
