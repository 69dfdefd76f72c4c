//! Validated transcriptions and the character-level primitives that every
//! question's answer reduces to.
//!
//! A character unit is a Unicode scalar value after canonical composition
//! (NFC). Positions are 1-based throughout.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("transcription is empty or whitespace-only")]
    EmptyTranscription,
    #[error("position {pos} is out of range for a word of length {len}")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("charset is empty")]
    EmptyCharset,
}

/// NFC-normalize `s`, optionally lowercasing it first.
///
/// Lowercasing is applied before composition, so a folded string is still
/// in canonical composed form.
pub fn normalize(s: &str, case_fold: bool) -> String {
    if case_fold {
        s.to_lowercase().nfc().collect()
    } else {
        s.nfc().collect()
    }
}

/// Units of `s` after normalization. May be empty.
pub fn units_of(s: &str, case_fold: bool) -> Vec<char> {
    normalize(s, case_fold).chars().collect()
}

/// Normalize a single queried character the same way word units are.
///
/// Returns `None` when the character does not survive as exactly one unit
/// (e.g. a case mapping that expands to two scalars).
pub fn normalize_char(c: char, case_fold: bool) -> Option<char> {
    let mut buf = [0u8; 4];
    let mut it = normalize(c.encode_utf8(&mut buf), case_fold).chars().collect::<Vec<_>>().into_iter();
    match (it.next(), it.next()) {
        (Some(u), None) => Some(u),
        _ => None,
    }
}

/// A ground-truth transcription with indexed character access.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    raw: String,
    units: Vec<char>,
    case_fold: bool,
}

impl Word {
    pub fn new(raw: &str) -> Result<Self, TextError> {
        Self::with_case_fold(raw, false)
    }

    /// Build a word whose units are lowercased before normalization. The raw
    /// text is kept untouched.
    pub fn with_case_fold(raw: &str, case_fold: bool) -> Result<Self, TextError> {
        let units = units_of(raw, case_fold);
        if units.iter().all(|c| c.is_whitespace()) {
            return Err(TextError::EmptyTranscription);
        }
        Ok(Self {
            raw: raw.to_owned(),
            units,
            case_fold,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn units(&self) -> &[char] {
        &self.units
    }

    pub fn case_fold(&self) -> bool {
        self.case_fold
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// The normalized units joined back into a string.
    pub fn render(&self) -> String {
        self.units.iter().collect()
    }

    pub fn char_at(&self, pos: usize) -> Result<char, TextError> {
        char_at(&self.units, pos)
    }

    pub fn frequency(&self, c: char) -> usize {
        frequency(&self.units, c)
    }

    pub fn first_index(&self, c: char) -> Option<usize> {
        first_index(&self.units, c)
    }

    pub fn has_repeat(&self) -> bool {
        has_repeat(&self.units)
    }

    /// Distinct units sorted by scalar value.
    pub fn distinct(&self) -> Vec<char> {
        self.units.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

// The free functions below work on bare unit slices so that predictions,
// which may legitimately be empty, can be answered with the same semantics.

pub fn char_at(units: &[char], pos: usize) -> Result<char, TextError> {
    if pos == 0 || pos > units.len() {
        return Err(TextError::PositionOutOfRange {
            pos,
            len: units.len(),
        });
    }
    Ok(units[pos - 1])
}

pub fn frequency(units: &[char], c: char) -> usize {
    units.iter().filter(|&&u| u == c).count()
}

pub fn first_index(units: &[char], c: char) -> Option<usize> {
    units.iter().position(|&u| u == c).map(|i| i + 1)
}

pub fn has_repeat(units: &[char]) -> bool {
    let mut seen = BTreeSet::new();
    units.iter().any(|u| !seen.insert(*u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CharsetSource {
    InferredFromDataset,
    ExplicitConfig,
}

/// The set of character units distractor characters are drawn from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Charset {
    members: Vec<char>,
    source: CharsetSource,
}

impl Charset {
    pub fn new(
        members: impl IntoIterator<Item = char>,
        source: CharsetSource,
    ) -> Result<Self, TextError> {
        let members: Vec<char> = members.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if members.is_empty() {
            return Err(TextError::EmptyCharset);
        }
        Ok(Self { members, source })
    }

    /// Charset from an explicit list of characters, normalized like word
    /// units. Characters that do not normalize to a single unit are skipped.
    pub fn explicit(chars: &str, case_fold: bool) -> Result<Self, TextError> {
        Self::new(
            chars.chars().filter_map(|c| normalize_char(c, case_fold)),
            CharsetSource::ExplicitConfig,
        )
    }

    pub fn members(&self) -> &[char] {
        &self.members
    }

    pub fn source(&self) -> CharsetSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, c: char) -> bool {
        self.members.binary_search(&c).is_ok()
    }

    /// Hex SHA-256 of the members concatenated in order.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let s: String = self.members.iter().collect();
        hex::encode(Sha256::digest(s.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hello() -> Word {
        Word::new("HELLO").unwrap()
    }

    #[test]
    fn make_word_examples() {
        assert_eq!(hello().len(), 5);
        assert_eq!(Word::new("A").unwrap().len(), 1);
        // c a f e + U+0301 composes to c a f é
        let decomposed = "cafe\u{301}";
        assert_eq!(decomposed.chars().count(), 5);
        let w = Word::new(decomposed).unwrap();
        assert_eq!(w.units(), &['c', 'a', 'f', '\u{e9}']);
        assert_eq!(w.raw(), decomposed);
    }

    #[test]
    fn empty_and_blank_rejected() {
        assert_eq!(Word::new(""), Err(TextError::EmptyTranscription));
        assert_eq!(Word::new("  \t"), Err(TextError::EmptyTranscription));
    }

    #[test]
    fn char_at_examples() {
        assert_eq!(hello().char_at(2), Ok('E'));
        assert_eq!(hello().char_at(1), Ok('H'));
        assert_eq!(
            hello().char_at(6),
            Err(TextError::PositionOutOfRange { pos: 6, len: 5 })
        );
        assert!(hello().char_at(0).is_err());
    }

    #[test]
    fn frequency_examples() {
        assert_eq!(hello().frequency('L'), 2);
        assert_eq!(hello().frequency('Z'), 0);
        assert_eq!(Word::new("AAA").unwrap().frequency('A'), 3);
    }

    #[test]
    fn first_index_examples() {
        assert_eq!(hello().first_index('L'), Some(3));
        assert_eq!(hello().first_index('H'), Some(1));
        assert_eq!(hello().first_index('Q'), None);
    }

    #[test]
    fn has_repeat_examples() {
        assert!(hello().has_repeat());
        assert!(!Word::new("A").unwrap().has_repeat());
        assert!(Word::new("ABCA").unwrap().has_repeat());
    }

    #[test]
    fn case_fold_lowercases_units_only() {
        let w = Word::with_case_fold("HeLLo", true).unwrap();
        assert_eq!(w.raw(), "HeLLo");
        assert_eq!(w.render(), "hello");
        assert_eq!(w.frequency('l'), 2);
        assert_eq!(w.frequency('L'), 0);
    }

    #[test]
    fn charset_is_sorted_and_deduped() {
        let cs = Charset::explicit("CBAAB", false).unwrap();
        assert_eq!(cs.members(), &['A', 'B', 'C']);
        assert_eq!(cs.source(), CharsetSource::ExplicitConfig);
        assert!(cs.contains('B'));
        assert!(!cs.contains('Z'));
        assert_eq!(Charset::explicit("", false), Err(TextError::EmptyCharset));
        assert_eq!(cs.digest(), Charset::explicit("ABC", false).unwrap().digest());
    }
}
