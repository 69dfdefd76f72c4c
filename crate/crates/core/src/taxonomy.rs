//! The question taxonomy: five categories of two subcategories each (the
//! recognition category has one), frozen English templates, the answer
//! oracle, and per-category pair generation.
//!
//! # Distractor policy and draw budget
//!
//! Each subcategory consumes a fixed number of uniform draws from the
//! sample's [`RandomSource`], whether or not every draw ends up used:
//!
//! | subcategory | draws | parameters |
//! |-------------|-------|------------|
//! | Existence   | 2 | coin; heads = present char, tails = char from `charset \ word` (falls back to present when that set is empty) |
//! | Frequency   | 1 | present char (2 draws, Existence-style, when absent chars are allowed) |
//! | Position    | 1 | position uniform in `1..=len` |
//! | Relation    | 2 | ordered pair of distinct present chars; one distinct char ⇒ Position from the first draw |
//! | Length      | 0 | |
//! | Repetition  | 0 | |
//! | Start / End | 2 | coin; heads = true boundary char, tails = another charset char (falls back to the boundary char) |
//!
//! Candidate characters are always indexed in ascending scalar order.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampler::RandomSource;
use crate::text::{self, Charset, TextError, Word};

/// Version tag of the template set below. Files carrying another tag are
/// refused by validation.
pub const TEMPLATE_VERSION: &str = "en-v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("position {pos} is out of range for a word of length {len}")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("character '{0}' does not occur in the word")]
    CharacterNotInWord(char),
    #[error("relation question needs two distinct characters, got '{0}' twice")]
    RepeatedRelationCharacter(char),
    #[error("no valid question exists for this word")]
    DegenerateWord,
    #[error("charset does not contain word character '{0}'")]
    CharsetIncomplete(char),
    #[error("recognition is not an attribute category")]
    NotAnAttributeCategory,
    #[error("question does not match any template: {0:?}")]
    UnrecognizedQuestion(String),
}

impl From<TextError> for OracleError {
    fn from(e: TextError) -> Self {
        match e {
            TextError::PositionOutOfRange { pos, len } => OracleError::PositionOutOfRange { pos, len },
            _ => OracleError::DegenerateWord,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Recognition = 0,
    Presence = 1,
    Positional = 2,
    Structural = 3,
    Boundary = 4,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Recognition,
        Category::Presence,
        Category::Positional,
        Category::Structural,
        Category::Boundary,
    ];

    /// The four categories a sample can draw its extra questions from.
    pub const ATTRIBUTES: [Category; 4] = [
        Category::Presence,
        Category::Positional,
        Category::Structural,
        Category::Boundary,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    /// Index into [`Category::ATTRIBUTES`], `None` for Recognition.
    pub fn attribute_index(self) -> Option<usize> {
        (self != Category::Recognition).then(|| self as usize - 1)
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Recognition => "recognition",
            Category::Presence => "presence",
            Category::Positional => "positional",
            Category::Structural => "structural",
            Category::Boundary => "boundary",
        }
    }

    pub fn subcategories(self) -> &'static [Subcategory] {
        use Subcategory::*;
        match self {
            Category::Recognition => &[BaseOcr],
            Category::Presence => &[Existence, Frequency],
            Category::Positional => &[Position, Relation],
            Category::Structural => &[Length, Repetition],
            Category::Boundary => &[Start, End],
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Category {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.id())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let id = u8::deserialize(d)?;
        Category::from_id(id).ok_or_else(|| serde::de::Error::custom(format!("unknown category id {id}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcategory {
    #[serde(rename = "base_ocr")]
    BaseOcr,
    Existence,
    Frequency,
    Position,
    Relation,
    Length,
    Repetition,
    Start,
    End,
}

impl Subcategory {
    pub const ALL: [Subcategory; 9] = [
        Subcategory::BaseOcr,
        Subcategory::Existence,
        Subcategory::Frequency,
        Subcategory::Position,
        Subcategory::Relation,
        Subcategory::Length,
        Subcategory::Repetition,
        Subcategory::Start,
        Subcategory::End,
    ];

    pub fn category(self) -> Category {
        use Subcategory::*;
        match self {
            BaseOcr => Category::Recognition,
            Existence | Frequency => Category::Presence,
            Position | Relation => Category::Positional,
            Length | Repetition => Category::Structural,
            Start | End => Category::Boundary,
        }
    }

    pub fn answer_kind(self) -> AnswerKind {
        use Subcategory::*;
        match self {
            BaseOcr => AnswerKind::Text,
            Existence | Relation | Repetition | Start | End => AnswerKind::Binary,
            Frequency | Length => AnswerKind::Numerical,
            Position => AnswerKind::Character,
        }
    }

    pub fn name(self) -> &'static str {
        use Subcategory::*;
        match self {
            BaseOcr => "base_ocr",
            Existence => "existence",
            Frequency => "frequency",
            Position => "position",
            Relation => "relation",
            Length => "length",
            Repetition => "repetition",
            Start => "start",
            End => "end",
        }
    }
}

impl fmt::Display for Subcategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A question with its parameters. Positions are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuestionSpec {
    BaseOcr,
    Existence(char),
    Frequency(char),
    Position(usize),
    /// Does the first char come before the second?
    Relation(char, char),
    Length,
    Repetition,
    Start(char),
    End(char),
}

impl QuestionSpec {
    pub fn subcategory(&self) -> Subcategory {
        match self {
            QuestionSpec::BaseOcr => Subcategory::BaseOcr,
            QuestionSpec::Existence(_) => Subcategory::Existence,
            QuestionSpec::Frequency(_) => Subcategory::Frequency,
            QuestionSpec::Position(_) => Subcategory::Position,
            QuestionSpec::Relation(..) => Subcategory::Relation,
            QuestionSpec::Length => Subcategory::Length,
            QuestionSpec::Repetition => Subcategory::Repetition,
            QuestionSpec::Start(_) => Subcategory::Start,
            QuestionSpec::End(_) => Subcategory::End,
        }
    }

    pub fn category(&self) -> Category {
        self.subcategory().category()
    }

    pub fn render(&self) -> String {
        render_question(self)
    }

    /// Inverse of [`render_question`]. Anything that is not a template
    /// instantiated with valid parameters is rejected.
    pub fn parse(question: &str) -> Result<Self, OracleError> {
        parse_question(question).ok_or_else(|| OracleError::UnrecognizedQuestion(question.to_owned()))
    }
}

pub fn render_question(spec: &QuestionSpec) -> String {
    match *spec {
        QuestionSpec::BaseOcr => "What is this word?".to_owned(),
        QuestionSpec::Existence(c) => format!("Is the character '{c}' in this word?"),
        QuestionSpec::Frequency(c) => format!("How many times does '{c}' appear?"),
        QuestionSpec::Position(p) => format!("What is the character at position {p}?"),
        QuestionSpec::Relation(x, y) => format!("Does '{x}' come before '{y}' in this word?"),
        QuestionSpec::Length => "What is the total number of characters?".to_owned(),
        QuestionSpec::Repetition => "Is there any repeated character?".to_owned(),
        QuestionSpec::Start(c) => format!("Does this word start with '{c}'?"),
        QuestionSpec::End(c) => format!("Does this word end with '{c}'?"),
    }
}

/// `prefix` + one char + `suffix`, exactly.
fn one_char_between(q: &str, prefix: &str, suffix: &str) -> Option<char> {
    let mid = q.strip_prefix(prefix)?.strip_suffix(suffix)?;
    let mut it = mid.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

fn parse_question(q: &str) -> Option<QuestionSpec> {
    match q {
        "What is this word?" => return Some(QuestionSpec::BaseOcr),
        "What is the total number of characters?" => return Some(QuestionSpec::Length),
        "Is there any repeated character?" => return Some(QuestionSpec::Repetition),
        _ => {}
    }
    if let Some(c) = one_char_between(q, "Is the character '", "' in this word?") {
        return Some(QuestionSpec::Existence(c));
    }
    if let Some(c) = one_char_between(q, "How many times does '", "' appear?") {
        return Some(QuestionSpec::Frequency(c));
    }
    if let Some(c) = one_char_between(q, "Does this word start with '", "'?") {
        return Some(QuestionSpec::Start(c));
    }
    if let Some(c) = one_char_between(q, "Does this word end with '", "'?") {
        return Some(QuestionSpec::End(c));
    }
    if let Some(digits) = q
        .strip_prefix("What is the character at position ")
        .and_then(|r| r.strip_suffix('?'))
    {
        let canonical = !digits.is_empty()
            && digits.bytes().all(|b| b.is_ascii_digit())
            && !digits.starts_with('0');
        return if canonical {
            digits.parse().ok().map(QuestionSpec::Position)
        } else {
            None
        };
    }
    // Both parameters are single units, so their positions are fixed.
    let rest = q.strip_prefix("Does '")?;
    let mut it = rest.chars();
    let x = it.next()?;
    let rest = it.as_str().strip_prefix("' come before '")?;
    let mut it = rest.chars();
    let y = it.next()?;
    if it.as_str() != "' in this word?" || x == y {
        return None;
    }
    Some(QuestionSpec::Relation(x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerKind {
    Text,
    Binary,
    Numerical,
    Character,
}

/// A canonical answer string tagged with its type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Answer {
    pub kind: AnswerKind,
    pub value: String,
}

impl Answer {
    pub fn text(s: &str) -> Self {
        Self {
            kind: AnswerKind::Text,
            value: s.to_owned(),
        }
    }

    pub fn binary(b: bool) -> Self {
        Self {
            kind: AnswerKind::Binary,
            value: if b { "Yes" } else { "No" }.to_owned(),
        }
    }

    pub fn numerical(n: usize) -> Self {
        Self {
            kind: AnswerKind::Numerical,
            value: n.to_string(),
        }
    }

    pub fn character(c: char) -> Self {
        Self {
            kind: AnswerKind::Character,
            value: c.to_string(),
        }
    }

    /// Whether `value` is in canonical form for `kind`.
    pub fn is_canonical(&self) -> bool {
        match self.kind {
            AnswerKind::Text => !self.value.is_empty(),
            AnswerKind::Binary => self.value == "Yes" || self.value == "No",
            AnswerKind::Numerical => {
                !self.value.is_empty()
                    && self.value.bytes().all(|b| b.is_ascii_digit())
                    && (self.value == "0" || !self.value.starts_with('0'))
            }
            AnswerKind::Character => self.value.chars().count() == 1,
        }
    }

    /// Equality used when grading. Text answers compare after
    /// normalization (and folding when `case_fold`); the rest are exact.
    pub fn matches(&self, other: &Answer, case_fold: bool) -> bool {
        if self.kind != other.kind {
            return false;
        }
        match self.kind {
            AnswerKind::Text => text::normalize(&self.value, case_fold) == text::normalize(&other.value, case_fold),
            _ => self.value == other.value,
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaPair {
    pub spec: QuestionSpec,
    pub question: String,
    pub answer: Answer,
}

impl QaPair {
    fn answered(spec: QuestionSpec, word: &Word) -> Result<Self, OracleError> {
        Ok(Self {
            spec,
            question: render_question(&spec),
            answer: oracle_answer(&spec, word)?,
        })
    }
}

/// The answer to `spec` for `word`, computed from the ground-truth text.
pub fn oracle_answer(spec: &QuestionSpec, word: &Word) -> Result<Answer, OracleError> {
    answer_from_units(spec, word.raw(), word.units(), word.case_fold())
}

/// Oracle over a raw string that may be empty, such as a model prediction.
/// On an empty string every position-dependent question fails with
/// `PositionOutOfRange` and Relation fails with `CharacterNotInWord`.
pub fn answer_for_text(spec: &QuestionSpec, raw: &str, case_fold: bool) -> Result<Answer, OracleError> {
    let units = text::units_of(raw, case_fold);
    answer_from_units(spec, raw, &units, case_fold)
}

fn answer_from_units(
    spec: &QuestionSpec,
    raw: &str,
    units: &[char],
    case_fold: bool,
) -> Result<Answer, OracleError> {
    let fold = |c: char| text::normalize_char(c, case_fold).unwrap_or(c);
    let answer = match *spec {
        QuestionSpec::BaseOcr => Answer::text(raw),
        QuestionSpec::Existence(c) => Answer::binary(text::frequency(units, fold(c)) >= 1),
        QuestionSpec::Frequency(c) => Answer::numerical(text::frequency(units, fold(c))),
        QuestionSpec::Position(p) => Answer::character(text::char_at(units, p)?),
        QuestionSpec::Relation(x, y) => {
            let (x, y) = (fold(x), fold(y));
            if x == y {
                return Err(OracleError::RepeatedRelationCharacter(x));
            }
            let xi = text::first_index(units, x).ok_or(OracleError::CharacterNotInWord(x))?;
            let yi = text::first_index(units, y).ok_or(OracleError::CharacterNotInWord(y))?;
            Answer::binary(xi < yi)
        }
        QuestionSpec::Length => Answer::numerical(units.len()),
        QuestionSpec::Repetition => Answer::binary(text::has_repeat(units)),
        QuestionSpec::Start(c) => Answer::binary(text::char_at(units, 1)? == fold(c)),
        QuestionSpec::End(c) => Answer::binary(text::char_at(units, units.len())? == fold(c)),
    };
    Ok(answer)
}

pub fn generate_recognition_pair(word: &Word) -> QaPair {
    QaPair {
        spec: QuestionSpec::BaseOcr,
        question: render_question(&QuestionSpec::BaseOcr),
        answer: Answer::text(word.raw()),
    }
}

/// A slot whose question was replaced because the word could not support it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Substitution {
    /// Word has a single distinct character; a second Position question
    /// stands in for Relation.
    #[serde(rename = "relation->position")]
    RelationToPosition,
}

impl Substitution {
    pub fn original(self) -> Subcategory {
        match self {
            Substitution::RelationToPosition => Subcategory::Relation,
        }
    }

    pub fn replacement(self) -> Subcategory {
        match self {
            Substitution::RelationToPosition => Subcategory::Position,
        }
    }
}

/// Knobs of the distractor policy that are not fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DistractorPolicy {
    /// Allow Frequency to query characters absent from the word (answer 0).
    pub frequency_absent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryPairs {
    pub pairs: [QaPair; 2],
    pub substitution: Option<Substitution>,
}

fn pick<T: Copy>(items: &[T], u: f64) -> T {
    let i = ((u * items.len() as f64) as usize).min(items.len() - 1);
    items[i]
}

/// Present character on heads, otherwise one of `absent`; present when
/// `absent` is empty.
fn present_or_absent(present: &[char], absent: &[char], rng: &mut RandomSource) -> char {
    let heads = rng.coin();
    let u = rng.uniform();
    if heads || absent.is_empty() {
        pick(present, u)
    } else {
        pick(absent, u)
    }
}

fn boundary_or_other(boundary: char, charset: &Charset, rng: &mut RandomSource) -> char {
    let heads = rng.coin();
    let u = rng.uniform();
    let others: Vec<char> = charset.members().iter().copied().filter(|&c| c != boundary).collect();
    if heads || others.is_empty() {
        boundary
    } else {
        pick(&others, u)
    }
}

/// The two question-answer pairs of one attribute category for `word`.
pub fn generate_category_pairs(
    word: &Word,
    category: Category,
    charset: &Charset,
    policy: DistractorPolicy,
    rng: &mut RandomSource,
) -> Result<CategoryPairs, OracleError> {
    if category == Category::Recognition {
        return Err(OracleError::NotAnAttributeCategory);
    }
    let present = word.distinct();
    if present.is_empty() {
        return Err(OracleError::DegenerateWord);
    }
    if let Some(&missing) = present.iter().find(|&&c| !charset.contains(c)) {
        return Err(OracleError::CharsetIncomplete(missing));
    }
    let absent: Vec<char> = charset.members().iter().copied().filter(|c| present.binary_search(c).is_err()).collect();

    let mut substitution = None;
    let specs = match category {
        Category::Presence => {
            let existence = present_or_absent(&present, &absent, rng);
            let frequency = if policy.frequency_absent {
                present_or_absent(&present, &absent, rng)
            } else {
                pick(&present, rng.uniform())
            };
            [QuestionSpec::Existence(existence), QuestionSpec::Frequency(frequency)]
        }
        Category::Positional => {
            let positions: Vec<usize> = (1..=word.len()).collect();
            let position = pick(&positions, rng.uniform());
            let (u1, u2) = (rng.uniform(), rng.uniform());
            let second = if present.len() >= 2 {
                let i = ((u1 * present.len() as f64) as usize).min(present.len() - 1);
                let rest: Vec<char> = present.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &c)| c).collect();
                QuestionSpec::Relation(present[i], pick(&rest, u2))
            } else {
                substitution = Some(Substitution::RelationToPosition);
                QuestionSpec::Position(pick(&positions, u1))
            };
            [QuestionSpec::Position(position), second]
        }
        Category::Structural => [QuestionSpec::Length, QuestionSpec::Repetition],
        Category::Boundary => {
            let first = word.char_at(1)?;
            let last = word.char_at(word.len())?;
            [
                QuestionSpec::Start(boundary_or_other(first, charset, rng)),
                QuestionSpec::End(boundary_or_other(last, charset, rng)),
            ]
        }
        Category::Recognition => unreachable!(),
    };
    let [a, b] = specs;
    Ok(CategoryPairs {
        pairs: [QaPair::answered(a, word)?, QaPair::answered(b, word)?],
        substitution,
    })
}

/// Draws consumed by [`generate_category_pairs`] for `category`.
pub fn draw_budget(category: Category, policy: DistractorPolicy) -> u64 {
    match category {
        Category::Recognition | Category::Structural => 0,
        Category::Presence => {
            if policy.frequency_absent {
                4
            } else {
                3
            }
        }
        Category::Positional => 3,
        Category::Boundary => 4,
    }
}
