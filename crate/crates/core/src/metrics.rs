//! CER, WER and question-answer consistency scoring.
//!
//! CER is micro-averaged: total edit distance over total reference length,
//! as a percentage. WER defaults to the exact-match error rate over samples,
//! which is the usual definition for word-level crops; a token-level
//! variant is available for multi-word references. Missing predictions are
//! scored as empty strings.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AugmentedSample, DatasetSample};
use crate::taxonomy::{answer_for_text, Category};
use crate::text;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("reference set is empty")]
    EmptyReferenceSet,
    #[error("no prediction id matches any reference id")]
    NoOverlap,
    #[error("predictions line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("predictions: duplicate id `{0}`")]
    DuplicateId(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Edit distance with unit insert, delete and substitute costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=a.len()).collect();
    let mut cur = vec![0; a.len() + 1];
    for (j, bj) in b.iter().enumerate() {
        cur[0] = j + 1;
        for (i, ai) in a.iter().enumerate() {
            let sub = prev[i] + usize::from(ai != bj);
            cur[i + 1] = sub.min(prev[i + 1] + 1).min(cur[i] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[a.len()]
}

/// Levenshtein over normalized character units.
pub fn char_distance(pred: &str, reference: &str, case_fold: bool) -> usize {
    levenshtein(&text::units_of(pred, case_fold), &text::units_of(reference, case_fold))
}

/// Predicted transcriptions keyed by sample id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionSet {
    pub entries: BTreeMap<String, String>,
}

impl PredictionSet {
    /// Parse `<id>\t<prediction>` lines. The prediction may be empty.
    pub fn parse(content: &str) -> Result<Self, MetricsError> {
        let mut entries = BTreeMap::new();
        for (i, line) in content.split('\n').enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() {
                continue;
            }
            let (id, pred) = line.split_once('\t').ok_or_else(|| MetricsError::MalformedRow {
                line: i + 1,
                reason: "expected `<id>\\t<prediction>`".into(),
            })?;
            if entries.insert(id.to_owned(), pred.to_owned()).is_some() {
                return Err(MetricsError::DuplicateId(id.to_owned()));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        let content = std::fs::read_to_string(path).map_err(|source| MetricsError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&content)
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.entries.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<S: Into<String>> FromIterator<(S, S)> for PredictionSet {
    fn from_iter<I: IntoIterator<Item = (S, S)>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WerMode {
    /// Share of samples whose prediction differs from the reference.
    #[default]
    Exact,
    /// Whitespace-token edit distance over total reference tokens.
    Token,
}

fn pred_for<'a>(preds: &'a PredictionSet, id: &str) -> &'a str {
    preds.get(id).unwrap_or("")
}

pub fn cer(preds: &PredictionSet, refs: &[DatasetSample], case_fold: bool) -> Result<f64, MetricsError> {
    if refs.is_empty() {
        return Err(MetricsError::EmptyReferenceSet);
    }
    let (mut dist, mut len) = (0usize, 0usize);
    for r in refs {
        let reference = r.transcription.raw();
        dist += char_distance(pred_for(preds, &r.id), reference, case_fold);
        len += text::units_of(reference, case_fold).len();
    }
    Ok(100.0 * dist as f64 / len as f64)
}

pub fn wer(preds: &PredictionSet, refs: &[DatasetSample], case_fold: bool, mode: WerMode) -> Result<f64, MetricsError> {
    if refs.is_empty() {
        return Err(MetricsError::EmptyReferenceSet);
    }
    match mode {
        WerMode::Exact => {
            let wrong = refs
                .iter()
                .filter(|r| {
                    text::normalize(pred_for(preds, &r.id), case_fold)
                        != text::normalize(r.transcription.raw(), case_fold)
                })
                .count();
            Ok(100.0 * wrong as f64 / refs.len() as f64)
        }
        WerMode::Token => {
            let (mut dist, mut len) = (0usize, 0usize);
            for r in refs {
                let p = text::normalize(pred_for(preds, &r.id), case_fold);
                let t = text::normalize(r.transcription.raw(), case_fold);
                let p: Vec<&str> = p.split_whitespace().collect();
                let t: Vec<&str> = t.split_whitespace().collect();
                dist += levenshtein(&p, &t);
                len += t.len();
            }
            Ok(100.0 * dist as f64 / len as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QaScore {
    pub per_category: BTreeMap<Category, Tally>,
    pub overall: Tally,
}

/// Answer every stored question from the predicted transcription and
/// compare with the stored ground-truth answer. Oracle errors (e.g. a
/// position past the end of the prediction) count as wrong. Samples without
/// a prediction are graded against the empty string.
pub fn qa_score(samples: &[AugmentedSample], preds: &PredictionSet, case_fold: bool) -> Result<QaScore, MetricsError> {
    if !samples.iter().any(|s| preds.get(&s.id).is_some()) {
        return Err(MetricsError::NoOverlap);
    }
    let mut score = QaScore::default();
    for cat in Category::ALL {
        score.per_category.insert(cat, Tally::default());
    }
    for s in samples {
        let pred = pred_for(preds, &s.id);
        for pair in &s.qa {
            let ok = answer_for_text(&pair.spec, pred, case_fold)
                .map(|a| a.matches(&pair.answer, case_fold))
                .unwrap_or(false);
            let tally = score.per_category.entry(pair.spec.category()).or_default();
            tally.total += 1;
            score.overall.total += 1;
            if ok {
                tally.correct += 1;
                score.overall.correct += 1;
            }
        }
    }
    Ok(score)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub case_fold: bool,
    pub wer_mode: WerMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub cer_pct: f64,
    pub wer_pct: f64,
    pub wer_mode: WerMode,
    pub case_fold: bool,
    /// Fraction per category; `None` when the category has no questions.
    pub per_category_qa_accuracy: BTreeMap<String, Option<f64>>,
    pub overall_qa_accuracy: Option<f64>,
    pub evaluated: usize,
    pub missing: Vec<String>,
    /// Prediction ids with no reference.
    pub unmatched_predictions: usize,
}

/// Distinct references from an augmented file; later passes of the same id
/// are dropped.
pub fn references_from(samples: &[AugmentedSample], case_fold: bool) -> Vec<DatasetSample> {
    let mut seen = HashSet::new();
    samples
        .iter()
        .filter(|s| seen.insert(s.id.as_str()))
        .filter_map(|s| {
            Some(DatasetSample {
                id: s.id.clone(),
                image_path: s.image_path.clone(),
                transcription: text::Word::with_case_fold(&s.transcription, case_fold).ok()?,
            })
        })
        .collect()
}

pub fn evaluate(samples: &[AugmentedSample], preds: &PredictionSet, opts: EvalOptions) -> Result<EvalReport, MetricsError> {
    let refs = references_from(samples, opts.case_fold);
    let cer_pct = cer(preds, &refs, opts.case_fold)?;
    let wer_pct = wer(preds, &refs, opts.case_fold, opts.wer_mode)?;
    let qa = qa_score(samples, preds, opts.case_fold)?;
    let ref_ids: HashSet<&str> = refs.iter().map(|r| r.id.as_str()).collect();
    let missing: Vec<String> = refs.iter().filter(|r| preds.get(&r.id).is_none()).map(|r| r.id.clone()).collect();
    Ok(EvalReport {
        cer_pct,
        wer_pct,
        wer_mode: opts.wer_mode,
        case_fold: opts.case_fold,
        per_category_qa_accuracy: qa
            .per_category
            .iter()
            .map(|(c, t)| (c.name().to_owned(), t.accuracy()))
            .collect(),
        overall_qa_accuracy: qa.overall.accuracy(),
        evaluated: refs.len() - missing.len(),
        missing,
        unmatched_predictions: preds.entries.keys().filter(|k| !ref_ids.contains(k.as_str())).count(),
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CER: {:.2}%", self.cer_pct)?;
        writeln!(f, "WER: {:.2}% ({:?})", self.wer_pct, self.wer_mode)?;
        writeln!(f, "case_fold: {}", self.case_fold)?;
        writeln!(f, "samples evaluated: {}, missing predictions: {}", self.evaluated, self.missing.len())?;
        if self.unmatched_predictions > 0 {
            writeln!(f, "predictions without reference: {}", self.unmatched_predictions)?;
        }
        writeln!(f, "QA accuracy:")?;
        for (cat, acc) in &self.per_category_qa_accuracy {
            match acc {
                Some(a) => writeln!(f, "  {cat:<12} {a:.4}")?,
                None => writeln!(f, "  {cat:<12} n/a")?,
            }
        }
        match self.overall_qa_accuracy {
            Some(a) => write!(f, "  {:<12} {a:.4}", "overall"),
            None => write!(f, "  {:<12} n/a", "overall"),
        }
    }
}
