//! Histograms over an augmented dataset.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::dataset::AugmentedSample;
use crate::taxonomy::{AnswerKind, Category, Subcategory};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetStats {
    pub samples: usize,
    pub categories: BTreeMap<Category, usize>,
    pub subcategories: BTreeMap<Subcategory, usize>,
    pub answer_types: BTreeMap<AnswerKind, usize>,
    pub yes: usize,
    pub no: usize,
    pub substitutions: usize,
    /// Transcription length in units -> sample count.
    pub lengths: BTreeMap<usize, usize>,
}

impl DatasetStats {
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a AugmentedSample>) -> Self {
        let mut st = DatasetStats::default();
        for s in samples {
            st.add(s);
        }
        st
    }

    pub fn add(&mut self, s: &AugmentedSample) {
        self.samples += 1;
        *self.categories.entry(s.sampled_category).or_default() += 1;
        for p in &s.qa {
            *self.subcategories.entry(p.spec.subcategory()).or_default() += 1;
            *self.answer_types.entry(p.answer.kind).or_default() += 1;
            if p.answer.kind == AnswerKind::Binary {
                if p.answer.value == "Yes" {
                    self.yes += 1;
                } else {
                    self.no += 1;
                }
            }
        }
        self.substitutions += s.substitutions.len();
        let len = crate::text::units_of(&s.transcription, false).len();
        *self.lengths.entry(len).or_default() += 1;
    }

    /// Share of samples whose sampled category is `cat`.
    pub fn category_share(&self, cat: Category) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        self.categories.get(&cat).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    pub fn yes_ratio(&self) -> Option<f64> {
        let n = self.yes + self.no;
        (n > 0).then(|| self.yes as f64 / n as f64)
    }
}

fn pct(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * n as f64 / total as f64
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples: {}", self.samples)?;
        writeln!(f, "sampled categories:")?;
        for cat in Category::ATTRIBUTES {
            let n = self.categories.get(&cat).copied().unwrap_or(0);
            writeln!(f, "  {:<12} {n:>8} ({:.2}%)", cat.name(), pct(n, self.samples))?;
        }
        let pairs: usize = self.subcategories.values().sum();
        writeln!(f, "subcategories:")?;
        for (sub, n) in &self.subcategories {
            writeln!(f, "  {:<12} {n:>8} ({:.2}%)", sub.name(), pct(*n, pairs))?;
        }
        writeln!(f, "answer types:")?;
        for (kind, n) in &self.answer_types {
            writeln!(f, "  {:<12} {n:>8} ({:.2}%)", format!("{kind:?}").to_lowercase(), pct(*n, pairs))?;
        }
        match self.yes_ratio() {
            Some(r) => writeln!(f, "yes/no: {}/{} (yes ratio {r:.4})", self.yes, self.no)?,
            None => writeln!(f, "yes/no: 0/0")?,
        }
        writeln!(f, "substitutions: {}", self.substitutions)?;
        write!(f, "transcription lengths:")?;
        for (len, n) in &self.lengths {
            write!(f, "\n  {len:>4} {n:>8}")?;
        }
        Ok(())
    }
}
