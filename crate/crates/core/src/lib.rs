//! Character-level question-answer augmentation for OCR datasets.
//!
//! Every image–transcription pair becomes a recognition question ("What is
//! this word?") plus both questions of one attribute category (presence,
//! positional, structural or boundary) picked with configurable
//! probabilities. Answers always come from the ground-truth text, so any
//! augmented file can be re-checked against [`taxonomy::oracle_answer`].
//! The [`metrics`] module grades OCR predictions with CER, WER and QA
//! consistency.

pub mod dataset;
pub mod metrics;
pub mod pipeline;
pub mod sampler;
pub mod stats;
pub mod taxonomy;
pub mod text;

pub use dataset::{AugmentedSample, DatasetError, DatasetSample, Header, ManifestFormat, ValidationReport};
pub use metrics::{EvalOptions, EvalReport, PredictionSet, WerMode};
pub use sampler::{CategoryProbs, CharsetPolicy, Preset, RandomSource, SamplingConfig};
pub use taxonomy::{Answer, AnswerKind, Category, QaPair, QuestionSpec, Subcategory};
pub use text::{Charset, Word};
