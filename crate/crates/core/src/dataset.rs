//! Manifest ingestion, the augmented line-delimited format, and validation
//! of augmented files against the answer oracle.
//!
//! An augmented file is UTF-8 with LF endings. Line 1 is a [`Header`]; each
//! following line is one [`AugmentedSample`]:
//!
//! ```text
//! {"schema":"ocrqa.augmented/1","template_version":"en-v1","rng":"...","seed":42,"probs":[0.3,0.3,0.25,0.15],...}
//! {"id":"001","image":"img/001.png","text":"HELLO","pass":0,"category":1,"qa":[{"cat":0,"sub":"base_ocr","q":"What is this word?","a":"HELLO","atype":"text"},...],"substitutions":[]}
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampler::{CategoryProbs, SamplerError};
use crate::taxonomy::{
    oracle_answer, Answer, AnswerKind, Category, OracleError, QaPair, QuestionSpec, Subcategory, Substitution,
    TEMPLATE_VERSION,
};
use crate::text::{Charset, CharsetSource, TextError, Word};

pub const SCHEMA: &str = "ocrqa.augmented/1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("line {line}: empty transcription")]
    EmptyTranscription { line: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("unsupported template version `{0}` (this build knows `{TEMPLATE_VERSION}`)")]
    UnsupportedTemplateVersion(String),
    #[error("sample `{id}`: {source}")]
    Generation {
        id: String,
        #[source]
        source: OracleError,
    },
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Text(#[from] TextError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_owned(),
        source,
    }
}

/// One image–transcription pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSample {
    pub id: String,
    pub image_path: String,
    pub transcription: Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestFormat {
    /// `<image_path>\t<transcription>[\t<id>]`
    GenericTsv,
    /// `{"id": .., "image": .., "text": ..}` per line.
    GenericJsonl,
    /// `<image_path> <label>`, split at the first run of blanks.
    WordartLayout,
    /// `<word_id>:<label>`; the image is `<word_id>.png`.
    EsposallesLayout,
}

impl FromStr for ManifestFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "generic_tsv" | "tsv" => Ok(Self::GenericTsv),
            "generic_jsonl" | "jsonl" => Ok(Self::GenericJsonl),
            "wordart_layout" | "wordart" => Ok(Self::WordartLayout),
            "esposalles_layout" | "esposalles" => Ok(Self::EsposallesLayout),
            other => Err(format!("unknown manifest format `{other}`")),
        }
    }
}

fn path_stem(p: &str) -> String {
    Path::new(p)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.to_owned())
}

#[derive(Deserialize)]
struct JsonlRow {
    id: String,
    image: String,
    text: String,
}

/// Split `line` into (image, id, text) for `format`. `None` text means the
/// transcription column is missing altogether.
fn split_row(line: &str, lineno: usize, format: ManifestFormat) -> Result<(String, String, String), DatasetError> {
    let malformed = |reason: &str| DatasetError::MalformedRow {
        line: lineno,
        reason: reason.to_owned(),
    };
    match format {
        ManifestFormat::GenericTsv => {
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                [_] => Err(malformed("missing transcription column")),
                [image, text] => Ok((image.to_string(), path_stem(image), text.to_string())),
                [image, text, id] if !id.is_empty() => Ok((image.to_string(), id.to_string(), text.to_string())),
                [_, _, _] => Err(malformed("empty id column")),
                _ => Err(malformed("expected 2 or 3 tab-separated columns")),
            }
        }
        ManifestFormat::GenericJsonl => {
            let row: JsonlRow = serde_json::from_str(line).map_err(|e| malformed(&e.to_string()))?;
            Ok((row.image, row.id, row.text))
        }
        ManifestFormat::WordartLayout => {
            let (image, rest) = line
                .split_once([' ', '\t'])
                .ok_or_else(|| malformed("missing transcription column"))?;
            Ok((image.to_owned(), path_stem(image), rest.trim_start_matches([' ', '\t']).to_owned()))
        }
        ManifestFormat::EsposallesLayout => {
            let (id, text) = line
                .split_once(':')
                .ok_or_else(|| malformed("expected `<word_id>:<transcription>`"))?;
            if id.is_empty() {
                return Err(malformed("empty word id"));
            }
            Ok((format!("{id}.png"), id.to_owned(), text.to_owned()))
        }
    }
}

/// Parse manifest text. Blank lines are skipped; line numbers in errors are
/// 1-based physical lines.
pub fn parse_manifest_str(
    content: &str,
    format: ManifestFormat,
    case_fold: bool,
) -> Result<Vec<DatasetSample>, DatasetError> {
    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for (i, line) in content.split('\n').enumerate() {
        let lineno = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let (image_path, id, text) = split_row(line, lineno, format)?;
        let transcription = Word::with_case_fold(&text, case_fold).map_err(|e| match e {
            TextError::EmptyTranscription => DatasetError::EmptyTranscription { line: lineno },
            other => DatasetError::Text(other),
        })?;
        if !seen.insert(id.clone()) {
            return Err(DatasetError::DuplicateId(id));
        }
        samples.push(DatasetSample {
            id,
            image_path,
            transcription,
        });
    }
    if samples.is_empty() {
        log::warn!("manifest contains no samples");
    }
    Ok(samples)
}

pub fn parse_manifest(
    path: &Path,
    format: ManifestFormat,
    case_fold: bool,
) -> Result<Vec<DatasetSample>, DatasetError> {
    let content = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_manifest_str(&content, format, case_fold)
}

/// Merge several manifests (e.g. the parts of a split training set). With
/// more than one part, ids are prefixed `part<k>/` (1-based).
pub fn merge_parts(parts: Vec<Vec<DatasetSample>>) -> Result<Vec<DatasetSample>, DatasetError> {
    let prefix = parts.len() > 1;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (k, part) in parts.into_iter().enumerate() {
        for mut s in part {
            if prefix {
                s.id = format!("part{}/{}", k + 1, s.id);
            }
            if !seen.insert(s.id.clone()) {
                return Err(DatasetError::DuplicateId(s.id));
            }
            out.push(s);
        }
    }
    Ok(out)
}

pub fn infer_charset(samples: &[DatasetSample]) -> Result<Charset, DatasetError> {
    if samples.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let units = samples.iter().flat_map(|s| s.transcription.units().iter().copied());
    Ok(Charset::new(units, CharsetSource::InferredFromDataset)?)
}

/// Run metadata written as the first line of every augmented file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema: String,
    pub template_version: String,
    pub rng: String,
    pub seed: u64,
    pub probs: CategoryProbs,
    pub charset_hash: String,
    pub case_fold: bool,
    pub passes: u32,
    #[serde(default)]
    pub frequency_absent: bool,
    pub charset_source: CharsetSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedSample {
    pub id: String,
    pub image_path: String,
    pub transcription: String,
    pub pass: u32,
    pub charset_hash: String,
    pub sampled_category: Category,
    /// Recognition pair first, then the sampled category's two pairs.
    pub qa: Vec<QaPair>,
    pub substitutions: Vec<Substitution>,
}

#[derive(Serialize, Deserialize)]
struct QaRow {
    cat: u8,
    sub: Subcategory,
    q: String,
    a: String,
    atype: AnswerKind,
}

#[derive(Serialize, Deserialize)]
struct RecordRow {
    id: String,
    image: String,
    text: String,
    #[serde(default)]
    pass: u32,
    category: u8,
    qa: Vec<QaRow>,
    #[serde(default)]
    substitutions: Vec<Substitution>,
}

impl From<&AugmentedSample> for RecordRow {
    fn from(s: &AugmentedSample) -> Self {
        RecordRow {
            id: s.id.clone(),
            image: s.image_path.clone(),
            text: s.transcription.clone(),
            pass: s.pass,
            category: s.sampled_category.id(),
            qa: s
                .qa
                .iter()
                .map(|p| QaRow {
                    cat: p.spec.category().id(),
                    sub: p.spec.subcategory(),
                    q: p.question.clone(),
                    a: p.answer.value.clone(),
                    atype: p.answer.kind,
                })
                .collect(),
            substitutions: s.substitutions.clone(),
        }
    }
}

/// Expected subcategories for the three slots of a record.
fn expected_layout(category: Category, substitutions: &[Substitution]) -> [Subcategory; 3] {
    let subs = category.subcategories();
    let mut slots = [Subcategory::BaseOcr, subs[0], subs[1]];
    for sub in substitutions {
        if slots[2] == sub.original() {
            slots[2] = sub.replacement();
        }
    }
    slots
}

fn record_from_row(row: RecordRow, line: usize, charset_hash: &str) -> Result<AugmentedSample, DatasetError> {
    let malformed = |reason: String| DatasetError::MalformedRecord { line, reason };
    let category = Category::from_id(row.category)
        .filter(|c| *c != Category::Recognition)
        .ok_or_else(|| malformed(format!("invalid sampled category {}", row.category)))?;
    if row.qa.len() != 3 {
        return Err(malformed(format!("expected 3 qa pairs, found {}", row.qa.len())));
    }
    let layout = expected_layout(category, &row.substitutions);
    let mut qa = Vec::with_capacity(3);
    for (i, (q, want)) in row.qa.into_iter().zip(layout).enumerate() {
        let spec = QuestionSpec::parse(&q.q).map_err(|_| malformed(format!("pair {i}: question matches no template: {:?}", q.q)))?;
        let sub = spec.subcategory();
        if sub != q.sub || sub.category().id() != q.cat || sub.answer_kind() != q.atype {
            return Err(malformed(format!("pair {i}: cat/sub/atype disagree with question text")));
        }
        if sub != want {
            return Err(malformed(format!("pair {i}: expected a {want} question, found {sub}")));
        }
        qa.push(QaPair {
            spec,
            question: q.q,
            answer: Answer {
                kind: q.atype,
                value: q.a,
            },
        });
    }
    Ok(AugmentedSample {
        id: row.id,
        image_path: row.image,
        transcription: row.text,
        pass: row.pass,
        charset_hash: charset_hash.to_owned(),
        sampled_category: category,
        qa,
        substitutions: row.substitutions,
    })
}

pub fn write_augmented_to<W: Write>(
    mut out: W,
    header: &Header,
    samples: &[AugmentedSample],
) -> std::io::Result<usize> {
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    for s in samples {
        serde_json::to_writer(&mut out, &RecordRow::from(s))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(samples.len())
}

/// Write header + records; returns the record count.
pub fn write_augmented(samples: &[AugmentedSample], header: &Header, out_path: &Path) -> Result<usize, DatasetError> {
    let file = File::create(out_path).map_err(io_err(out_path))?;
    write_augmented_to(BufWriter::new(file), header, samples).map_err(io_err(out_path))
}

/// Line-by-line reader over an augmented file.
pub struct AugmentedReader<R> {
    lines: std::io::Lines<R>,
    line: usize,
    header: Option<Header>,
}

impl<R: BufRead> AugmentedReader<R> {
    /// Reads the header. A completely empty input has no header and yields
    /// no records.
    pub fn new(reader: R) -> Result<Self, DatasetError> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            None => None,
            Some(first) => {
                let first = first.map_err(|e| DatasetError::MalformedRecord {
                    line: 1,
                    reason: e.to_string(),
                })?;
                let header: Header = serde_json::from_str(&first).map_err(|e| DatasetError::MalformedRecord {
                    line: 1,
                    reason: format!("bad header: {e}"),
                })?;
                if header.schema != SCHEMA {
                    return Err(DatasetError::MalformedRecord {
                        line: 1,
                        reason: format!("unknown schema `{}`", header.schema),
                    });
                }
                if header.template_version != TEMPLATE_VERSION {
                    return Err(DatasetError::UnsupportedTemplateVersion(header.template_version));
                }
                Some(header)
            }
        };
        Ok(Self { lines, line: 1, header })
    }

    pub fn header(&self) -> Option<&Header> {
        self.header.as_ref()
    }

    /// 1-based line number of the record last returned.
    pub fn line(&self) -> usize {
        self.line
    }
}

impl<R: BufRead> Iterator for AugmentedReader<R> {
    type Item = Result<AugmentedSample, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let raw = self.lines.next()?;
            self.line += 1;
            let line = self.line;
            let text = match raw {
                Ok(t) => t,
                Err(e) => {
                    return Some(Err(DatasetError::MalformedRecord {
                        line,
                        reason: e.to_string(),
                    }))
                }
            };
            if text.trim().is_empty() {
                continue;
            }
            let hash = self.header.as_ref().map(|h| h.charset_hash.as_str()).unwrap_or("");
            return Some(
                serde_json::from_str::<RecordRow>(&text)
                    .map_err(|e| DatasetError::MalformedRecord {
                        line,
                        reason: e.to_string(),
                    })
                    .and_then(|row| record_from_row(row, line, hash)),
            );
        }
    }
}

pub fn open_augmented(path: &Path) -> Result<AugmentedReader<BufReader<File>>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    AugmentedReader::new(BufReader::new(file))
}

/// Read a whole augmented file.
pub fn read_augmented(path: &Path) -> Result<(Option<Header>, Vec<AugmentedSample>), DatasetError> {
    let reader = open_augmented(path)?;
    let header = reader.header().cloned();
    let samples = reader.collect::<Result<Vec<_>, _>>()?;
    Ok((header, samples))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationFailure {
    pub id: String,
    pub pass: u32,
    pub line: usize,
    /// 0-based index into the record's `qa` array.
    pub pair_index: usize,
    /// Oracle answer, or the oracle's error message.
    pub expected: String,
    pub stored: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub total: usize,
    pub passed: usize,
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

fn check_sample(sample: &AugmentedSample, line: usize, case_fold: bool, report: &mut ValidationReport) -> Result<(), DatasetError> {
    let word = Word::with_case_fold(&sample.transcription, case_fold).map_err(|e| DatasetError::MalformedRecord {
        line,
        reason: e.to_string(),
    })?;
    report.total += 1;
    let before = report.failures.len();
    for (i, pair) in sample.qa.iter().enumerate() {
        let expected = match oracle_answer(&pair.spec, &word) {
            Ok(a) if a == pair.answer => continue,
            Ok(a) => a.value,
            Err(e) => format!("<{e}>"),
        };
        report.failures.push(ValidationFailure {
            id: sample.id.clone(),
            pass: sample.pass,
            line,
            pair_index: i,
            expected,
            stored: pair.answer.value.clone(),
        });
    }
    if report.failures.len() == before {
        report.passed += 1;
    }
    Ok(())
}

/// Recompute every stored answer from its record's transcription.
pub fn validate_reader<R: BufRead>(reader: R) -> Result<ValidationReport, DatasetError> {
    let mut records = AugmentedReader::new(reader)?;
    let case_fold = records.header().map(|h| h.case_fold).unwrap_or(false);
    let mut report = ValidationReport::default();
    while let Some(sample) = records.next() {
        let sample = sample?;
        check_sample(&sample, records.line(), case_fold, &mut report)?;
    }
    Ok(report)
}

pub fn validate_augmented(path: &Path) -> Result<ValidationReport, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    validate_reader(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_row_uses_path_stem() {
        let s = parse_manifest_str("img/001.png\tHELLO\n", ManifestFormat::GenericTsv, false).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].id, "001");
        assert_eq!(s[0].image_path, "img/001.png");
        assert_eq!(s[0].transcription.raw(), "HELLO");
    }

    #[test]
    fn tsv_third_column_is_id() {
        let s = parse_manifest_str("img/001.png\tHELLO\tw-7\r\n", ManifestFormat::GenericTsv, false).unwrap();
        assert_eq!(s[0].id, "w-7");
    }

    #[test]
    fn empty_manifest_is_empty_list() {
        assert!(parse_manifest_str("", ManifestFormat::GenericTsv, false).unwrap().is_empty());
        assert!(parse_manifest_str("\n\n", ManifestFormat::GenericJsonl, false).unwrap().is_empty());
    }

    #[test]
    fn missing_column_reports_line() {
        let err = parse_manifest_str("a.png\tA\nb.png\n", ManifestFormat::GenericTsv, false).unwrap_err();
        assert!(matches!(err, DatasetError::MalformedRow { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_transcription_reports_line() {
        let err = parse_manifest_str("a.png\tA\n\nc.png\t  \n", ManifestFormat::GenericTsv, false).unwrap_err();
        assert!(matches!(err, DatasetError::EmptyTranscription { line: 3 }), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse_manifest_str("x/a.png\tA\ny/a.png\tB\n", ManifestFormat::GenericTsv, false).unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateId(ref id) if id == "a"));
    }

    #[test]
    fn jsonl_rows() {
        let s = parse_manifest_str(
            "{\"id\":\"k1\",\"image\":\"i/1.jpg\",\"text\":\"noua\"}\n",
            ManifestFormat::GenericJsonl,
            false,
        )
        .unwrap();
        assert_eq!((s[0].id.as_str(), s[0].image_path.as_str()), ("k1", "i/1.jpg"));
        let err = parse_manifest_str("{\"id\":\"k1\"}\n", ManifestFormat::GenericJsonl, false).unwrap_err();
        assert!(matches!(err, DatasetError::MalformedRow { line: 1, .. }));
    }

    #[test]
    fn wordart_and_esposalles_layouts() {
        let s = parse_manifest_str("train_image/12.png  Happy Day\n", ManifestFormat::WordartLayout, false).unwrap();
        assert_eq!((s[0].id.as_str(), s[0].transcription.raw()), ("12", "Happy Day"));
        let s = parse_manifest_str("idC_1_2_3:noua\n", ManifestFormat::EsposallesLayout, false).unwrap();
        assert_eq!(s[0].image_path, "idC_1_2_3.png");
        assert_eq!(s[0].transcription.raw(), "noua");
        assert!(parse_manifest_str("noseparator\n", ManifestFormat::EsposallesLayout, false).is_err());
    }

    #[test]
    fn merge_prefixes_parts() {
        let a = parse_manifest_str("1:a\n", ManifestFormat::EsposallesLayout, false).unwrap();
        let b = parse_manifest_str("1:b\n", ManifestFormat::EsposallesLayout, false).unwrap();
        let merged = merge_parts(vec![a.clone(), b]).unwrap();
        assert_eq!(merged[0].id, "part1/1");
        assert_eq!(merged[1].id, "part2/1");
        assert_eq!(merge_parts(vec![a]).unwrap()[0].id, "1");
    }

    #[test]
    fn charset_inference() {
        let s = parse_manifest_str("a.png\tAB\nb.png\tBC\n", ManifestFormat::GenericTsv, false).unwrap();
        assert_eq!(infer_charset(&s).unwrap().members(), &['A', 'B', 'C']);
        let s = parse_manifest_str("a.png\tHELLO\n", ManifestFormat::GenericTsv, false).unwrap();
        assert_eq!(infer_charset(&s).unwrap().members(), &['E', 'H', 'L', 'O']);
        assert!(matches!(infer_charset(&[]), Err(DatasetError::EmptyDataset)));
    }

    #[test]
    fn header_template_version_is_checked() {
        let line = r#"{"schema":"ocrqa.augmented/1","template_version":"fr-v9","rng":"x","seed":1,"probs":[1,0,0,0],"charset_hash":"h","case_fold":false,"passes":1,"charset_source":"inferred-from-dataset"}"#;
        let err = validate_reader(line.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::UnsupportedTemplateVersion(ref v) if v == "fr-v9"));
    }

    #[test]
    fn empty_file_validates_vacuously() {
        let r = validate_reader(&b""[..]).unwrap();
        assert_eq!(r, ValidationReport::default());
    }
}
