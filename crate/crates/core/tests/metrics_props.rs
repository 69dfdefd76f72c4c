mod common;

use common::oracle::brute_levenshtein;
use ocrqa_core::dataset::{parse_manifest_str, ManifestFormat};
use ocrqa_core::metrics::{cer, levenshtein, qa_score, PredictionSet};
use ocrqa_core::pipeline::generate;
use ocrqa_core::taxonomy::{answer_for_text, Category, QuestionSpec};
use ocrqa_core::{CategoryProbs, SamplingConfig};
use proptest::prelude::*;

fn short() -> impl Strategy<Value = Vec<char>> {
    proptest::collection::vec(proptest::char::range('a', 'd'), 0..=8)
}

proptest! {
    #[test]
    fn levenshtein_matches_recursive_oracle(a in short(), b in short()) {
        prop_assert_eq!(levenshtein(&a, &b), brute_levenshtein(&a, &b));
    }

    #[test]
    fn levenshtein_is_a_metric(a in short(), b in short(), c in short()) {
        let d = |x: &[char], y: &[char]| levenshtein(x, y);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &b) == 0, a == b);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }

    #[test]
    fn cer_zero_iff_exact(words in proptest::collection::vec("[A-E]{1,6}", 1..6), flip in any::<prop::sample::Index>()) {
        let tsv: String = words.iter().enumerate().map(|(i, w)| format!("{i}.png\t{w}\n")).collect();
        let refs = parse_manifest_str(&tsv, ManifestFormat::GenericTsv, false).unwrap();
        let exact: PredictionSet = words.iter().enumerate().map(|(i, w)| (i.to_string(), w.clone())).collect();
        prop_assert_eq!(cer(&exact, &refs, false).unwrap(), 0.0);
        let k = flip.index(words.len());
        let mut wrong = exact.clone();
        wrong.entries.insert(k.to_string(), format!("{}z", words[k]));
        prop_assert!(cer(&wrong, &refs, false).unwrap() > 0.0);
    }
}

#[test]
fn qa_score_on_misread_word() {
    let refs = parse_manifest_str("h.png\tHELLO\n", ManifestFormat::GenericTsv, false).unwrap();
    let cfg = SamplingConfig {
        probs: CategoryProbs::new([1.0, 0.0, 0.0, 0.0]).unwrap(),
        ..Default::default()
    };
    let mut g = generate(&refs, &cfg).unwrap();
    // pin the questions to the hand-checked ones
    let s = &mut g.samples[0];
    s.qa[1].spec = QuestionSpec::Frequency('L');
    s.qa[1].answer = ocrqa_core::Answer::numerical(2);
    s.qa[2].spec = QuestionSpec::Start('H');
    s.qa[2].answer = ocrqa_core::Answer::binary(true);

    let preds: PredictionSet = [("h", "HELO")].into_iter().collect();
    assert_eq!(answer_for_text(&QuestionSpec::Frequency('L'), "HELO", false).unwrap().value, "1");
    assert_eq!(answer_for_text(&QuestionSpec::Start('H'), "HELO", false).unwrap().value, "Yes");
    let score = qa_score(&g.samples, &preds, false).unwrap();
    // Recognition wrong, Frequency('L') = 1 != 2 wrong, Start('H') right.
    assert_eq!(score.per_category[&Category::Recognition].correct, 0);
    assert_eq!(score.per_category[&Category::Presence].correct, 0);
    assert_eq!(score.per_category[&Category::Presence].total, 1);
    assert_eq!(score.per_category[&Category::Boundary].correct, 1);
    assert_eq!(score.overall.total, 3);
}

#[test]
fn qa_score_on_empty_prediction() {
    let refs = parse_manifest_str("h.png\tHELLO\n", ManifestFormat::GenericTsv, false).unwrap();
    let mut g = generate(&refs, &SamplingConfig::default()).unwrap();
    let s = &mut g.samples[0];
    s.sampled_category = Category::Presence;
    s.qa[1].spec = QuestionSpec::Existence('Z');
    s.qa[1].question = s.qa[1].spec.render();
    s.qa[1].answer = ocrqa_core::Answer::binary(false);
    s.qa[2].spec = QuestionSpec::Existence('H');
    s.qa[2].answer = ocrqa_core::Answer::binary(true);
    let preds: PredictionSet = [("h", "")].into_iter().collect();
    let score = qa_score(&g.samples, &preds, false).unwrap();
    assert_eq!(score.per_category[&Category::Recognition].correct, 0);
    // stored "No" stays right, stored "Yes" becomes wrong
    assert_eq!(score.per_category[&Category::Presence].correct, 1);
}

#[test]
fn qa_score_requires_overlap() {
    let refs = parse_manifest_str("h.png\tHELLO\n", ManifestFormat::GenericTsv, false).unwrap();
    let g = generate(&refs, &SamplingConfig::default()).unwrap();
    let preds: PredictionSet = [("other", "HELLO")].into_iter().collect();
    assert!(qa_score(&g.samples, &preds, false).is_err());
}
