use std::io::Write;

use ocrqa_core::dataset::{
    parse_manifest_str, read_augmented, validate_augmented, write_augmented, DatasetError, ManifestFormat,
};
use ocrqa_core::pipeline::generate;
use ocrqa_core::{Preset, SamplingConfig};
use proptest::prelude::*;

fn manifest_text(words: &[String]) -> String {
    words.iter().enumerate().map(|(i, w)| format!("img/{i:04}.png\t{w}\n")).collect()
}

fn config(seed: u64, passes: u32) -> SamplingConfig {
    SamplingConfig {
        probs: Preset::WordArt.probs(),
        seed,
        passes,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn write_then_read_reconstructs_samples(
        words in proptest::collection::vec("[A-Za-z'é]{1,12}", 1..20),
        seed in any::<u64>(),
        passes in 1u32..3,
    ) {
        let samples = parse_manifest_str(&manifest_text(&words), ManifestFormat::GenericTsv, false).unwrap();
        let g = generate(&samples, &config(seed, passes)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("aug.jsonl");
        let n = write_augmented(&g.samples, &g.header, &path).unwrap();
        prop_assert_eq!(n, words.len() * passes as usize);
        let (header, back) = read_augmented(&path).unwrap();
        prop_assert_eq!(header.as_ref(), Some(&g.header));
        prop_assert_eq!(&back, &g.samples);
        let report = validate_augmented(&path).unwrap();
        prop_assert!(report.is_clean());
        prop_assert_eq!(report.total, n);
        prop_assert_eq!(report.passed, n);
    }
}

#[test]
fn one_sample_writes_two_lines() {
    let samples = parse_manifest_str("a.png\tHELLO\n", ManifestFormat::GenericTsv, false).unwrap();
    let g = generate(&samples, &config(1, 1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("aug.jsonl");
    assert_eq!(write_augmented(&g.samples, &g.header, &path).unwrap(), 1);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.ends_with('\n') && !text.contains('\r'));
    let header: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in ["schema", "template_version", "rng", "seed", "probs", "charset_hash", "case_fold", "passes"] {
        assert!(header.get(key).is_some(), "{key}");
    }
    let rec: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    for key in ["id", "image", "text", "category", "qa"] {
        assert!(rec.get(key).is_some(), "{key}");
    }
    for pair in rec["qa"].as_array().unwrap() {
        for key in ["cat", "sub", "q", "a", "atype"] {
            assert!(pair.get(key).is_some(), "{key}");
        }
    }
}

#[test]
fn wordart_sized_output_line_count() {
    let words: Vec<String> = (0..4805).map(|i| format!("W{}", i % 97)).collect();
    let samples = parse_manifest_str(&manifest_text(&words), ManifestFormat::GenericTsv, false).unwrap();
    let g = generate(&samples, &config(5, 1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("aug.jsonl");
    write_augmented(&g.samples, &g.header, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4806);
}

#[test]
fn output_is_byte_stable_and_order_independent() {
    let words: Vec<String> = ["HELLO", "noua", "AAA", "Wörd", "xy"].iter().map(|s| s.to_string()).collect();
    let text = manifest_text(&words);
    let samples = parse_manifest_str(&text, ManifestFormat::GenericTsv, false).unwrap();
    let mut reversed = samples.clone();
    reversed.reverse();
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, s: &[ocrqa_core::DatasetSample]| {
        let g = generate(s, &config(42, 2)).unwrap();
        let p = dir.path().join(name);
        write_augmented(&g.samples, &g.header, &p).unwrap();
        std::fs::read(&p).unwrap()
    };
    assert_eq!(write("a", &samples), write("b", &samples));
    let (_, fwd) = read_augmented(&dir.path().join("a")).unwrap();
    write("c", &reversed);
    let (_, rev) = read_augmented(&dir.path().join("c")).unwrap();
    for s in &fwd {
        let twin = rev.iter().find(|r| r.id == s.id && r.pass == s.pass).unwrap();
        assert_eq!(twin, s);
    }
}

fn generated_file(dir: &tempfile::TempDir) -> std::path::PathBuf {
    let samples = parse_manifest_str("a.png\tHELLO\nb.png\tWORLD\n", ManifestFormat::GenericTsv, false).unwrap();
    let cfg = SamplingConfig {
        probs: ocrqa_core::CategoryProbs::new([1.0, 0.0, 0.0, 0.0]).unwrap(),
        ..Default::default()
    };
    let g = generate(&samples, &cfg).unwrap();
    let path = dir.path().join("aug.jsonl");
    write_augmented(&g.samples, &g.header, &path).unwrap();
    path
}

#[test]
fn corrupted_answer_is_localized() {
    let dir = tempfile::tempdir().unwrap();
    let path = generated_file(&dir);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    // Frequency answers are the only numerical ones under the Presence-only config.
    let mut rec: serde_json::Value = serde_json::from_str(&lines[2]).unwrap();
    let stored = rec["qa"][2]["a"].as_str().unwrap().to_owned();
    let bumped = (stored.parse::<usize>().unwrap() + 1).to_string();
    rec["qa"][2]["a"] = serde_json::Value::String(bumped.clone());
    lines[2] = serde_json::to_string(&rec).unwrap();
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "{}", lines.join("\n")).unwrap();

    let report = validate_augmented(&path).unwrap();
    assert_eq!(report.total, 2);
    assert_eq!(report.passed, 1);
    assert_eq!(report.failures.len(), 1);
    let fail = &report.failures[0];
    assert_eq!((fail.id.as_str(), fail.pair_index), ("b", 2));
    assert_eq!((fail.expected.as_str(), fail.stored.as_str()), (stored.as_str(), bumped.as_str()));
}

#[test]
fn tampered_question_is_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let path = generated_file(&dir);
    let text = std::fs::read_to_string(&path).unwrap();
    let tampered = text.replacen("How many times does", "How often does", 1);
    std::fs::write(&path, tampered).unwrap();
    let err = validate_augmented(&path).unwrap_err();
    assert!(matches!(err, DatasetError::MalformedRecord { .. }), "{err}");
}
