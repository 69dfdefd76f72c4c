//! End-to-end generation: one recognition pair plus both pairs of a single
//! sampled attribute category for every sample and pass.

use rayon::prelude::*;

use crate::dataset::{infer_charset, AugmentedSample, DatasetError, DatasetSample, Header, SCHEMA};
use crate::sampler::{CharsetPolicy, RandomSource, SamplingConfig, RNG_ALGORITHM};
use crate::taxonomy::{generate_category_pairs, generate_recognition_pair, DistractorPolicy, OracleError};
use crate::text::Charset;

pub fn resolve_charset(samples: &[DatasetSample], cfg: &SamplingConfig) -> Result<Charset, DatasetError> {
    match &cfg.charset_policy {
        CharsetPolicy::Infer => infer_charset(samples),
        CharsetPolicy::Explicit(chars) => Ok(Charset::explicit(chars, cfg.case_fold)?),
    }
}

pub fn header_for(cfg: &SamplingConfig, charset: &Charset) -> Header {
    Header {
        schema: SCHEMA.to_owned(),
        template_version: cfg.template_version.clone(),
        rng: RNG_ALGORITHM.to_owned(),
        seed: cfg.seed,
        probs: cfg.probs,
        charset_hash: charset.digest(),
        case_fold: cfg.case_fold,
        passes: cfg.passes,
        frequency_absent: cfg.frequency_absent,
        charset_source: charset.source(),
    }
}

/// Augment one sample for one pass. The random stream is keyed on
/// `(seed, pass, id)`: one draw picks the category, then the category's
/// fixed draw budget is spent.
pub fn augment_sample(
    sample: &DatasetSample,
    pass: u32,
    cfg: &SamplingConfig,
    charset: &Charset,
) -> Result<AugmentedSample, OracleError> {
    let mut rng = RandomSource::for_sample(cfg.seed, pass, &sample.id);
    let category = cfg.probs.sample(&mut rng);
    let policy = DistractorPolicy {
        frequency_absent: cfg.frequency_absent,
    };
    let word = &sample.transcription;
    let generated = generate_category_pairs(word, category, charset, policy, &mut rng)?;
    let [a, b] = generated.pairs;
    Ok(AugmentedSample {
        id: sample.id.clone(),
        image_path: sample.image_path.clone(),
        transcription: word.raw().to_owned(),
        pass,
        charset_hash: charset.digest(),
        sampled_category: category,
        qa: vec![generate_recognition_pair(word), a, b],
        substitutions: generated.substitution.into_iter().collect(),
    })
}

#[derive(Debug)]
pub struct Generated {
    pub header: Header,
    pub samples: Vec<AugmentedSample>,
}

/// Generate all passes. Records are ordered pass-major, then in manifest
/// order. Work is spread over the current rayon pool; the output does not
/// depend on its size.
pub fn generate(samples: &[DatasetSample], cfg: &SamplingConfig) -> Result<Generated, DatasetError> {
    if cfg.template_version != crate::taxonomy::TEMPLATE_VERSION {
        return Err(DatasetError::UnsupportedTemplateVersion(cfg.template_version.clone()));
    }
    let charset = resolve_charset(samples, cfg)?;
    let header = header_for(cfg, &charset);
    let jobs: Vec<(u32, &DatasetSample)> = (0..cfg.passes).flat_map(|p| samples.iter().map(move |s| (p, s))).collect();
    let out = jobs
        .par_iter()
        .map(|&(pass, s)| {
            augment_sample(s, pass, cfg, &charset).map_err(|source| DatasetError::Generation {
                id: s.id.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Generated { header, samples: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_manifest_str, ManifestFormat};
    use crate::sampler::{CategoryProbs, Preset};
    use crate::taxonomy::{Category, QuestionSpec};

    fn manifest() -> Vec<DatasetSample> {
        parse_manifest_str("a.png\tHELLO\nb.png\tWORLD\nc.png\tAAA\n", ManifestFormat::GenericTsv, false).unwrap()
    }

    #[test]
    fn every_sample_gets_three_pairs() {
        let cfg = SamplingConfig {
            probs: Preset::WordArt.probs(),
            seed: 42,
            passes: 2,
            ..Default::default()
        };
        let g = generate(&manifest(), &cfg).unwrap();
        assert_eq!(g.samples.len(), 6);
        for s in &g.samples {
            assert_eq!(s.qa.len(), 3);
            assert_eq!(s.qa[0].spec, QuestionSpec::BaseOcr);
            assert_eq!(s.qa[1].spec.category(), s.sampled_category);
        }
        assert_eq!(g.samples[3].pass, 1);
        assert_eq!(g.samples[3].id, "a");
    }

    #[test]
    fn degenerate_probs_fix_category() {
        let cfg = SamplingConfig {
            probs: CategoryProbs::new([0.0, 0.0, 0.0, 1.0]).unwrap(),
            ..Default::default()
        };
        let g = generate(&manifest(), &cfg).unwrap();
        assert!(g.samples.iter().all(|s| s.sampled_category == Category::Boundary));
    }

    #[test]
    fn explicit_charset_must_cover_words() {
        let cfg = SamplingConfig {
            charset_policy: CharsetPolicy::Explicit("HELO".into()),
            probs: CategoryProbs::new([1.0, 0.0, 0.0, 0.0]).unwrap(),
            ..Default::default()
        };
        let err = generate(&manifest(), &cfg).unwrap_err();
        assert!(matches!(err, DatasetError::Generation { ref id, .. } if id == "b"), "{err}");
    }

    #[test]
    fn unknown_template_version_refused() {
        let cfg = SamplingConfig {
            template_version: "en-v0".into(),
            ..Default::default()
        };
        assert!(matches!(
            generate(&manifest(), &cfg),
            Err(DatasetError::UnsupportedTemplateVersion(_))
        ));
    }
}
