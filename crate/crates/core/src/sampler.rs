//! Category selection and the reproducible random-source contract.
//!
//! Every sample gets its own ChaCha20 stream whose key is the SHA-256 of
//! `(seed, pass, sample id)`. Output therefore does not depend on manifest
//! order or thread count. All draws go through [`RandomSource::uniform`],
//! which consumes exactly one `u64` per call, so the draw budget of each
//! generation step is fixed (see [`crate::taxonomy`]).

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::taxonomy::Category;

/// Name recorded in output headers. Reproducibility is promised only for
/// files carrying the same name.
pub const RNG_ALGORITHM: &str = "chacha20/sha256-substream/v1";

pub const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("invalid category distribution {0:?}: probabilities must be >= 0 and sum to 1")]
    InvalidDistribution(Vec<f64>),
    #[error("unknown preset `{0}` (expected wordart, esposalles or uniform)")]
    UnknownPreset(String),
}

pub struct RandomSource {
    rng: ChaCha20Rng,
    draws: u64,
}

impl RandomSource {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            draws: 0,
        }
    }

    /// Independent substream for one sample in one generation pass.
    pub fn for_sample(seed: u64, pass: u32, sample_id: &str) -> Self {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update(pass.to_le_bytes());
        h.update(sample_id.as_bytes());
        let key: [u8; 32] = h.finalize().into();
        Self {
            rng: ChaCha20Rng::from_seed(key),
            draws: 0,
        }
    }

    /// Uniform in [0, 1) from the top 53 bits of one `u64`.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` from one draw. `n` must be non-zero.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Fair coin from one draw.
    pub fn coin(&mut self) -> bool {
        self.uniform() < 0.5
    }

    /// Number of draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// Probabilities for the four attribute categories, in the order
/// Presence, Positional, Structural, Boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CategoryProbs([f64; 4]);

impl CategoryProbs {
    pub fn new(probs: [f64; 4]) -> Result<Self, SamplerError> {
        let ok = probs.iter().all(|p| p.is_finite() && *p >= 0.0)
            && (probs.iter().sum::<f64>() - 1.0).abs() <= PROB_TOLERANCE;
        if ok {
            Ok(Self(probs))
        } else {
            Err(SamplerError::InvalidDistribution(probs.to_vec()))
        }
    }

    pub fn from_slice(probs: &[f64]) -> Result<Self, SamplerError> {
        let arr: [f64; 4] = probs
            .try_into()
            .map_err(|_| SamplerError::InvalidDistribution(probs.to_vec()))?;
        Self::new(arr)
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, cat: Category) -> f64 {
        match cat.attribute_index() {
            Some(i) => self.0[i],
            None => 0.0,
        }
    }

    /// Inverse CDF over the fixed order Presence, Positional, Structural,
    /// Boundary. Intervals are half-open, so `u` equal to a cumulative
    /// boundary falls into the next category.
    pub fn category_for(&self, u: f64) -> Category {
        let mut cumulative = 0.0;
        for (i, p) in self.0.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                return Category::ATTRIBUTES[i];
            }
        }
        // Rounding left u above the total; take the last category that can
        // actually occur.
        let last = self.0.iter().rposition(|p| *p > 0.0).unwrap_or(3);
        Category::ATTRIBUTES[last]
    }

    pub fn sample(&self, rng: &mut RandomSource) -> Category {
        self.category_for(rng.uniform())
    }
}

impl<'de> Deserialize<'de> for CategoryProbs {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Self::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

impl FromStr for CategoryProbs {
    type Err = SamplerError;

    /// Parses `p1,p2,p3,p4`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parsed: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) => Self::from_slice(&v),
            Err(_) => Err(SamplerError::InvalidDistribution(Vec::new())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    WordArt,
    Esposalles,
    Uniform,
}

impl Preset {
    pub fn probs(self) -> CategoryProbs {
        match self {
            Preset::WordArt => CategoryProbs([0.30, 0.30, 0.25, 0.15]),
            Preset::Esposalles => CategoryProbs([0.30, 0.25, 0.30, 0.15]),
            Preset::Uniform => CategoryProbs([0.25, 0.25, 0.25, 0.25]),
        }
    }
}

impl FromStr for Preset {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wordart" => Ok(Preset::WordArt),
            "esposalles" => Ok(Preset::Esposalles),
            "uniform" => Ok(Preset::Uniform),
            _ => Err(SamplerError::UnknownPreset(s.to_owned())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::WordArt => "wordart",
            Preset::Esposalles => "esposalles",
            Preset::Uniform => "uniform",
        })
    }
}

pub fn preset(name: &str) -> Result<CategoryProbs, SamplerError> {
    Ok(name.parse::<Preset>()?.probs())
}

/// Where distractor characters come from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CharsetPolicy {
    /// Union of all transcription units in the manifest.
    #[default]
    Infer,
    Explicit(String),
}

/// Everything that determines the content of a generated file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub probs: CategoryProbs,
    pub seed: u64,
    pub case_fold: bool,
    pub charset_policy: CharsetPolicy,
    pub template_version: String,
    pub passes: u32,
    /// Let Frequency questions query characters absent from the word.
    pub frequency_absent: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            probs: Preset::Uniform.probs(),
            seed: 0,
            case_fold: false,
            charset_policy: CharsetPolicy::Infer,
            template_version: crate::taxonomy::TEMPLATE_VERSION.to_owned(),
            passes: 1,
            frequency_absent: false,
        }
    }
}

pub fn sample_category(cfg: &SamplingConfig, rng: &mut RandomSource) -> Category {
    cfg.probs.sample(rng)
}
