//! Config file loading and flag/file/default resolution.
//!
//! The config file is TOML. Every key is optional and every key can be
//! overridden by the matching command-line flag:
//!
//! ```toml
//! seed = 42
//! preset = "wordart"          # or: probs = [0.3, 0.3, 0.25, 0.15]
//! case_fold = false
//! passes = 1
//! charset = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"   # omit to infer from the manifest
//! frequency_absent = false
//! threads = 0                 # 0 = one per core
//! template_version = "en-v1"
//! ```

use std::path::Path;

use anyhow::{bail, Context};
use ocrqa_core::sampler::{CategoryProbs, CharsetPolicy, Preset, SamplingConfig};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub preset: Option<String>,
    pub probs: Option<Vec<f64>>,
    pub case_fold: Option<bool>,
    pub passes: Option<u32>,
    pub charset: Option<String>,
    pub frequency_absent: Option<bool>,
    pub threads: Option<usize>,
    pub template_version: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub preset: Option<String>,
    pub probs: Option<String>,
    pub case_fold: bool,
    pub passes: Option<u32>,
    pub charset: Option<String>,
    pub frequency_absent: bool,
}

/// Errors here are usage errors: the caller maps them to exit code 64.
pub fn resolve(file: &ConfigFile, flags: &Overrides) -> anyhow::Result<SamplingConfig> {
    if flags.preset.is_some() && flags.probs.is_some() {
        bail!("--preset and --probs are mutually exclusive");
    }
    let probs = if let Some(p) = &flags.probs {
        p.parse::<CategoryProbs>()?
    } else if let Some(name) = &flags.preset {
        name.parse::<Preset>()?.probs()
    } else if let Some(p) = &file.probs {
        CategoryProbs::from_slice(p)?
    } else if let Some(name) = &file.preset {
        name.parse::<Preset>()?.probs()
    } else {
        Preset::Uniform.probs()
    };
    let passes = flags.passes.or(file.passes).unwrap_or(1);
    if passes == 0 {
        bail!("passes must be at least 1");
    }
    let defaults = SamplingConfig::default();
    Ok(SamplingConfig {
        probs,
        seed: flags.seed.or(file.seed).unwrap_or(defaults.seed),
        case_fold: flags.case_fold || file.case_fold.unwrap_or(false),
        charset_policy: match flags.charset.as_ref().or(file.charset.as_ref()) {
            Some(chars) => CharsetPolicy::Explicit(chars.clone()),
            None => CharsetPolicy::Infer,
        },
        template_version: file.template_version.clone().unwrap_or(defaults.template_version),
        passes,
        frequency_absent: flags.frequency_absent || file.frequency_absent.unwrap_or(false),
    })
}
