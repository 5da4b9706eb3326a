use std::path::{Path, PathBuf};

use annoqa::analysis::BleuVariant;
use annoqa::baselines::{SpanRule, SplitStrategy};
use annoqa::GeneratorConfig;
use anyhow::{Context, Result};
use serde::Deserialize;

/// Defaults read from a TOML file; command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub split: SplitDefaults,
    pub generator: GeneratorConfig,
    pub bleu: Option<BleuVariant>,
    pub sif: Option<bool>,
    pub em_rule: Option<SpanRule>,
    pub strict: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub lf: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitDefaults {
    pub strategy: Option<SplitStrategy>,
    pub ratio: Option<f64>,
}

pub const DEFAULT_SEED: u64 = 42;

impl RunConfig {
    /// Reads the file; relative paths in it are resolved against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.corpus,
            &mut p.templates,
            &mut p.lf,
            &mut p.schema,
            &mut p.kb,
            &mut p.vectors,
            &mut p.out,
        ] {
            if let Some(v) = slot.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        }
        Ok(cfg)
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(DEFAULT_SEED)
    }
}

/// The flag if given, else the configured path; an error naming the flag
/// when neither is set or the path does not exist.
pub fn require(flag: &Option<PathBuf>, configured: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    let p = flag
        .clone()
        .or_else(|| configured.clone())
        .with_context(|| format!("--{name} is required"))?;
    anyhow::ensure!(p.exists(), "--{name}: {} does not exist", p.display());
    Ok(p)
}

pub fn optional(flag: &Option<PathBuf>, configured: &Option<PathBuf>, name: &str) -> Result<Option<PathBuf>> {
    match flag.clone().or_else(|| configured.clone()) {
        None => Ok(None),
        Some(p) => {
            anyhow::ensure!(p.exists(), "--{name}: {} does not exist", p.display());
            Ok(Some(p))
        }
    }
}
