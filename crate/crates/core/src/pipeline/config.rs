use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::PipelineError;
use crate::corpus::{parse_corpus_file_name, InvalidLinePolicy, Language, LanguageTag, SourceKind};
use crate::instances::InstanceConfig;
use crate::sampler::DEFAULT_ALPHA;
use crate::vocab::VocabTrainConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusDecl {
    pub path: PathBuf,
    pub lang: LanguageTag,
    pub source: SourceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslitConfig {
    pub enabled: bool,
    /// Tables replacing or extending the bundled registry, by language.
    pub tables: BTreeMap<Language, PathBuf>,
}

impl Default for TranslitConfig {
    fn default() -> Self {
        TranslitConfig {
            enabled: true,
            tables: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpora: Vec<CorpusDecl>,
    pub alpha: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub on_invalid: InvalidLinePolicy,
    pub vocab: VocabTrainConfig,
    pub instances: InstanceConfig,
    pub translit: TranslitConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorpus {
    path: PathBuf,
    lang: Option<String>,
    source: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawTranslit {
    enabled: Option<bool>,
    tables: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawPolicy {
    Skip,
    #[default]
    Abort,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    corpus: Vec<RawCorpus>,
    corpus_dir: Option<PathBuf>,
    alpha: Option<f64>,
    #[serde(default)]
    seed: u64,
    out: Option<PathBuf>,
    #[serde(default)]
    invalid_lines: RawPolicy,
    #[serde(default)]
    vocab: VocabTrainConfig,
    #[serde(default)]
    instances: InstanceConfig,
    #[serde(default)]
    translit: RawTranslit,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn config_error(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

/// Corpus files in `dir` named `<lang>[-tr].<source>.txt` (or `.shard`),
/// sorted by file name.
pub fn discover_corpora(dir: &Path) -> Result<Vec<CorpusDecl>, PipelineError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| config_error(format!("corpus_dir {}: {e}", dir.display())))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| config_error(format!("corpus_dir {}: {e}", dir.display())))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".txt") || name.ends_with(".shard") {
            names.push(name);
        }
    }
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let (lang, source) = parse_corpus_file_name(&name).map_err(|e| config_error(e.to_string()))?;
            Ok(CorpusDecl {
                path: dir.join(&name),
                lang,
                source,
            })
        })
        .collect()
}

impl PipelineConfig {
    /// Parses TOML config text. Relative paths are taken relative to
    /// `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        let mut corpora = Vec::new();
        if let Some(dir) = &raw.corpus_dir {
            corpora.extend(discover_corpora(&resolve(base_dir, dir))?);
        }
        for c in raw.corpus {
            let path = resolve(base_dir, &c.path);
            let (lang, source) = match (c.lang, c.source) {
                (Some(l), Some(s)) => (
                    l.parse().map_err(|e: crate::corpus::CorpusError| config_error(e.to_string()))?,
                    s.parse().map_err(|e: crate::corpus::CorpusError| config_error(e.to_string()))?,
                ),
                (None, None) => {
                    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    parse_corpus_file_name(&name).map_err(|e| {
                        config_error(format!("{e}; give lang and source explicitly"))
                    })?
                }
                _ => return Err(config_error(format!("{}: lang and source go together", path.display()))),
            };
            corpora.push(CorpusDecl { path, lang, source });
        }
        let mut tables = BTreeMap::new();
        for (code, p) in raw.translit.tables {
            let lang: Language = code.parse().map_err(|e: crate::corpus::CorpusError| config_error(e.to_string()))?;
            tables.insert(lang, resolve(base_dir, &p));
        }
        let cfg = PipelineConfig {
            corpora,
            alpha: raw.alpha.unwrap_or(DEFAULT_ALPHA),
            seed: raw.seed,
            out: resolve(base_dir, raw.out.as_deref().unwrap_or(Path::new("out"))),
            on_invalid: match raw.invalid_lines {
                RawPolicy::Skip => InvalidLinePolicy::Skip,
                RawPolicy::Abort => InvalidLinePolicy::Abort,
            },
            vocab: raw.vocab,
            instances: raw.instances,
            translit: TranslitConfig {
                enabled: raw.translit.enabled.unwrap_or(true),
                tables,
            },
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Checks value ranges and that every referenced file exists. Missing
    /// files are reported together.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let missing: Vec<PathBuf> = self
            .corpora
            .iter()
            .map(|c| &c.path)
            .chain(self.translit.tables.values())
            .filter(|p| !p.is_file())
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(PipelineError::MissingFiles(missing));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(config_error(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        let e = self.vocab.smoothing_exponent;
        if !(e > 0.0 && e <= 1.0) {
            return Err(config_error(format!("vocab.smoothing_exponent {e} outside (0, 1]")));
        }
        if self.vocab.target_size == 0 || self.vocab.min_word_frequency == 0 || self.vocab.max_word_length == 0 {
            return Err(config_error(
                "vocab.target_size, min_word_frequency and max_word_length must be positive",
            ));
        }
        self.instances
            .validate()
            .map_err(|e| config_error(format!("instances: {e}")))?;
        for c in &self.corpora {
            if c.source.is_parallel() && c.lang.is_transliterated() {
                return Err(config_error(format!(
                    "{}: parallel corpora are declared by their native source language",
                    c.path.display()
                )));
            }
        }
        Ok(())
    }
}
