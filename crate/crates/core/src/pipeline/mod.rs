//! Config-driven orchestration of the whole pipeline.

mod config;

use std::collections::BTreeMap;
use std::error::Error as StdError;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{
    ingest, ingest_pairs, CorpusStats, DocumentRecord, IngestOptions, PairKind, ParallelPair, SourceKind,
};
use crate::instances::{build_mlm_pass, build_tlm, write_records, Objective, TrainingInstance};
use crate::sampler::{build_plan, materialize, SamplingError, SamplingPlan, Upsampled};
use crate::translit::{make_translit_pairs, RomanizationTable, TableRegistry, TranslitReport};
use crate::vocab::{collect_word_freqs, fertility, script_composition, smooth_and_merge, train_vocab, Vocabulary};

pub use config::{discover_corpora, CorpusDecl, PipelineConfig, TranslitConfig};

type BoxError = Box<dyn StdError + Send + Sync>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing input files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingFiles(Vec<PathBuf>),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: BoxError,
    },
}

impl PipelineError {
    /// 2 for configuration problems, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::MissingFiles(_) => 2,
            PipelineError::Stage { .. } => 1,
        }
    }
}

fn stage<E: Into<BoxError>>(stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        source: e.into(),
    }
}

/// Everything read from the declared corpora.
#[derive(Debug, Default)]
pub struct Corpus {
    /// Monolingual documents in declaration order.
    pub docs: Vec<DocumentRecord>,
    /// Pairs read from parallel corpus files.
    pub pairs: Vec<ParallelPair>,
    /// Lines dropped: invalid UTF-8 under the skip policy, or empty pair sides.
    pub skipped_lines: u64,
}

/// Reads every declared corpus. Transliteration corpora are left out when
/// transliteration is disabled.
pub fn load_corpus(cfg: &PipelineConfig) -> Result<Corpus, PipelineError> {
    let loaded: Vec<Result<Corpus, PipelineError>> = cfg
        .corpora
        .par_iter()
        .enumerate()
        .map(|(i, decl)| {
            let opts = IngestOptions {
                shard_index: i as u32,
                on_invalid: cfg.on_invalid,
            };
            let mut part = Corpus::default();
            if decl.source.is_parallel() {
                if decl.source == SourceKind::ParallelTransliteration && !cfg.translit.enabled {
                    return Ok(part);
                }
                let p = ingest_pairs(&decl.path, decl.lang.lang(), decl.source, opts).map_err(stage("ingest"))?;
                part.pairs = p.pairs;
                part.skipped_lines = p.skipped_empty + p.skipped_invalid;
            } else {
                let mut reader = ingest(&decl.path, decl.lang, decl.source, opts).map_err(stage("ingest"))?;
                for doc in reader.by_ref() {
                    part.docs.push(doc.map_err(stage("ingest"))?);
                }
                part.skipped_lines = reader.skipped();
            }
            Ok(part)
        })
        .collect();
    let mut corpus = Corpus::default();
    for part in loaded {
        let part = part?;
        corpus.docs.extend(part.docs);
        corpus.pairs.extend(part.pairs);
        corpus.skipped_lines += part.skipped_lines;
    }
    Ok(corpus)
}

/// Counts over monolingual documents and both sides of every pair.
pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut stats = CorpusStats::par_count(&corpus.docs);
    for p in &corpus.pairs {
        stats.add_document(p.src());
        stats.add_document(p.tgt());
    }
    stats
}

/// Upsampling plan over the Wikipedia portion; empty without Wikipedia
/// documents.
pub fn sampling_plan(stats: &CorpusStats, alpha: f64) -> Result<SamplingPlan, PipelineError> {
    match build_plan(stats, SourceKind::Wikipedia, alpha) {
        Err(SamplingError::EmptyCorpusSet) => Ok(SamplingPlan {
            alpha,
            entries: Vec::new(),
            excluded: Vec::new(),
        }),
        other => other.map_err(stage("plan")),
    }
}

/// The monolingual training stream: Wikipedia documents upsampled per
/// `plan`, language by language, followed by every other monolingual
/// document once.
pub fn upsample<'a>(
    plan: &SamplingPlan,
    docs: &'a [DocumentRecord],
    seed: u64,
) -> Result<Vec<Upsampled<'a>>, PipelineError> {
    let mut out = Vec::new();
    for entry in &plan.entries {
        let lang_docs: Vec<&DocumentRecord> = docs
            .iter()
            .filter(|d| d.source == SourceKind::Wikipedia && d.lang == entry.lang)
            .collect();
        out.extend(materialize(lang_docs.iter().copied(), entry.multiplier, seed).map_err(stage("upsample"))?);
    }
    out.extend(
        docs.iter()
            .filter(|d| d.source != SourceKind::Wikipedia)
            .map(|doc| Upsampled { pass: 0, doc }),
    );
    Ok(out)
}

pub fn table_registry(cfg: &TranslitConfig) -> Result<TableRegistry, PipelineError> {
    let mut reg = TableRegistry::bundled();
    for (&lang, path) in &cfg.tables {
        let table = RomanizationTable::load(path).map_err(stage("translit"))?;
        reg.register(lang, Arc::new(table));
    }
    Ok(reg)
}

/// Romanized counterparts of the Wikipedia documents.
pub fn translit_pairs(
    cfg: &PipelineConfig,
    docs: &[DocumentRecord],
) -> Result<(Vec<ParallelPair>, TranslitReport), PipelineError> {
    if !cfg.translit.enabled {
        return Ok((Vec::new(), TranslitReport::default()));
    }
    let registry = table_registry(&cfg.translit)?;
    let wiki: Vec<DocumentRecord> = docs
        .iter()
        .filter(|d| d.source == SourceKind::Wikipedia && !d.lang.is_transliterated())
        .cloned()
        .collect();
    Ok(make_translit_pairs(&wiki, &registry))
}

/// Trains on the upsampled monolingual stream plus both sides of `pairs`.
pub fn train_vocabulary(
    cfg: &PipelineConfig,
    mono: &[Upsampled<'_>],
    pairs: &[ParallelPair],
) -> Result<Vocabulary, PipelineError> {
    let docs = mono
        .iter()
        .map(|u| u.doc)
        .chain(pairs.iter().flat_map(|p| [p.src(), p.tgt()]));
    let freqs = collect_word_freqs(docs, cfg.vocab.max_word_length);
    let weights = smooth_and_merge(&freqs, cfg.vocab.smoothing_exponent).map_err(stage("vocab"))?;
    train_vocab(&weights, &cfg.vocab).map_err(stage("vocab"))
}

fn instance_config(cfg: &PipelineConfig) -> crate::instances::InstanceConfig {
    let mut ic = cfg.instances.clone();
    ic.seed = cfg.seed;
    ic
}

pub fn mlm_instances(cfg: &PipelineConfig, mono: &[Upsampled<'_>], vocab: &Vocabulary) -> Vec<TrainingInstance> {
    let ic = instance_config(cfg);
    mono.par_iter()
        .flat_map_iter(|u| build_mlm_pass(u.doc, u.pass, vocab, &ic))
        .collect()
}

pub fn tlm_instances(cfg: &PipelineConfig, pairs: &[ParallelPair], vocab: &Vocabulary) -> Vec<TrainingInstance> {
    let ic = instance_config(cfg);
    pairs.par_iter().flat_map_iter(|p| build_tlm(p, vocab, &ic)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslitSummary {
    pub enabled: bool,
    pub skipped_no_table: BTreeMap<String, u64>,
    pub rejected: u64,
}

/// What `cmd_build` produced. Every count can be recomputed from the
/// artifacts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub seed: u64,
    pub alpha: f64,
    pub vocab_size: usize,
    pub documents: BTreeMap<String, u64>,
    pub pairs: BTreeMap<String, u64>,
    pub translit: TranslitSummary,
    pub instances: BTreeMap<String, u64>,
    /// Pairs with an empty side after tokenization.
    pub tlm_dropped: u64,
    pub skipped_lines: u64,
    pub artifacts: BTreeMap<String, Artifact>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

struct OutDir {
    dir: PathBuf,
    artifacts: BTreeMap<String, Artifact>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| stage("write")(io_at(dir, e)))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            artifacts: BTreeMap::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        std::fs::write(&path, &bytes).map_err(|e| stage("write")(io_at(&path, e)))?;
        self.artifacts.insert(
            name.to_string(),
            Artifact {
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            },
        );
        Ok(())
    }
}

fn io_at(path: &Path, e: std::io::Error) -> BoxError {
    format!("{}: {e}", path.display()).into()
}

fn csv_bytes<F>(name: &'static str, f: F) -> Result<Vec<u8>, PipelineError>
where
    F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(stage(name))?;
    Ok(buf)
}

/// Runs every stage and writes `stats.csv`, `plan.csv`, `vocab.txt`,
/// `fertility.csv`, `script.csv`, `mlm.murc`, `tlm.murc` and
/// `manifest.json` into the output directory.
pub fn cmd_build(cfg: &PipelineConfig) -> Result<Manifest, PipelineError> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let stats = corpus_stats(&corpus);
    let plan = sampling_plan(&stats, cfg.alpha)?;
    let (generated, report) = translit_pairs(cfg, &corpus.docs)?;
    let mono = upsample(&plan, &corpus.docs, cfg.seed)?;
    let all_pairs: Vec<ParallelPair> = corpus.pairs.iter().chain(&generated).cloned().collect();
    let vocab = train_vocabulary(cfg, &mono, &all_pairs)?;
    let fert = fertility(&corpus.docs, &vocab);
    let script = script_composition(&vocab);
    let mlm = mlm_instances(cfg, &mono, &vocab);
    let tlm = tlm_instances(cfg, &all_pairs, &vocab);

    let mut out = OutDir::create(&cfg.out)?;
    out.put("stats.csv", csv_bytes("stats", |b| stats.write_csv(b))?)?;
    out.put("plan.csv", csv_bytes("plan", |b| plan.write_csv(b))?)?;
    out.put("vocab.txt", vocab.to_text().into_bytes())?;
    out.put("fertility.csv", csv_bytes("fertility", |b| fert.write_csv(b))?)?;
    out.put("script.csv", csv_bytes("script", |b| script.write_csv(b))?)?;
    let hash = vocab.content_hash();
    for (name, insts) in [("mlm.murc", &mlm), ("tlm.murc", &tlm)] {
        let mut buf = Vec::new();
        write_records(&mut buf, &hash, insts.iter()).map_err(stage("instances"))?;
        out.put(name, buf)?;
    }

    let count_kind = |pairs: &[ParallelPair], k: PairKind| pairs.iter().filter(|p| p.kind() == k).count() as u64;
    let tlm_kind = |k: PairKind| tlm.iter().filter(|i| i.pair_kind == Some(k)).count() as u64;
    let manifest = Manifest {
        seed: cfg.seed,
        alpha: cfg.alpha,
        vocab_size: vocab.len(),
        documents: BTreeMap::from([
            ("monolingual".to_string(), corpus.docs.len() as u64),
            ("upsampled".to_string(), mono.len() as u64),
        ]),
        pairs: BTreeMap::from([
            ("translated".to_string(), count_kind(&all_pairs, PairKind::Translated)),
            ("transliterated".to_string(), count_kind(&all_pairs, PairKind::Transliterated)),
            ("transliterated_generated".to_string(), generated.len() as u64),
        ]),
        translit: TranslitSummary {
            enabled: cfg.translit.enabled,
            skipped_no_table: report
                .skipped_no_table
                .iter()
                .map(|(l, n)| (l.to_string(), *n))
                .collect(),
            rejected: report.rejected,
        },
        instances: BTreeMap::from([
            (Objective::Mlm.name().to_string(), mlm.len() as u64),
            ("tlm_translated".to_string(), tlm_kind(PairKind::Translated)),
            ("tlm_transliterated".to_string(), tlm_kind(PairKind::Transliterated)),
        ]),
        tlm_dropped: (all_pairs.len() - tlm.len()) as u64,
        skipped_lines: corpus.skipped_lines,
        artifacts: out.artifacts.clone(),
    };
    out.put("manifest.json", manifest.to_json().into_bytes())?;
    Ok(manifest)
}

pub fn cmd_stats<W: Write>(cfg: &PipelineConfig, out: W) -> Result<CorpusStats, PipelineError> {
    cfg.validate()?;
    let stats = corpus_stats(&load_corpus(cfg)?);
    stats.write_csv(out).map_err(stage("stats"))?;
    Ok(stats)
}

pub fn cmd_plan<W: Write>(cfg: &PipelineConfig, out: W) -> Result<SamplingPlan, PipelineError> {
    cfg.validate()?;
    let stats = corpus_stats(&load_corpus(cfg)?);
    let plan = sampling_plan(&stats, cfg.alpha)?;
    plan.write_csv(out).map_err(stage("plan"))?;
    Ok(plan)
}

/// Writes `<lang>.parallel_transliteration.txt` files (native TAB
/// romanized) into the output directory, one per language.
pub fn cmd_translit(cfg: &PipelineConfig) -> Result<TranslitReport, PipelineError> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let mut cfg = cfg.clone();
    cfg.translit.enabled = true;
    let (pairs, report) = translit_pairs(&cfg, &corpus.docs)?;
    let mut by_lang: BTreeMap<String, String> = BTreeMap::new();
    for p in &pairs {
        let s = by_lang.entry(p.src().lang.to_string()).or_default();
        s.push_str(p.src().text());
        s.push('\t');
        s.push_str(p.tgt().text());
        s.push('\n');
    }
    let mut out = OutDir::create(&cfg.out)?;
    for (lang, text) in by_lang {
        out.put(&format!("{lang}.parallel_transliteration.txt"), text.into_bytes())?;
    }
    Ok(report)
}

/// Trains and writes `vocab.txt` and `script.csv`.
pub fn cmd_train_vocab(cfg: &PipelineConfig) -> Result<Vocabulary, PipelineError> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let stats = corpus_stats(&corpus);
    let plan = sampling_plan(&stats, cfg.alpha)?;
    let (generated, _) = translit_pairs(cfg, &corpus.docs)?;
    let mono = upsample(&plan, &corpus.docs, cfg.seed)?;
    let pairs: Vec<ParallelPair> = corpus.pairs.into_iter().chain(generated).collect();
    let vocab = train_vocabulary(cfg, &mono, &pairs)?;
    let mut out = OutDir::create(&cfg.out)?;
    out.put("vocab.txt", vocab.to_text().into_bytes())?;
    let script = script_composition(&vocab);
    out.put("script.csv", csv_bytes("script", |b| script.write_csv(b))?)?;
    Ok(vocab)
}

/// Fertility of `vocab` over the declared monolingual corpora.
pub fn cmd_fertility<W: Write>(
    cfg: &PipelineConfig,
    vocab: &Vocabulary,
    out: W,
) -> Result<crate::vocab::FertilityReport, PipelineError> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let report = fertility(&corpus.docs, vocab);
    report.write_csv(out).map_err(stage("fertility"))?;
    Ok(report)
}
