//! MLM and TLM training instances.

mod record;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DocumentRecord, LanguageTag, PairKind, ParallelPair};
use crate::seed::rng_for;
use crate::vocab::{Vocabulary, CLS_ID, MASK_ID, SEP_ID};

pub use record::{
    read_record_file, read_records, write_record_file, write_records, RecordError, RecordFile,
    RECORD_MAGIC, RECORD_VERSION,
};

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("max_seq_len must be between 5 and 65535, got {0}")]
    SeqLen(usize),
    #[error("mask_rate must be in (0, 1), got {0}")]
    MaskRate(f64),
    #[error("corruption fractions must be non-negative and sum to 1, got {0}, {1}, {2}")]
    Fractions(f64, f64, f64),
    #[error("max_predictions must be between 1 and max_seq_len, got {0}")]
    MaxPredictions(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceConfig {
    pub max_seq_len: usize,
    pub mask_rate: f64,
    pub mask_token_frac: f64,
    pub random_frac: f64,
    pub keep_frac: f64,
    /// Set from the pipeline seed.
    #[serde(skip)]
    pub seed: u64,
    /// Defaults to `ceil(max_seq_len * mask_rate)`.
    pub max_predictions: Option<usize>,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            max_seq_len: 512,
            mask_rate: 0.15,
            mask_token_frac: 0.8,
            random_frac: 0.1,
            keep_frac: 0.1,
            seed: 0,
            max_predictions: None,
        }
    }
}

impl InstanceConfig {
    pub fn validate(&self) -> Result<(), InstanceError> {
        if !(5..=u16::MAX as usize).contains(&self.max_seq_len) {
            return Err(InstanceError::SeqLen(self.max_seq_len));
        }
        if !(self.mask_rate > 0.0 && self.mask_rate < 1.0) {
            return Err(InstanceError::MaskRate(self.mask_rate));
        }
        let f = [self.mask_token_frac, self.random_frac, self.keep_frac];
        if f.iter().any(|x| !(*x >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(InstanceError::Fractions(f[0], f[1], f[2]));
        }
        let mp = self.max_predictions();
        if mp == 0 || mp > self.max_seq_len {
            return Err(InstanceError::MaxPredictions(mp));
        }
        Ok(())
    }

    pub fn max_predictions(&self) -> usize {
        self.max_predictions
            .unwrap_or_else(|| (self.max_seq_len as f64 * self.mask_rate).ceil() as usize)
    }

    /// Number of positions to select among `n` candidates.
    pub fn num_to_mask(&self, n: usize) -> usize {
        if n == 0 {
            return 0;
        }
        let k = (self.mask_rate * n as f64 + 0.5).floor() as usize;
        k.max(1).min(self.max_predictions()).min(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Mlm,
    Tlm,
}

impl Objective {
    pub fn to_byte(self) -> u8 {
        match self {
            Objective::Mlm => 0,
            Objective::Tlm => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Objective::Mlm),
            1 => Some(Objective::Tlm),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Mlm => "mlm",
            Objective::Tlm => "tlm",
        }
    }
}

/// What happened to a selected position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corruption {
    Mask,
    Random,
    Keep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingInstance {
    pub objective: Objective,
    pub pair_kind: Option<PairKind>,
    pub lang_src: LanguageTag,
    pub lang_tgt: Option<LanguageTag>,
    pub token_ids: Vec<u32>,
    /// 0 or 1 per token.
    pub segment_ids: Vec<u8>,
    pub masked_positions: Vec<u32>,
    /// Original ids at `masked_positions`.
    pub masked_labels: Vec<u32>,
}

impl TrainingInstance {
    /// Token ids with every masked position restored to its label.
    pub fn original_ids(&self) -> Vec<u32> {
        let mut ids = self.token_ids.clone();
        for (&p, &l) in self.masked_positions.iter().zip(&self.masked_labels) {
            ids[p as usize] = l;
        }
        ids
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check(&self, max_seq_len: usize, max_predictions: usize) -> Result<(), String> {
        let n = self.token_ids.len();
        if n > max_seq_len {
            return Err(format!("length {n} exceeds {max_seq_len}"));
        }
        if self.segment_ids.len() != n {
            return Err("segment length differs from token length".into());
        }
        let orig = self.original_ids();
        if orig.first() != Some(&CLS_ID) {
            return Err("does not start with [CLS]".into());
        }
        let seps: Vec<usize> = (0..n).filter(|&i| orig[i] == SEP_ID).collect();
        let want = match self.objective {
            Objective::Mlm => 1,
            Objective::Tlm => 2,
        };
        if seps.len() != want || seps.last() != Some(&(n - 1)) {
            return Err(format!("expected {want} [SEP] with one at the end"));
        }
        for (i, &s) in self.segment_ids.iter().enumerate() {
            let expected = u8::from(i > seps[0]);
            if s != expected {
                return Err(format!("segment id {s} at {i}"));
            }
        }
        if self.objective == Objective::Tlm && (seps[0] < 2 || seps[1] - seps[0] < 2) {
            return Err("empty segment".into());
        }
        if self.masked_positions.len() != self.masked_labels.len()
            || self.masked_positions.len() > max_predictions
        {
            return Err("bad mask count".into());
        }
        if !self.masked_positions.windows(2).all(|w| w[0] < w[1]) {
            return Err("masked positions not strictly increasing".into());
        }
        for &p in &self.masked_positions {
            let p = p as usize;
            if p >= n || p == 0 || seps.contains(&p) {
                return Err(format!("masked position {p} is a special slot"));
            }
        }
        Ok(())
    }
}

/// A selected position with its original id and how it was corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskedSlot {
    pub position: u32,
    pub label: u32,
    pub corruption: Corruption,
}

/// Selects `cfg.num_to_mask(candidates.len())` of `candidates` uniformly
/// without replacement and corrupts them in `ids`. Returned slots are
/// sorted by position.
pub fn mask_tokens<R: Rng>(
    ids: &mut [u32],
    candidates: &[u32],
    vocab: &Vocabulary,
    cfg: &InstanceConfig,
    rng: &mut R,
) -> Vec<MaskedSlot> {
    let k = cfg.num_to_mask(candidates.len());
    let mut picked: Vec<u32> = index::sample(rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    picked.sort_unstable();
    let regular = vocab.regular_ids();
    picked
        .into_iter()
        .map(|position| {
            let slot = &mut ids[position as usize];
            let label = *slot;
            let u: f64 = rng.random();
            let corruption = if u < cfg.mask_token_frac {
                *slot = MASK_ID;
                Corruption::Mask
            } else if u < cfg.mask_token_frac + cfg.random_frac {
                if !regular.is_empty() {
                    *slot = rng.random_range(regular.clone());
                }
                Corruption::Random
            } else {
                Corruption::Keep
            };
            MaskedSlot {
                position,
                label,
                corruption,
            }
        })
        .collect()
}

fn finish(
    mut ids: Vec<u32>,
    segment_ids: Vec<u8>,
    candidates: &[u32],
    vocab: &Vocabulary,
    cfg: &InstanceConfig,
    seed_parts: &[u64],
) -> (Vec<u32>, Vec<u8>, Vec<u32>, Vec<u32>) {
    let mut rng = rng_for(cfg.seed, seed_parts);
    let slots = mask_tokens(&mut ids, candidates, vocab, cfg, &mut rng);
    let positions = slots.iter().map(|s| s.position).collect();
    let labels = slots.iter().map(|s| s.label).collect();
    (ids, segment_ids, positions, labels)
}

/// MLM instances for one pass over `doc`. `pass` distinguishes repeated
/// copies of an upsampled document so each copy gets its own masking.
pub fn build_mlm_pass(
    doc: &DocumentRecord,
    pass: u32,
    vocab: &Vocabulary,
    cfg: &InstanceConfig,
) -> Vec<TrainingInstance> {
    let tokens = vocab.tokenize(doc.text());
    let chunk_len = cfg.max_seq_len - 2;
    tokens
        .chunks(chunk_len)
        .enumerate()
        .map(|(chunk_index, chunk)| {
            let mut ids = Vec::with_capacity(chunk.len() + 2);
            ids.push(CLS_ID);
            ids.extend_from_slice(chunk);
            ids.push(SEP_ID);
            let candidates: Vec<u32> = (1..=chunk.len() as u32).collect();
            let segments = vec![0; ids.len()];
            let parts = [
                Objective::Mlm.to_byte() as u64,
                doc.id.0,
                pass as u64,
                chunk_index as u64,
            ];
            let (token_ids, segment_ids, masked_positions, masked_labels) =
                finish(ids, segments, &candidates, vocab, cfg, &parts);
            TrainingInstance {
                objective: Objective::Mlm,
                pair_kind: None,
                lang_src: doc.lang,
                lang_tgt: None,
                token_ids,
                segment_ids,
                masked_positions,
                masked_labels,
            }
        })
        .collect()
}

pub fn build_mlm(doc: &DocumentRecord, vocab: &Vocabulary, cfg: &InstanceConfig) -> Vec<TrainingInstance> {
    build_mlm_pass(doc, 0, vocab, cfg)
}

/// Shrinks the longer side one token at a time (the target on ties) until
/// both fit in `budget`.
pub fn truncate_pair(mut src: usize, mut tgt: usize, budget: usize) -> (usize, usize) {
    while src + tgt > budget {
        if src > tgt {
            src -= 1;
        } else {
            tgt -= 1;
        }
    }
    (src, tgt)
}

/// One TLM instance `[CLS] src [SEP] tgt [SEP]`, or none when either side
/// tokenizes to nothing.
pub fn build_tlm(pair: &ParallelPair, vocab: &Vocabulary, cfg: &InstanceConfig) -> Vec<TrainingInstance> {
    let src = vocab.tokenize(pair.src().text());
    let tgt = vocab.tokenize(pair.tgt().text());
    if src.is_empty() || tgt.is_empty() {
        return Vec::new();
    }
    let (s, t) = truncate_pair(src.len(), tgt.len(), cfg.max_seq_len - 3);
    let mut ids = Vec::with_capacity(s + t + 3);
    ids.push(CLS_ID);
    ids.extend_from_slice(&src[..s]);
    ids.push(SEP_ID);
    ids.extend_from_slice(&tgt[..t]);
    ids.push(SEP_ID);
    let mut segments = vec![0u8; s + 2];
    segments.resize(ids.len(), 1);
    let candidates: Vec<u32> = (1..=s as u32).chain(s as u32 + 2..=(s + t + 1) as u32).collect();
    let kind = match pair.kind() {
        PairKind::Translated => 1,
        PairKind::Transliterated => 2,
    };
    let parts = [Objective::Tlm.to_byte() as u64, pair.src().id.0, pair.tgt().id.0, kind];
    let (token_ids, segment_ids, masked_positions, masked_labels) =
        finish(ids, segments, &candidates, vocab, cfg, &parts);
    vec![TrainingInstance {
        objective: Objective::Tlm,
        pair_kind: Some(pair.kind()),
        lang_src: pair.src().lang,
        lang_tgt: Some(pair.tgt().lang),
        token_ids,
        segment_ids,
        masked_positions,
        masked_labels,
    }]
}
