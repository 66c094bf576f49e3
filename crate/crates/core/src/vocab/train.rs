use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{VocabError, Vocabulary, DEFAULT_CONTINUATION_PREFIX, SPECIALS};
use crate::corpus::{pretokenize, DocumentRecord, LanguageTag};

/// Merged word weights are quantized to `1 / WEIGHT_SCALE` before training
/// so that all counting is exact integer arithmetic.
pub const WEIGHT_SCALE: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabTrainConfig {
    /// Total vocabulary size including the special tokens.
    pub target_size: usize,
    pub smoothing_exponent: f64,
    /// Merging stops once no adjacent pair occurs at least this often.
    pub min_word_frequency: u64,
    /// Longer words are dropped when collecting frequencies.
    pub max_word_length: usize,
    /// Characters seeded as both word-initial and continuation pieces even
    /// if the training words do not contain them.
    pub initial_alphabet: Vec<char>,
    pub continuation_prefix: String,
}

impl Default for VocabTrainConfig {
    fn default() -> Self {
        VocabTrainConfig {
            target_size: 8000,
            smoothing_exponent: 1.0,
            min_word_frequency: 2,
            max_word_length: 100,
            initial_alphabet: Vec::new(),
            continuation_prefix: DEFAULT_CONTINUATION_PREFIX.to_string(),
        }
    }
}

/// Word counts per language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordFreqs {
    pub per_lang: BTreeMap<LanguageTag, HashMap<String, u64>>,
    /// Words longer than the length cap, not counted.
    pub dropped_long: u64,
}

impl WordFreqs {
    pub fn add_text(&mut self, lang: LanguageTag, text: &str, max_word_length: usize) {
        let map = self.per_lang.entry(lang).or_default();
        for w in pretokenize(text) {
            if w.chars().count() > max_word_length {
                self.dropped_long += 1;
            } else {
                *map.entry(w.to_string()).or_default() += 1;
            }
        }
    }

    pub fn merge(&mut self, other: WordFreqs) {
        self.dropped_long += other.dropped_long;
        for (lang, words) in other.per_lang {
            let map = self.per_lang.entry(lang).or_default();
            for (w, c) in words {
                *map.entry(w).or_default() += c;
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.per_lang.values().all(HashMap::is_empty)
    }
}

/// Counts pretokenized words per language.
pub fn collect_word_freqs<'a, I>(docs: I, max_word_length: usize) -> WordFreqs
where
    I: IntoIterator<Item = &'a DocumentRecord>,
{
    let docs: Vec<&DocumentRecord> = docs.into_iter().collect();
    docs.par_chunks(256)
        .map(|chunk| {
            let mut f = WordFreqs::default();
            for d in chunk {
                f.add_text(d.lang, d.text(), max_word_length);
            }
            f
        })
        .reduce(WordFreqs::default, |mut a, b| {
            a.merge(b);
            a
        })
}

/// Rescales each language's total mass `T_l` to be proportional to
/// `T_l^exponent` (keeping the overall mass) and sums word weights across
/// languages. Exponent 1 is plain summation.
pub fn smooth_and_merge(
    freqs: &WordFreqs,
    exponent: f64,
) -> Result<BTreeMap<String, f64>, VocabError> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(VocabError::ExponentOutOfRange(exponent));
    }
    let masses: Vec<(LanguageTag, f64)> = freqs
        .per_lang
        .iter()
        .map(|(l, m)| (*l, m.values().sum::<u64>() as f64))
        .collect();
    let total: f64 = masses.iter().map(|(_, m)| m).sum();
    let smoothed_total: f64 = masses.iter().map(|(_, m)| m.powf(exponent)).sum();
    let mut merged = BTreeMap::new();
    for (lang, mass) in masses {
        let factor = if exponent == 1.0 || mass == 0.0 {
            1.0
        } else {
            mass.powf(exponent - 1.0) * total / smoothed_total
        };
        for (w, &c) in &freqs.per_lang[&lang] {
            *merged.entry(w.clone()).or_insert(0.0) += c as f64 * factor;
        }
    }
    Ok(merged)
}

type Pair = (u32, u32);

struct Trainer<'a> {
    prefix: &'a str,
    pieces: Vec<String>,
    piece_ids: HashMap<String, u32>,
    piece_count: Vec<u64>,
    pair_count: HashMap<Pair, u64>,
    pair_words: HashMap<Pair, Vec<u32>>,
    words: Vec<(Vec<u32>, u64)>,
}

impl<'a> Trainer<'a> {
    fn intern(&mut self, s: String) -> u32 {
        if let Some(&id) = self.piece_ids.get(&s) {
            return id;
        }
        let id = self.pieces.len() as u32;
        self.piece_ids.insert(s.clone(), id);
        self.pieces.push(s);
        self.piece_count.push(0);
        id
    }

    fn body(&self, id: u32) -> &str {
        let s = &self.pieces[id as usize];
        s.strip_prefix(self.prefix).filter(|b| !b.is_empty()).unwrap_or(s)
    }

    fn merged_string(&self, (l, r): Pair) -> String {
        let mut s = self.pieces[l as usize].clone();
        s.push_str(self.body(r));
        s
    }

    fn account(&mut self, w: u32, sign: i8) {
        let (seq, weight) = &self.words[w as usize];
        let weight = *weight;
        for &p in seq {
            let c = &mut self.piece_count[p as usize];
            *c = if sign > 0 { *c + weight } else { *c - weight };
        }
        for pair in seq.windows(2).map(|x| (x[0], x[1])) {
            if sign > 0 {
                *self.pair_count.entry(pair).or_default() += weight;
                self.pair_words.entry(pair).or_default().push(w);
            } else if let Some(c) = self.pair_count.get_mut(&pair) {
                *c -= weight;
                if *c == 0 {
                    self.pair_count.remove(&pair);
                }
            }
        }
    }

    /// Best-scoring pair with count >= `min_count`.
    fn best_pair(&self, min_count: u64) -> Option<(Pair, String)> {
        let mut best: Option<(f64, String, Pair)> = None;
        for (&pair, &count) in &self.pair_count {
            if count < min_count {
                continue;
            }
            let score = count as f64
                / (self.piece_count[pair.0 as usize] as f64 * self.piece_count[pair.1 as usize] as f64);
            let better = match &best {
                None => true,
                Some((s, name, p)) => match score.partial_cmp(s).unwrap_or(Ordering::Equal) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => {
                        let cand = self.merged_string(pair);
                        match cand.cmp(name) {
                            Ordering::Less => true,
                            Ordering::Greater => false,
                            Ordering::Equal => {
                                let key = |p: &Pair| {
                                    (self.pieces[p.0 as usize].clone(), self.pieces[p.1 as usize].clone())
                                };
                                key(&pair) < key(p)
                            }
                        }
                    }
                },
            };
            if better {
                best = Some((score, self.merged_string(pair), pair));
            }
        }
        best.map(|(_, name, pair)| (pair, name))
    }

    fn apply_merge(&mut self, pair: Pair, new_id: u32) {
        let mut ws = self.pair_words.remove(&pair).unwrap_or_default();
        ws.sort_unstable();
        ws.dedup();
        for w in ws {
            let seq = &self.words[w as usize].0;
            if !seq.windows(2).any(|x| (x[0], x[1]) == pair) {
                continue;
            }
            self.account(w, -1);
            let seq = &self.words[w as usize].0;
            let mut merged = Vec::with_capacity(seq.len());
            let mut i = 0;
            while i < seq.len() {
                if i + 1 < seq.len() && (seq[i], seq[i + 1]) == pair {
                    merged.push(new_id);
                    i += 2;
                } else {
                    merged.push(seq[i]);
                    i += 1;
                }
            }
            self.words[w as usize].0 = merged;
            self.account(w, 1);
        }
    }
}

/// Learns a WordPiece vocabulary from merged word weights.
///
/// Starts from the characters seen in each position (word-initial or
/// continuation) plus `initial_alphabet`, then repeatedly adds the merge
/// of the adjacent piece pair maximizing
/// `count(pair) / (count(left) * count(right))`, ties going to the
/// lexicographically smallest merged token.
pub fn train_vocab(
    weights: &BTreeMap<String, f64>,
    cfg: &VocabTrainConfig,
) -> Result<Vocabulary, VocabError> {
    let prefix = cfg.continuation_prefix.as_str();
    let mut t = Trainer {
        prefix,
        pieces: Vec::new(),
        piece_ids: HashMap::new(),
        piece_count: Vec::new(),
        pair_count: HashMap::new(),
        pair_words: HashMap::new(),
        words: Vec::new(),
    };

    let mut seed: BTreeSet<String> = BTreeSet::new();
    for c in &cfg.initial_alphabet {
        seed.insert(c.to_string());
        seed.insert(format!("{prefix}{c}"));
    }
    for (word, &weight) in weights {
        let fixed = (weight * WEIGHT_SCALE).round();
        if !(fixed >= 1.0) {
            continue;
        }
        let mut seq = Vec::new();
        for (i, c) in word.chars().enumerate() {
            let s = if i == 0 { c.to_string() } else { format!("{prefix}{c}") };
            seed.insert(s.clone());
            seq.push(t.intern(s));
        }
        if !seq.is_empty() {
            t.words.push((seq, fixed as u64));
        }
    }
    if t.words.is_empty() {
        return Err(VocabError::EmptyInput);
    }
    let seed_size = SPECIALS.len() + seed.len();
    if cfg.target_size < seed_size {
        return Err(VocabError::TargetTooSmall {
            target: cfg.target_size,
            seed: seed_size,
        });
    }

    let mut vocab: Vec<String> = seed.into_iter().collect();
    let mut in_vocab: std::collections::HashSet<String> = vocab.iter().cloned().collect();
    for w in 0..t.words.len() as u32 {
        t.account(w, 1);
    }

    let min_count = (cfg.min_word_frequency as f64 * WEIGHT_SCALE) as u64;
    while SPECIALS.len() + vocab.len() < cfg.target_size {
        let Some((pair, name)) = t.best_pair(min_count.max(1)) else {
            break;
        };
        let new_id = t.intern(name.clone());
        t.apply_merge(pair, new_id);
        if in_vocab.insert(name.clone()) {
            vocab.push(name);
        }
    }
    Vocabulary::from_pieces(vocab, prefix)
}
