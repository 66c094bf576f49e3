//! Cased WordPiece vocabularies: training, greedy longest-match
//! tokenization, and vocabulary quality metrics.

mod metrics;
mod tokenize;
mod train;

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use metrics::{
    classify_token, fertility, fertility_for, script_composition, FertilityEntry, FertilityReport,
    ScriptCategory, ScriptComposition,
};
pub use train::{
    collect_word_freqs, smooth_and_merge, train_vocab, VocabTrainConfig, WordFreqs, WEIGHT_SCALE,
};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

/// Special tokens, in id order.
pub const SPECIALS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;
pub const MASK_ID: u32 = 4;

pub const DEFAULT_CONTINUATION_PREFIX: &str = "##";

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("target size {target} is smaller than the seed vocabulary ({seed} tokens)")]
    TargetTooSmall { target: usize, seed: usize },
    #[error("no words to train on")]
    EmptyInput,
    #[error("smoothing exponent {0} outside (0, 1]")]
    ExponentOutOfRange(f64),
    #[error("token id {0} out of range")]
    IdOutOfRange(u32),
    #[error("invalid token {0:?}")]
    InvalidToken(String),
    #[error("duplicate token {0:?}")]
    DuplicateToken(String),
    #[error("vocabulary must start with {PAD} {UNK} {CLS} {SEP} {MASK}")]
    MissingSpecials,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// An ordered WordPiece inventory. Ids are positions; the five special
/// tokens occupy ids 0..5.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    prefix: String,
    index: HashMap<String, u32>,
    max_piece_chars: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from the non-special pieces, in order.
    pub fn from_pieces<I, S>(pieces: I, prefix: &str) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(pieces.into_iter().map(Into::into))
            .collect();
        Self::from_tokens(tokens, prefix)
    }

    /// Builds a vocabulary from a full token list, specials first.
    pub fn from_tokens(tokens: Vec<String>, prefix: &str) -> Result<Self, VocabError> {
        if tokens.len() < SPECIALS.len() || tokens[..SPECIALS.len()] != SPECIALS {
            return Err(VocabError::MissingSpecials);
        }
        let specials: HashSet<&str> = SPECIALS.into_iter().collect();
        let mut index = HashMap::with_capacity(tokens.len());
        let mut max_piece_chars = 0;
        for (i, t) in tokens.iter().enumerate() {
            if i >= SPECIALS.len() {
                let body = t.strip_prefix(prefix).unwrap_or(t);
                if body.is_empty() || t.chars().any(char::is_whitespace) || specials.contains(t.as_str()) {
                    return Err(VocabError::InvalidToken(t.clone()));
                }
                max_piece_chars = max_piece_chars.max(body.chars().count());
            }
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(VocabError::DuplicateToken(t.clone()));
            }
        }
        Ok(Vocabulary {
            tokens,
            prefix: prefix.to_string(),
            index,
            max_piece_chars,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn continuation_prefix(&self) -> &str {
        &self.prefix
    }

    pub fn is_special(&self, id: u32) -> bool {
        (id as usize) < SPECIALS.len()
    }

    /// Ids of all non-special tokens.
    pub fn regular_ids(&self) -> Range<u32> {
        SPECIALS.len() as u32..self.tokens.len() as u32
    }

    /// Strips the continuation prefix; `None` for word-initial pieces and
    /// specials.
    pub fn continuation_body<'a>(&self, token: &'a str) -> Option<&'a str> {
        token.strip_prefix(self.prefix.as_str()).filter(|b| !b.is_empty())
    }

    /// The `vocab.txt` form: one token per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn content_hash(&self) -> [u8; 32] {
        Sha256::digest(self.to_text().as_bytes()).into()
    }

    pub fn save(&self, path: &Path) -> Result<(), VocabError> {
        let io = |source| VocabError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(self.to_text().as_bytes()).map_err(io)
    }

    pub fn parse(text: &str, prefix: &str) -> Result<Self, VocabError> {
        let tokens = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l).to_string()).collect();
        Self::from_tokens(tokens, prefix)
    }

    pub fn load(path: &Path, prefix: &str) -> Result<Self, VocabError> {
        let text = std::fs::read_to_string(path).map_err(|source| VocabError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, prefix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_come_first() {
        let v = Vocabulary::from_pieces(["a", "##b"], "##").unwrap();
        assert_eq!(v.len(), 7);
        assert_eq!(v.id(MASK), Some(MASK_ID));
        assert_eq!(v.id("##b"), Some(6));
        assert_eq!(v.regular_ids(), 5..7);
        assert_eq!(v.continuation_body("##b"), Some("b"));
        assert_eq!(v.continuation_body("a"), None);
    }

    #[test]
    fn rejects_malformed_inventories() {
        assert!(matches!(
            Vocabulary::from_tokens(vec!["a".into()], "##"),
            Err(VocabError::MissingSpecials)
        ));
        assert!(matches!(
            Vocabulary::from_pieces(["a", "a"], "##"),
            Err(VocabError::DuplicateToken(_))
        ));
        assert!(matches!(
            Vocabulary::from_pieces(["##"], "##"),
            Err(VocabError::InvalidToken(_))
        ));
        assert!(matches!(
            Vocabulary::from_pieces(["a b"], "##"),
            Err(VocabError::InvalidToken(_))
        ));
        assert!(matches!(
            Vocabulary::from_pieces([UNK], "##"),
            Err(VocabError::InvalidToken(_))
        ));
    }

    #[test]
    fn text_round_trip_preserves_case_and_marks() {
        let v = Vocabulary::from_pieces(["Ä", "##é", "क्", "##ि", "Zebra"], "##").unwrap();
        let back = Vocabulary::parse(&v.to_text(), "##").unwrap();
        assert_eq!(back, v);
        assert_eq!(back.content_hash(), v.content_hash());
        assert!(v.to_text().starts_with("[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\nÄ\n"));
    }
}
