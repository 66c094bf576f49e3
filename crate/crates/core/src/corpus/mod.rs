//! Corpus data model: language tags, documents, parallel pairs, ingestion
//! and per-language word accounting.

mod ingest;
mod language;
mod pretokenize;
pub mod shard;
mod stats;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;
use unicode_script::{Script, UnicodeScript};

pub use ingest::{
    ingest, ingest_pairs, parse_corpus_file_name, DocReader, IngestOptions, InvalidLinePolicy, PairIngest,
};
pub use language::{Language, LanguageTag};
pub use pretokenize::{is_punctuation, pretokenize};
pub use stats::{count_tokens, CorpusStats, StatsEntry};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown language code {0:?}")]
    UnknownLanguage(String),
    #[error("English has no transliterated variant")]
    TransliteratedEnglish,
    #[error("language index {0:#04x} out of range")]
    BadLanguageIndex(u8),
    #[error("unknown source kind {0:?}")]
    UnknownSource(String),
    #[error("source kind byte {0} out of range")]
    BadSourceIndex(u8),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid UTF-8")]
    InvalidUtf8 { path: PathBuf, line: u64 },
    #[error("{path}: malformed shard at byte offset {offset}: {reason}")]
    MalformedShard {
        path: PathBuf,
        offset: u64,
        reason: String,
    },
    #[error("{path}: record {index} is tagged {found} but {expected} was declared")]
    TagMismatch {
        path: PathBuf,
        index: u64,
        expected: String,
        found: String,
    },
    #[error("source kind {0} is only valid inside parallel pairs")]
    ParallelKindOutsidePair(SourceKind),
    #[error("{path}:{line}: expected `source<TAB>target`")]
    MalformedPairLine { path: PathBuf, line: u64 },
    #[error("invalid parallel pair: {0}")]
    InvalidPair(String),
    #[error("cannot infer language and source from file name {0:?}")]
    BadFileName(String),
}

/// Where a document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Wikipedia,
    Crawl,
    ParallelTranslation,
    ParallelTransliteration,
}

impl SourceKind {
    pub const ALL: [SourceKind; 4] = [
        SourceKind::Wikipedia,
        SourceKind::Crawl,
        SourceKind::ParallelTranslation,
        SourceKind::ParallelTransliteration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Wikipedia => "wikipedia",
            SourceKind::Crawl => "crawl",
            SourceKind::ParallelTranslation => "parallel_translation",
            SourceKind::ParallelTransliteration => "parallel_transliteration",
        }
    }

    pub fn is_parallel(self) -> bool {
        matches!(
            self,
            SourceKind::ParallelTranslation | SourceKind::ParallelTransliteration
        )
    }

    pub fn to_byte(self) -> u8 {
        self as u8
    }

    pub fn from_byte(b: u8) -> Result<Self, CorpusError> {
        Self::ALL
            .get(b as usize)
            .copied()
            .ok_or(CorpusError::BadSourceIndex(b))
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| CorpusError::UnknownSource(s.to_string()))
    }
}

/// Stable document identifier: shard index in the high 24 bits, line (or
/// record) index within the shard in the low 40.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocId(pub u64);

impl DocId {
    const LINE_BITS: u32 = 40;

    pub fn new(shard: u32, line: u64) -> Self {
        debug_assert!(shard < (1 << 24));
        debug_assert!(line < (1 << Self::LINE_BITS));
        DocId(((shard as u64) << Self::LINE_BITS) | line)
    }

    pub fn shard(self) -> u32 {
        (self.0 >> Self::LINE_BITS) as u32
    }

    pub fn line(self) -> u64 {
        self.0 & ((1 << Self::LINE_BITS) - 1)
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.shard(), self.line())
    }
}

/// NFC-normalizes and trims `raw`. Case and combining marks are kept.
pub fn normalize_text(raw: &str) -> String {
    let nfc: String = raw.nfc().collect();
    match nfc.trim() {
        t if t.len() == nfc.len() => nfc,
        t => t.to_string(),
    }
}

/// One normalized, non-empty document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub id: DocId,
    pub lang: LanguageTag,
    pub source: SourceKind,
    /// Free-form label, e.g. the file stem the document was read from.
    pub provenance: Arc<str>,
    text: String,
}

impl DocumentRecord {
    /// Builds a record from raw text; `None` when nothing is left after
    /// normalization and trimming.
    pub fn new(
        id: DocId,
        lang: LanguageTag,
        source: SourceKind,
        provenance: Arc<str>,
        raw_text: &str,
    ) -> Option<Self> {
        let text = normalize_text(raw_text);
        if text.is_empty() {
            return None;
        }
        Some(DocumentRecord {
            id,
            lang,
            source,
            provenance,
            text,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    Translated,
    Transliterated,
}

/// Two aligned documents used together for translation language modeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPair {
    src: DocumentRecord,
    tgt: DocumentRecord,
    kind: PairKind,
}

impl ParallelPair {
    pub fn new(src: DocumentRecord, tgt: DocumentRecord, kind: PairKind) -> Result<Self, CorpusError> {
        match kind {
            PairKind::Translated => {
                if tgt.lang != LanguageTag::native(Language::En) {
                    return Err(CorpusError::InvalidPair(format!(
                        "translation target must be en, got {}",
                        tgt.lang
                    )));
                }
            }
            PairKind::Transliterated => {
                if src.lang.is_transliterated()
                    || tgt.lang != LanguageTag::transliterated(src.lang.lang())?
                {
                    return Err(CorpusError::InvalidPair(format!(
                        "transliteration of {} cannot be tagged {}",
                        src.lang, tgt.lang
                    )));
                }
                if let Some(c) = tgt.text().chars().find(|&c| !is_latin_compatible(c)) {
                    return Err(CorpusError::InvalidPair(format!(
                        "transliterated text contains non-Latin character {c:?}"
                    )));
                }
            }
        }
        Ok(ParallelPair { src, tgt, kind })
    }

    pub fn src(&self) -> &DocumentRecord {
        &self.src
    }

    pub fn tgt(&self) -> &DocumentRecord {
        &self.tgt
    }

    pub fn kind(&self) -> PairKind {
        self.kind
    }
}

fn is_latin_compatible(c: char) -> bool {
    matches!(c.script(), Script::Latin | Script::Common | Script::Inherited)
}
