//! Table-driven romanization of Indic scripts.
//!
//! A table maps native clusters of one to three code points to ASCII. Keys
//! are matched longest-first, left to right. Consonants carry the table's
//! implicit vowel unless the next cluster (after any nukta) is a vowel sign
//! or a virama. Characters outside the table's script pass through.
//!
//! Table files are UTF-8 text:
//!
//! ```text
//! ## comment
//! #script Devanagari
//! #implicit_vowel a
//! क<TAB>k<TAB>consonant
//! ा<TAB>aa<TAB>vowel_sign
//! ्<TAB><TAB>virama
//! ०<TAB>0
//! ```
//!
//! The optional third column classifies the entry; entries without it take
//! part in no vowel rule.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_script::{Script, UnicodeScript};

use crate::corpus::{
    is_punctuation, DocumentRecord, Language, LanguageTag, PairKind, ParallelPair, SourceKind,
};

pub const DEVANAGARI_TABLE: &str = include_str!("../tables/devanagari.tsv");
pub const BENGALI_TABLE: &str = include_str!("../tables/bengali.tsv");

const MAX_KEY_CHARS: usize = 3;

#[derive(Debug, Error)]
pub enum TranslitError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing #script directive")]
    MissingScript,
    #[error("unknown script {0:?}")]
    UnknownScript(String),
    #[error("table for {script} has no entry for U+{code:04X}")]
    NotTotal { script: String, code: u32 },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlyphClass {
    Consonant,
    VowelSign,
    Virama,
    Nukta,
    Other,
}

impl GlyphClass {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "consonant" => GlyphClass::Consonant,
            "vowel_sign" => GlyphClass::VowelSign,
            "virama" => GlyphClass::Virama,
            "nukta" => GlyphClass::Nukta,
            "" | "other" => GlyphClass::Other,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
struct Entry {
    latin: String,
    class: GlyphClass,
}

#[derive(Debug, Clone)]
pub struct RomanizationTable {
    script: Script,
    implicit_vowel: String,
    entries: HashMap<String, Entry>,
}

fn is_assigned(c: char) -> bool {
    get_general_category(c) != GeneralCategory::Unassigned
}

impl RomanizationTable {
    /// Parses and validates a table. The table must cover every assigned
    /// code point of its script.
    pub fn parse(src: &str) -> Result<Self, TranslitError> {
        let mut script = None;
        let mut implicit_vowel = String::from("a");
        let mut entries = HashMap::new();

        for (idx, raw) in src.lines().enumerate() {
            let line_no = idx + 1;
            let err = |reason: String| TranslitError::Parse {
                line: line_no,
                reason,
            };
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.is_empty() || line.starts_with("##") {
                continue;
            }
            if let Some(directive) = line.strip_prefix('#') {
                let (name, value) = directive.split_once(' ').unwrap_or((directive, ""));
                let value = value.trim();
                match name {
                    "script" => {
                        script = Some(
                            Script::from_full_name(value)
                                .ok_or_else(|| TranslitError::UnknownScript(value.to_string()))?,
                        )
                    }
                    "implicit_vowel" => {
                        if !value.chars().all(|c| c.is_ascii_alphabetic()) {
                            return Err(err(format!("implicit vowel {value:?} is not ASCII letters")));
                        }
                        implicit_vowel = value.to_string();
                    }
                    _ => return Err(err(format!("unknown directive #{name}"))),
                }
                continue;
            }
            let script = script.ok_or(TranslitError::MissingScript)?;
            let mut cols = line.split('\t');
            let key = cols.next().unwrap_or_default();
            let latin = cols
                .next()
                .ok_or_else(|| err("expected native<TAB>latin".into()))?;
            let class = cols.next().unwrap_or("");
            if cols.next().is_some() {
                return Err(err("too many columns".into()));
            }
            let class = GlyphClass::parse(class).ok_or_else(|| err(format!("unknown class {class:?}")))?;

            let n = key.chars().count();
            if n == 0 || n > MAX_KEY_CHARS {
                return Err(err(format!("key must have 1 to {MAX_KEY_CHARS} code points")));
            }
            if let Some(c) = key.chars().find(|c| c.script() != script) {
                return Err(err(format!("U+{:04X} is not {}", c as u32, script.full_name())));
            }
            let punct_key = n == 1 && key.chars().all(is_punctuation);
            let valid_value = if punct_key {
                !latin.is_empty() && latin.chars().all(|c| c.is_ascii_punctuation())
            } else {
                latin.chars().all(|c| c.is_ascii_alphanumeric())
            };
            if !valid_value {
                return Err(err(format!("invalid romanization {latin:?} for {key:?}")));
            }
            let entry = Entry {
                latin: latin.to_string(),
                class,
            };
            if entries.insert(key.to_string(), entry).is_some() {
                return Err(err(format!("duplicate key {key:?}")));
            }
        }

        let script = script.ok_or(TranslitError::MissingScript)?;
        let table = RomanizationTable {
            script,
            implicit_vowel,
            entries,
        };
        table.check_total()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, TranslitError> {
        let src = std::fs::read_to_string(path).map_err(|source| TranslitError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&src)
    }

    pub fn devanagari() -> Self {
        Self::parse(DEVANAGARI_TABLE).expect("bundled Devanagari table is valid")
    }

    pub fn bengali() -> Self {
        Self::parse(BENGALI_TABLE).expect("bundled Bengali table is valid")
    }

    fn check_total(&self) -> Result<(), TranslitError> {
        let mut buf = [0u8; 4];
        for c in script_chars(self.script) {
            if !self.entries.contains_key(&*c.encode_utf8(&mut buf)) {
                return Err(TranslitError::NotTotal {
                    script: self.script.full_name().to_string(),
                    code: c as u32,
                });
            }
        }
        Ok(())
    }

    pub fn script(&self) -> Script {
        self.script
    }

    pub fn implicit_vowel(&self) -> &str {
        &self.implicit_vowel
    }

    fn longest_match(&self, chars: &[char], key: &mut String) -> Option<(usize, &Entry)> {
        for len in (1..=chars.len().min(MAX_KEY_CHARS)).rev() {
            key.clear();
            key.extend(&chars[..len]);
            if let Some(e) = self.entries.get(key.as_str()) {
                return Some((len, e));
            }
        }
        None
    }

    /// Romanizes NFC text. The output holds no code point of the table's
    /// script.
    pub fn romanize(&self, text: &str) -> String {
        let chars: Vec<char> = text.chars().collect();
        let mut out = String::with_capacity(text.len());
        let mut key = String::new();
        let mut i = 0;
        while i < chars.len() {
            let Some((len, entry)) = self.longest_match(&chars[i..], &mut key) else {
                out.push(chars[i]);
                i += 1;
                continue;
            };
            out.push_str(&entry.latin);
            i += len;
            if entry.class != GlyphClass::Consonant {
                continue;
            }
            while let Some((len, e)) = self.longest_match(&chars[i..], &mut key) {
                if e.class != GlyphClass::Nukta {
                    break;
                }
                out.push_str(&e.latin);
                i += len;
            }
            let next = self.longest_match(&chars[i..], &mut key).map(|(_, e)| e.class);
            if !matches!(next, Some(GlyphClass::VowelSign | GlyphClass::Virama)) {
                out.push_str(&self.implicit_vowel);
            }
        }
        out
    }
}

/// Every assigned code point whose Script property is `script`.
pub fn script_chars(script: Script) -> impl Iterator<Item = char> {
    (0..=0x10FFFFu32)
        .filter_map(char::from_u32)
        .filter(move |&c| c.script() == script && is_assigned(c))
}

/// Which table romanizes which language. Languages without a table are not
/// transliterated.
#[derive(Debug, Clone, Default)]
pub struct TableRegistry {
    tables: BTreeMap<Language, Arc<RomanizationTable>>,
}

impl TableRegistry {
    /// Devanagari for hi, mr and ne; Bengali script for bn and as. ks, sa
    /// and sd are left out.
    pub fn bundled() -> Self {
        let deva = Arc::new(RomanizationTable::devanagari());
        let beng = Arc::new(RomanizationTable::bengali());
        let mut r = TableRegistry::default();
        for l in [Language::Hi, Language::Mr, Language::Ne] {
            r.register(l, deva.clone());
        }
        for l in [Language::Bn, Language::As] {
            r.register(l, beng.clone());
        }
        r
    }

    pub fn register(&mut self, lang: Language, table: Arc<RomanizationTable>) {
        self.tables.insert(lang, table);
    }

    pub fn get(&self, lang: Language) -> Option<&RomanizationTable> {
        self.tables.get(&lang).map(|t| &**t)
    }

    pub fn languages(&self) -> impl Iterator<Item = Language> + '_ {
        self.tables.keys().copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranslitReport {
    /// Documents whose language has no registered table.
    pub skipped_no_table: BTreeMap<LanguageTag, u64>,
    /// Documents whose romanization is empty or keeps non-Latin letters
    /// from another script.
    pub rejected: u64,
}

impl TranslitReport {
    pub fn skipped_total(&self) -> u64 {
        self.skipped_no_table.values().sum()
    }
}

/// Pairs every eligible document with its romanization.
pub fn make_translit_pairs(
    docs: &[DocumentRecord],
    registry: &TableRegistry,
) -> (Vec<ParallelPair>, TranslitReport) {
    enum Outcome {
        Pair(ParallelPair),
        NoTable(LanguageTag),
        Rejected,
    }

    let outcomes: Vec<Outcome> = docs
        .par_iter()
        .map(|doc| {
            let table = match registry.get(doc.lang.lang()) {
                Some(t) if !doc.lang.is_transliterated() => t,
                _ => return Outcome::NoTable(doc.lang),
            };
            let Ok(tgt_tag) = LanguageTag::transliterated(doc.lang.lang()) else {
                return Outcome::NoTable(doc.lang);
            };
            let latin = table.romanize(doc.text());
            let tgt = DocumentRecord::new(
                doc.id,
                tgt_tag,
                SourceKind::ParallelTransliteration,
                doc.provenance.clone(),
                &latin,
            );
            match tgt.map(|t| ParallelPair::new(doc.clone(), t, PairKind::Transliterated)) {
                Some(Ok(pair)) => Outcome::Pair(pair),
                _ => Outcome::Rejected,
            }
        })
        .collect();

    let mut pairs = Vec::new();
    let mut report = TranslitReport::default();
    for o in outcomes {
        match o {
            Outcome::Pair(p) => pairs.push(p),
            Outcome::NoTable(tag) => *report.skipped_no_table.entry(tag).or_default() += 1,
            Outcome::Rejected => report.rejected += 1,
        }
    }
    (pairs, report)
}
