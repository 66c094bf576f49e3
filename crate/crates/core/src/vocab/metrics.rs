use std::collections::BTreeMap;
use std::fmt;
use std::io;

use rayon::prelude::*;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_script::{Script, UnicodeScript};

use super::Vocabulary;
use crate::corpus::{pretokenize, DocumentRecord, LanguageTag};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FertilityEntry {
    pub words: u64,
    pub subwords: u64,
}

impl FertilityEntry {
    pub fn fertility(&self) -> f64 {
        self.subwords as f64 / self.words as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FertilityReport {
    pub entries: BTreeMap<LanguageTag, FertilityEntry>,
    /// Requested languages with no words in the input.
    pub omitted: Vec<LanguageTag>,
}

impl FertilityReport {
    pub fn get(&self, lang: LanguageTag) -> Option<f64> {
        self.entries.get(&lang).map(FertilityEntry::fertility)
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lang", "words", "subwords", "fertility"])?;
        for (lang, e) in &self.entries {
            out.write_record([
                lang.to_string(),
                e.words.to_string(),
                e.subwords.to_string(),
                format!("{:.6}", e.fertility()),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn count(docs: &[DocumentRecord], vocab: &Vocabulary) -> BTreeMap<LanguageTag, FertilityEntry> {
    docs.par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<LanguageTag, FertilityEntry>, d| {
            let e = acc.entry(d.lang).or_default();
            let mut buf = Vec::new();
            for w in pretokenize(d.text()) {
                buf.clear();
                e.words += 1;
                e.subwords += vocab.tokenize_word(w, &mut buf) as u64;
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (l, e) in b {
                let t = a.entry(l).or_default();
                t.words += e.words;
                t.subwords += e.subwords;
            }
            a
        })
}

/// Subwords per pretokenized word, per language. [UNK] counts as one
/// subword.
pub fn fertility(docs: &[DocumentRecord], vocab: &Vocabulary) -> FertilityReport {
    let mut entries = count(docs, vocab);
    entries.retain(|_, e| e.words > 0);
    FertilityReport {
        entries,
        omitted: Vec::new(),
    }
}

/// Like [`fertility`] but restricted to `langs`; languages with no words
/// are listed in `omitted`.
pub fn fertility_for(
    docs: &[DocumentRecord],
    vocab: &Vocabulary,
    langs: &[LanguageTag],
) -> FertilityReport {
    let counts = count(docs, vocab);
    let mut report = FertilityReport::default();
    for &l in langs {
        match counts.get(&l) {
            Some(e) if e.words > 0 => {
                report.entries.insert(l, *e);
            }
            _ => report.omitted.push(l),
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScriptCategory {
    Latin,
    Devanagari,
    Bengali,
    Gujarati,
    Gurmukhi,
    Kannada,
    Malayalam,
    Oriya,
    Tamil,
    Telugu,
    Arabic,
    Other,
}

impl ScriptCategory {
    pub const ALL: [ScriptCategory; 12] = [
        ScriptCategory::Latin,
        ScriptCategory::Devanagari,
        ScriptCategory::Bengali,
        ScriptCategory::Gujarati,
        ScriptCategory::Gurmukhi,
        ScriptCategory::Kannada,
        ScriptCategory::Malayalam,
        ScriptCategory::Oriya,
        ScriptCategory::Tamil,
        ScriptCategory::Telugu,
        ScriptCategory::Arabic,
        ScriptCategory::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScriptCategory::Latin => "Latin",
            ScriptCategory::Devanagari => "Devanagari",
            ScriptCategory::Bengali => "Bengali",
            ScriptCategory::Gujarati => "Gujarati",
            ScriptCategory::Gurmukhi => "Gurmukhi",
            ScriptCategory::Kannada => "Kannada",
            ScriptCategory::Malayalam => "Malayalam",
            ScriptCategory::Oriya => "Oriya",
            ScriptCategory::Tamil => "Tamil",
            ScriptCategory::Telugu => "Telugu",
            ScriptCategory::Arabic => "Arabic",
            ScriptCategory::Other => "Other",
        }
    }

    fn from_script(s: Script) -> ScriptCategory {
        match s {
            Script::Latin => ScriptCategory::Latin,
            Script::Devanagari => ScriptCategory::Devanagari,
            Script::Bengali => ScriptCategory::Bengali,
            Script::Gujarati => ScriptCategory::Gujarati,
            Script::Gurmukhi => ScriptCategory::Gurmukhi,
            Script::Kannada => ScriptCategory::Kannada,
            Script::Malayalam => ScriptCategory::Malayalam,
            Script::Oriya => ScriptCategory::Oriya,
            Script::Tamil => ScriptCategory::Tamil,
            Script::Telugu => ScriptCategory::Telugu,
            Script::Arabic => ScriptCategory::Arabic,
            _ => ScriptCategory::Other,
        }
    }
}

impl fmt::Display for ScriptCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Category of a single token body: the one script shared by all its
/// non-digit characters, else `Other`. Combining characters of the
/// Inherited script go with any script. Digits-only tokens are `Other`.
pub fn classify_token(body: &str) -> ScriptCategory {
    let mut script = None;
    for c in body.chars() {
        if get_general_category(c) == GeneralCategory::DecimalNumber {
            continue;
        }
        match c.script() {
            Script::Inherited => continue,
            Script::Common | Script::Unknown => return ScriptCategory::Other,
            s => match script {
                None => script = Some(s),
                Some(prev) if prev == s => {}
                Some(_) => return ScriptCategory::Other,
            },
        }
    }
    script.map_or(ScriptCategory::Other, ScriptCategory::from_script)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptComposition {
    pub counts: BTreeMap<ScriptCategory, u64>,
    pub total: u64,
}

impl ScriptComposition {
    pub fn count(&self, cat: ScriptCategory) -> u64 {
        self.counts.get(&cat).copied().unwrap_or(0)
    }

    pub fn percent(&self, cat: ScriptCategory) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        100.0 * self.count(cat) as f64 / self.total as f64
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["script", "count", "percent"])?;
        for cat in ScriptCategory::ALL {
            out.write_record([
                cat.name().to_string(),
                self.count(cat).to_string(),
                format!("{:.6}", self.percent(cat)),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Share of non-special tokens per script category, continuation prefix
/// stripped.
pub fn script_composition(vocab: &Vocabulary) -> ScriptComposition {
    let mut counts: BTreeMap<ScriptCategory, u64> = BTreeMap::new();
    let mut total = 0;
    for id in vocab.regular_ids() {
        let tok = vocab.token(id).unwrap_or_default();
        let body = vocab.continuation_body(tok).unwrap_or(tok);
        *counts.entry(classify_token(body)).or_default() += 1;
        total += 1;
    }
    ScriptComposition { counts, total }
}
