use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// The 17 supported languages, in the order that defines their on-disk index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    As,
    Bn,
    En,
    Gu,
    Hi,
    Kn,
    Ks,
    Ml,
    Mr,
    Ne,
    Or,
    Pa,
    Sa,
    Sd,
    Ta,
    Te,
    Ur,
}

impl Language {
    pub const ALL: [Language; 17] = [
        Language::As,
        Language::Bn,
        Language::En,
        Language::Gu,
        Language::Hi,
        Language::Kn,
        Language::Ks,
        Language::Ml,
        Language::Mr,
        Language::Ne,
        Language::Or,
        Language::Pa,
        Language::Sa,
        Language::Sd,
        Language::Ta,
        Language::Te,
        Language::Ur,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Language::As => "as",
            Language::Bn => "bn",
            Language::En => "en",
            Language::Gu => "gu",
            Language::Hi => "hi",
            Language::Kn => "kn",
            Language::Ks => "ks",
            Language::Ml => "ml",
            Language::Mr => "mr",
            Language::Ne => "ne",
            Language::Or => "or",
            Language::Pa => "pa",
            Language::Sa => "sa",
            Language::Sd => "sd",
            Language::Ta => "ta",
            Language::Te => "te",
            Language::Ur => "ur",
        }
    }

    pub fn index(self) -> u8 {
        Self::ALL.iter().position(|&l| l == self).unwrap() as u8
    }

    pub fn from_index(index: u8) -> Option<Language> {
        Self::ALL.get(index as usize).copied()
    }

    /// Native script name as reported by Unicode (`Latin` for English).
    pub fn native_script(self) -> &'static str {
        match self {
            Language::As | Language::Bn => "Bengali",
            Language::En => "Latin",
            Language::Gu => "Gujarati",
            Language::Hi | Language::Mr | Language::Ne | Language::Sa => "Devanagari",
            Language::Kn => "Kannada",
            Language::Ks | Language::Sd | Language::Ur => "Arabic",
            Language::Ml => "Malayalam",
            Language::Or => "Oriya",
            Language::Pa => "Gurmukhi",
            Language::Ta => "Tamil",
            Language::Te => "Telugu",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::ALL
            .iter()
            .copied()
            .find(|l| l.code() == s)
            .ok_or_else(|| CorpusError::UnknownLanguage(s.to_string()))
    }
}

/// A language plus whether the text is its Latin-script transliterated
/// variant (written `hi-tr`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguageTag {
    lang: Language,
    transliterated: bool,
}

impl LanguageTag {
    pub fn native(lang: Language) -> Self {
        LanguageTag {
            lang,
            transliterated: false,
        }
    }

    pub fn transliterated(lang: Language) -> Result<Self, CorpusError> {
        if lang == Language::En {
            return Err(CorpusError::TransliteratedEnglish);
        }
        Ok(LanguageTag {
            lang,
            transliterated: true,
        })
    }

    pub fn new(lang: Language, transliterated: bool) -> Result<Self, CorpusError> {
        if transliterated {
            Self::transliterated(lang)
        } else {
            Ok(Self::native(lang))
        }
    }

    pub fn lang(self) -> Language {
        self.lang
    }

    pub fn is_transliterated(self) -> bool {
        self.transliterated
    }

    /// Script the text of this tag is written in.
    pub fn script(self) -> &'static str {
        if self.transliterated {
            "Latin"
        } else {
            self.lang.native_script()
        }
    }

    /// One-byte encoding: language index in the low bits, 0x80 when transliterated.
    pub fn to_byte(self) -> u8 {
        self.lang.index() | if self.transliterated { 0x80 } else { 0 }
    }

    pub fn from_byte(b: u8) -> Result<Self, CorpusError> {
        let lang = Language::from_index(b & 0x7f).ok_or(CorpusError::BadLanguageIndex(b))?;
        Self::new(lang, b & 0x80 != 0)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.transliterated {
            write!(f, "{}-tr", self.lang)
        } else {
            write!(f, "{}", self.lang)
        }
    }
}

impl FromStr for LanguageTag {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_suffix("-tr") {
            Some(code) => LanguageTag::transliterated(code.parse()?),
            None => Ok(LanguageTag::native(s.parse()?)),
        }
    }
}

impl Serialize for LanguageTag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LanguageTag {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_codes_and_variants() {
        for lang in Language::ALL {
            let tag: LanguageTag = lang.code().parse().unwrap();
            assert_eq!(tag, LanguageTag::native(lang));
            assert_eq!(Language::from_index(lang.index()), Some(lang));
        }
        let tag: LanguageTag = "hi-tr".parse().unwrap();
        assert!(tag.is_transliterated());
        assert_eq!(tag.to_string(), "hi-tr");
        assert_eq!(tag.script(), "Latin");
    }

    #[test]
    fn rejects_unknown_and_english_transliteration() {
        assert!(matches!(
            "xx".parse::<LanguageTag>(),
            Err(CorpusError::UnknownLanguage(_))
        ));
        assert!(matches!(
            "en-tr".parse::<LanguageTag>(),
            Err(CorpusError::TransliteratedEnglish)
        ));
        assert!("HI".parse::<LanguageTag>().is_err());
    }

    #[test]
    fn byte_encoding_round_trips() {
        for lang in Language::ALL {
            for tr in [false, true] {
                if let Ok(tag) = LanguageTag::new(lang, tr) {
                    assert_eq!(LanguageTag::from_byte(tag.to_byte()).unwrap(), tag);
                }
            }
        }
        assert!(LanguageTag::from_byte(17).is_err());
        assert!(LanguageTag::from_byte(0x80 | Language::En.index()).is_err());
    }
}
