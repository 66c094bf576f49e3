use unicode_general_category::{get_general_category, GeneralCategory};

/// True for Unicode general categories P* (Pc, Pd, Ps, Pe, Pi, Pf, Po).
pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Splits text into words: Unicode whitespace separates words and every
/// punctuation character becomes a word of its own. Letters, marks, digits
/// and symbols stay attached.
pub fn pretokenize(text: &str) -> Vec<&str> {
    let mut words = Vec::new();
    for chunk in text.split(char::is_whitespace) {
        let mut start = 0;
        for (i, c) in chunk.char_indices() {
            if is_punctuation(c) {
                if start < i {
                    words.push(&chunk[start..i]);
                }
                let end = i + c.len_utf8();
                words.push(&chunk[i..end]);
                start = end;
            }
        }
        if start < chunk.len() {
            words.push(&chunk[start..]);
        }
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_and_whitespace() {
        assert!(pretokenize("").is_empty());
        assert!(pretokenize(" \n\t ").is_empty());
        assert_eq!(pretokenize("namaste duniya"), ["namaste", "duniya"]);
    }

    #[test]
    fn punctuation_is_isolated_and_conjuncts_survive() {
        // '?' is Po; क्या is क U+094D य ा and must stay one word.
        assert_eq!(pretokenize("क्या?"), ["क्या", "?"]);
        assert_eq!(pretokenize("a,,b"), ["a", ",", ",", "b"]);
        assert_eq!(pretokenize("(hi)"), ["(", "hi", ")"]);
        // danda is punctuation; digits and symbols stay attached
        assert_eq!(pretokenize("१२३। ₹50"), ["१२३", "।", "₹50"]);
    }

    proptest! {
        #[test]
        fn never_yields_empty_words(s in "\\PC{0,40}") {
            prop_assert!(pretokenize(&s).iter().all(|w| !w.is_empty()));
        }

        #[test]
        fn preserves_non_whitespace_characters(s in "\\PC{0,40}") {
            let joined: String = pretokenize(&s).concat();
            let expected: String = s.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, expected);
        }

        #[test]
        fn space_join_is_fixed_point_without_punctuation(s in "[a-zक-ह ा-ौ\t ]{0,30}") {
            let words = pretokenize(&s);
            let rejoined = words.join(" ");
            prop_assert_eq!(pretokenize(&rejoined), words);
        }
    }
}
