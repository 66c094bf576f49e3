use super::{VocabError, Vocabulary, UNK_ID};
use crate::corpus::pretokenize;

impl Vocabulary {
    /// Pretokenizes `text` and segments each word greedily, longest piece
    /// first.
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for w in pretokenize(text) {
            self.tokenize_word(w, &mut out);
        }
        out
    }

    /// Appends the pieces of a single word to `out`. A word with no
    /// complete segmentation becomes one [UNK]. Returns the number of ids
    /// appended.
    pub fn tokenize_word(&self, word: &str, out: &mut Vec<u32>) -> usize {
        if let Some(id) = self.id(word) {
            out.push(id);
            return 1;
        }
        let bounds: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        let start_len = out.len();
        let mut buf = String::with_capacity(word.len() + self.prefix.len());
        let mut at = 0;
        while at + 1 < bounds.len() {
            let longest = (bounds.len() - 1).min(at + self.max_piece_chars);
            let mut found = None;
            for end in (at + 1..=longest).rev() {
                buf.clear();
                if at > 0 {
                    buf.push_str(&self.prefix);
                }
                buf.push_str(&word[bounds[at]..bounds[end]]);
                if let Some(id) = self.id(&buf) {
                    found = Some((id, end));
                    break;
                }
            }
            match found {
                Some((id, end)) => {
                    out.push(id);
                    at = end;
                }
                None => {
                    out.truncate(start_len);
                    out.push(UNK_ID);
                    return 1;
                }
            }
        }
        out.len() - start_len
    }

    /// Joins pieces back into text: continuation pieces attach to the
    /// previous piece, everything else starts a new space-separated word.
    pub fn detokenize(&self, ids: &[u32]) -> Result<String, VocabError> {
        let mut s = String::new();
        for &id in ids {
            let tok = self.token(id).ok_or(VocabError::IdOutOfRange(id))?;
            match self.continuation_body(tok).filter(|_| !self.is_special(id)) {
                Some(body) => s.push_str(body),
                None => {
                    if !s.is_empty() {
                        s.push(' ');
                    }
                    s.push_str(tok);
                }
            }
        }
        Ok(s)
    }
}
