//! Sharded document format.
//!
//! A shard is a sequence of records, each a 4-byte little-endian payload
//! length followed by the payload:
//!
//! ```text
//! u8   language index (see `Language::ALL`)
//! u8   source kind (see `SourceKind::ALL`)
//! u8   transliterated flag (0 or 1)
//! [u8] UTF-8 text
//! ```

use std::io::{self, BufRead, Write};

use super::{DocumentRecord, Language, LanguageTag, SourceKind};

const HEADER_LEN: usize = 3;

/// One raw record as stored in a shard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardRecord {
    pub lang: LanguageTag,
    pub source: SourceKind,
    pub text: String,
}

#[derive(Debug)]
pub enum ShardError {
    Io(io::Error),
    Malformed { offset: u64, reason: String },
}

impl From<io::Error> for ShardError {
    fn from(e: io::Error) -> Self {
        ShardError::Io(e)
    }
}

pub fn encode_record(lang: LanguageTag, source: SourceKind, text: &str) -> Vec<u8> {
    let len = (HEADER_LEN + text.len()) as u32;
    let mut buf = Vec::with_capacity(4 + len as usize);
    buf.extend_from_slice(&len.to_le_bytes());
    buf.push(lang.lang().index());
    buf.push(source.to_byte());
    buf.push(lang.is_transliterated() as u8);
    buf.extend_from_slice(text.as_bytes());
    buf
}

pub struct ShardWriter<W: Write> {
    inner: W,
    written: u64,
}

impl<W: Write> ShardWriter<W> {
    pub fn new(inner: W) -> Self {
        ShardWriter { inner, written: 0 }
    }

    pub fn write(&mut self, doc: &DocumentRecord) -> io::Result<()> {
        self.write_raw(doc.lang, doc.source, doc.text())
    }

    pub fn write_raw(&mut self, lang: LanguageTag, source: SourceKind, text: &str) -> io::Result<()> {
        self.inner.write_all(&encode_record(lang, source, text))?;
        self.written += 1;
        Ok(())
    }

    pub fn records_written(&self) -> u64 {
        self.written
    }

    pub fn into_inner(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Iterates the records of a shard, reporting the byte offset of any
/// malformed record.
pub struct ShardReader<R> {
    inner: R,
    offset: u64,
    failed: bool,
}

impl<R: BufRead> ShardReader<R> {
    pub fn new(inner: R) -> Self {
        ShardReader {
            inner,
            offset: 0,
            failed: false,
        }
    }

    fn malformed(&mut self, offset: u64, reason: impl Into<String>) -> ShardError {
        self.failed = true;
        ShardError::Malformed {
            offset,
            reason: reason.into(),
        }
    }

    fn next_record(&mut self) -> Result<Option<ShardRecord>, ShardError> {
        let start = self.offset;
        if self.inner.fill_buf()?.is_empty() {
            return Ok(None);
        }
        let mut len_bytes = [0u8; 4];
        if let Err(e) = self.inner.read_exact(&mut len_bytes) {
            return Err(match e.kind() {
                io::ErrorKind::UnexpectedEof => self.malformed(start, "truncated length prefix"),
                _ => ShardError::Io(e),
            });
        }
        let len = u32::from_le_bytes(len_bytes) as usize;
        if len < HEADER_LEN {
            return Err(self.malformed(start, format!("payload length {len} shorter than header")));
        }
        let mut payload = vec![0u8; len];
        if let Err(e) = self.inner.read_exact(&mut payload) {
            return Err(match e.kind() {
                io::ErrorKind::UnexpectedEof => {
                    self.malformed(start, format!("truncated payload, expected {len} bytes"))
                }
                _ => ShardError::Io(e),
            });
        }
        self.offset += 4 + len as u64;

        let lang = match Language::from_index(payload[0]) {
            Some(l) => l,
            None => return Err(self.malformed(start, format!("bad language index {}", payload[0]))),
        };
        let source = match SourceKind::from_byte(payload[1]) {
            Ok(s) => s,
            Err(_) => return Err(self.malformed(start, format!("bad source kind {}", payload[1]))),
        };
        let lang = match payload[2] {
            0 => LanguageTag::native(lang),
            1 => match LanguageTag::transliterated(lang) {
                Ok(t) => t,
                Err(e) => return Err(self.malformed(start, e.to_string())),
            },
            b => return Err(self.malformed(start, format!("bad transliterated flag {b}"))),
        };
        payload.drain(..HEADER_LEN);
        let text = match String::from_utf8(payload) {
            Ok(t) => t,
            Err(_) => return Err(self.malformed(start, "invalid UTF-8 text")),
        };
        Ok(Some(ShardRecord { lang, source, text }))
    }
}

impl<R: BufRead> Iterator for ShardReader<R> {
    type Item = Result<ShardRecord, ShardError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        self.next_record().transpose()
    }
}
