//! Binary record files.
//!
//! ```text
//! header   "MURC" | u8 version | 2 bytes of the vocabulary hash
//! record   u32 payload length | payload
//! payload  u8 objective (0 mlm, 1 tlm)
//!          u8 pair kind (0 none, 1 translated, 2 transliterated)
//!          u8 source language, u8 target language (0xFF when unset)
//!          u16 token count n
//!          n x u32 token ids
//!          ceil(n/8) bytes of segment bits, least significant bit first
//!          u16 mask count m
//!          m x u32 positions, m x u32 labels
//! ```
//!
//! Integers are little-endian. Version 1 lays TLM pairs out as
//! `[CLS] src [SEP] tgt [SEP]` with plain sequential positions.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Objective, TrainingInstance};
use crate::corpus::{LanguageTag, PairKind};

pub const RECORD_MAGIC: [u8; 4] = *b"MURC";
pub const RECORD_VERSION: u8 = 1;
const HEADER_LEN: usize = 7;
const NO_LANG: u8 = 0xFF;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("not a record file (bad magic)")]
    BadMagic,
    #[error("record format version {found}, expected {RECORD_VERSION}")]
    VersionMismatch { found: u8 },
    #[error("truncated at byte offset {offset}")]
    Truncated { offset: u64 },
    #[error("malformed record at byte offset {offset}: {reason}")]
    Malformed { offset: u64, reason: String },
    #[error("instance cannot be encoded: {0}")]
    Unencodable(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<RecordError>,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordFile {
    pub vocab_hash_prefix: [u8; 2],
    pub instances: Vec<TrainingInstance>,
}

fn pair_kind_byte(k: Option<PairKind>) -> u8 {
    match k {
        None => 0,
        Some(PairKind::Translated) => 1,
        Some(PairKind::Transliterated) => 2,
    }
}

fn encode(inst: &TrainingInstance, buf: &mut Vec<u8>) -> Result<(), RecordError> {
    let n = inst.token_ids.len();
    let m = inst.masked_positions.len();
    if n > u16::MAX as usize || m > u16::MAX as usize {
        return Err(RecordError::Unencodable(format!("{n} tokens, {m} masks")));
    }
    if inst.segment_ids.len() != n || inst.masked_labels.len() != m {
        return Err(RecordError::Unencodable("field lengths disagree".into()));
    }
    buf.push(inst.objective.to_byte());
    buf.push(pair_kind_byte(inst.pair_kind));
    buf.push(inst.lang_src.to_byte());
    buf.push(inst.lang_tgt.map_or(NO_LANG, LanguageTag::to_byte));
    buf.extend_from_slice(&(n as u16).to_le_bytes());
    for id in &inst.token_ids {
        buf.extend_from_slice(&id.to_le_bytes());
    }
    let mut bits = vec![0u8; n.div_ceil(8)];
    for (i, &s) in inst.segment_ids.iter().enumerate() {
        match s {
            0 => {}
            1 => bits[i / 8] |= 1 << (i % 8),
            _ => return Err(RecordError::Unencodable(format!("segment id {s}"))),
        }
    }
    buf.extend_from_slice(&bits);
    buf.extend_from_slice(&(m as u16).to_le_bytes());
    for p in &inst.masked_positions {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    for l in &inst.masked_labels {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    Ok(())
}

/// Writes a header and all instances; returns the number of records.
pub fn write_records<'a, W, I>(mut w: W, vocab_hash: &[u8], instances: I) -> Result<u64, RecordError>
where
    W: Write,
    I: IntoIterator<Item = &'a TrainingInstance>,
{
    let mut header = RECORD_MAGIC.to_vec();
    header.push(RECORD_VERSION);
    header.extend_from_slice(&vocab_hash[..2]);
    w.write_all(&header)?;
    let mut count = 0;
    let mut buf = Vec::new();
    for inst in instances {
        buf.clear();
        encode(inst, &mut buf)?;
        w.write_all(&(buf.len() as u32).to_le_bytes())?;
        w.write_all(&buf)?;
        count += 1;
    }
    w.flush()?;
    Ok(count)
}

pub fn write_record_file<'a, I>(path: &Path, vocab_hash: &[u8], instances: I) -> Result<u64, RecordError>
where
    I: IntoIterator<Item = &'a TrainingInstance>,
{
    let wrap = |e: RecordError| RecordError::File {
        path: path.to_path_buf(),
        source: Box::new(e),
    };
    let f = File::create(path).map_err(|e| wrap(e.into()))?;
    write_records(BufWriter::new(f), vocab_hash, instances).map_err(wrap)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        if self.data.len() - self.pos < n {
            return Err("payload shorter than its contents".into());
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>, String> {
        Ok(self
            .take(4 * n)?
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn decode(payload: &[u8], offset: u64) -> Result<TrainingInstance, RecordError> {
    let mut c = Cursor { data: payload, pos: 0 };
    let inner = |c: &mut Cursor| -> Result<TrainingInstance, String> {
        let objective = Objective::from_byte(c.u8()?).ok_or("bad objective")?;
        let pair_kind = match c.u8()? {
            0 => None,
            1 => Some(PairKind::Translated),
            2 => Some(PairKind::Transliterated),
            b => return Err(format!("bad pair kind {b}")),
        };
        let lang_src = LanguageTag::from_byte(c.u8()?).map_err(|e| e.to_string())?;
        let lang_tgt = match c.u8()? {
            NO_LANG => None,
            b => Some(LanguageTag::from_byte(b).map_err(|e| e.to_string())?),
        };
        let n = c.u16()? as usize;
        let token_ids = c.u32s(n)?;
        let bits = c.take(n.div_ceil(8))?;
        let segment_ids: Vec<u8> = (0..n).map(|i| (bits[i / 8] >> (i % 8)) & 1).collect();
        if n % 8 != 0 && bits[n / 8] >> (n % 8) != 0 {
            return Err("nonzero segment padding bits".into());
        }
        let m = c.u16()? as usize;
        let masked_positions = c.u32s(m)?;
        let masked_labels = c.u32s(m)?;
        if c.pos != c.data.len() {
            return Err(format!("{} trailing bytes", c.data.len() - c.pos));
        }
        Ok(TrainingInstance {
            objective,
            pair_kind,
            lang_src,
            lang_tgt,
            token_ids,
            segment_ids,
            masked_positions,
            masked_labels,
        })
    };
    inner(&mut c).map_err(|reason| RecordError::Malformed { offset, reason })
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(k) => filled += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

pub fn read_records<R: Read>(mut r: R) -> Result<RecordFile, RecordError> {
    let mut header = [0u8; HEADER_LEN];
    let got = read_full(&mut r, &mut header)?;
    if got < 4 || header[..4] != RECORD_MAGIC {
        return Err(if got < 4 && RECORD_MAGIC.starts_with(&header[..got]) {
            RecordError::Truncated { offset: 0 }
        } else {
            RecordError::BadMagic
        });
    }
    if got < HEADER_LEN {
        if got > 4 && header[4] != RECORD_VERSION {
            return Err(RecordError::VersionMismatch { found: header[4] });
        }
        return Err(RecordError::Truncated { offset: 0 });
    }
    if header[4] != RECORD_VERSION {
        return Err(RecordError::VersionMismatch { found: header[4] });
    }
    let vocab_hash_prefix = [header[5], header[6]];
    let mut instances = Vec::new();
    let mut offset = HEADER_LEN as u64;
    let mut payload = Vec::new();
    loop {
        let mut len = [0u8; 4];
        match read_full(&mut r, &mut len)? {
            0 => break,
            4 => {}
            _ => return Err(RecordError::Truncated { offset }),
        }
        let len = u32::from_le_bytes(len) as usize;
        payload.clear();
        if (&mut r).take(len as u64).read_to_end(&mut payload)? < len {
            return Err(RecordError::Truncated { offset });
        }
        instances.push(decode(&payload, offset)?);
        offset += 4 + len as u64;
    }
    Ok(RecordFile {
        vocab_hash_prefix,
        instances,
    })
}

pub fn read_record_file(path: &Path) -> Result<RecordFile, RecordError> {
    let wrap = |e: RecordError| RecordError::File {
        path: path.to_path_buf(),
        source: Box::new(e),
    };
    let f = File::open(path).map_err(|e| wrap(e.into()))?;
    read_records(BufReader::new(f)).map_err(wrap)
}
