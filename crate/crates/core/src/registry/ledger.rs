//! Append-only hash-chained log.
//!
//! Each entry commits to its index, the previous entry's digest and its
//! payload. The file form is a sequence of entries, each prefixed with its
//! 4-byte big-endian length.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::RegistryError;
use crate::encoding::{DecodeError, Decoder, Encoder};

/// Previous-digest value of the first entry.
pub const GENESIS_DIGEST: [u8; 32] = [0u8; 32];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerEntry {
    pub index: u64,
    pub prev_digest: [u8; 32],
    pub payload: Vec<u8>,
    pub entry_digest: [u8; 32],
}

impl LedgerEntry {
    pub fn digest_of(index: u64, prev_digest: &[u8; 32], payload: &[u8]) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(index.to_be_bytes());
        h.update(prev_digest);
        h.update(payload);
        h.finalize().into()
    }

    fn new(index: u64, prev_digest: [u8; 32], payload: Vec<u8>) -> Self {
        let entry_digest = Self::digest_of(index, &prev_digest, &payload);
        LedgerEntry {
            index,
            prev_digest,
            payload,
            entry_digest,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        Encoder::new()
            .u64(self.index)
            .fixed(&self.prev_digest)
            .bytes(&self.payload)
            .fixed(&self.entry_digest)
            .finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let entry = LedgerEntry {
            index: d.u64()?,
            prev_digest: d.array()?,
            payload: d.bytes()?.to_vec(),
            entry_digest: d.array()?,
        };
        d.finish()?;
        Ok(entry)
    }
}

/// Index of the first entry that breaks the chain, if any.
pub fn first_broken(entries: &[LedgerEntry]) -> Option<u64> {
    let mut prev = GENESIS_DIGEST;
    for (i, e) in entries.iter().enumerate() {
        let recomputed = LedgerEntry::digest_of(e.index, &e.prev_digest, &e.payload);
        if e.index != i as u64 || e.prev_digest != prev || e.entry_digest != recomputed {
            return Some(i as u64);
        }
        prev = e.entry_digest;
    }
    None
}

fn read_entries(path: &Path) -> Result<Vec<LedgerEntry>, RegistryError> {
    let mut raw = Vec::new();
    File::open(path)?.read_to_end(&mut raw)?;
    let mut d = Decoder::new(&raw);
    let mut entries = Vec::new();
    while d.remaining() > 0 {
        let index = entries.len() as u64;
        let framed = d.bytes().map_err(|_| RegistryError::CorruptLedger(index))?;
        entries.push(LedgerEntry::from_bytes(framed).map_err(|_| RegistryError::CorruptLedger(index))?);
    }
    Ok(entries)
}

#[derive(Debug)]
pub struct Ledger {
    path: Option<PathBuf>,
    file: Option<File>,
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn in_memory() -> Self {
        Ledger {
            path: None,
            file: None,
            entries: Vec::new(),
        }
    }

    /// Opens or creates the log at `path`, refusing a broken chain.
    pub fn open(path: &Path) -> Result<Self, RegistryError> {
        let entries = if path.exists() { read_entries(path)? } else { Vec::new() };
        if let Some(i) = first_broken(&entries) {
            return Err(RegistryError::CorruptLedger(i));
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Ledger {
            path: Some(path.to_path_buf()),
            file: Some(file),
            entries,
        })
    }

    pub fn append(&mut self, payload: Vec<u8>) -> Result<&LedgerEntry, RegistryError> {
        let prev = self.entries.last().map_or(GENESIS_DIGEST, |e| e.entry_digest);
        let entry = LedgerEntry::new(self.entries.len() as u64, prev, payload);
        if let Some(file) = self.file.as_mut() {
            let framed = Encoder::new().bytes(&entry.to_bytes()).finish();
            file.write_all(&framed)?;
            file.flush()?;
        }
        self.entries.push(entry);
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Walks the chain from genesis. A file-backed log is re-read from
    /// disk so that edits made after opening are caught.
    pub fn verify_chain(&self) -> bool {
        match &self.path {
            None => first_broken(&self.entries).is_none(),
            Some(p) => match read_entries(p) {
                Ok(on_disk) => first_broken(&on_disk).is_none() && on_disk.len() == self.entries.len(),
                Err(_) => false,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_links_and_detects_edits() {
        let mut l = Ledger::in_memory();
        assert!(l.verify_chain());
        for i in 0..5u8 {
            l.append(vec![i; 3]).unwrap();
        }
        assert!(l.verify_chain());
        assert_eq!(l.entries()[0].prev_digest, GENESIS_DIGEST);
        assert_eq!(l.entries()[3].prev_digest, l.entries()[2].entry_digest);

        let mut edited = l.entries().to_vec();
        edited[2].payload[0] ^= 1;
        assert_eq!(first_broken(&edited), Some(2));
        let mut dropped = l.entries().to_vec();
        dropped.remove(1);
        assert_eq!(first_broken(&dropped), Some(1));
    }

    #[test]
    fn file_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.bin");
        {
            let mut l = Ledger::open(&path).unwrap();
            l.append(b"one".to_vec()).unwrap();
            l.append(b"two".to_vec()).unwrap();
        }
        let l = Ledger::open(&path).unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l.entries()[1].payload, b"two");
        assert!(l.verify_chain());

        let mut raw = std::fs::read(&path).unwrap();
        let pos = raw.len() - 40; // inside the second entry
        raw[pos] ^= 0x01;
        std::fs::write(&path, &raw).unwrap();
        assert!(!l.verify_chain());
        assert!(matches!(Ledger::open(&path), Err(RegistryError::CorruptLedger(_))));
    }
}
