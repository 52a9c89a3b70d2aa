//! Identity provider, public token log and the trusted `SN -> ID` store.
//!
//! The provider signs identity tokens and appends them to a hash-chained
//! [`Ledger`]. The binding from serial number to real identity lives in a
//! separate [`TrustedStore`] that only answers callers holding the tracing
//! authority's [`AuthorityToken`].

mod ledger;

pub use ledger::{first_broken, Ledger, LedgerEntry, GENESIS_DIGEST};

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::bilinear::PairingSuite;
use crate::biometric::IrisTemplate;
use crate::cps::{KeyPair, PublicKey};
use crate::encoding::{DecodeError, Decoder, Encoder};
use crate::identity::{IdentityError, Mit, SerialNumber, UserId};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("metaverse identity {0:?} is already registered")]
    DuplicateMid(String),
    #[error("unknown serial number {0}")]
    UnknownSn(SerialNumber),
    #[error("caller lacks the tracing authority credential")]
    Unauthorized,
    #[error("ledger chain breaks at entry {0}")]
    CorruptLedger(u64),
    #[error("trusted store is corrupt: {0}")]
    CorruptStore(DecodeError),
    #[error("stored token is invalid: {0}")]
    InvalidToken(#[from] IdentityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Static credential of the tracing authority.
#[derive(Clone, PartialEq, Eq)]
pub struct AuthorityToken(pub String);

impl std::fmt::Debug for AuthorityToken {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AuthorityToken(<redacted>)")
    }
}

/// The `SN -> ID` binding recorded at registration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrustedRecord {
    pub sn: SerialNumber,
    pub id: UserId,
}

impl TrustedRecord {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.fixed(&self.sn.0);
        self.id.encode(&mut e);
        e.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let sn = SerialNumber(d.array()?);
        let id = UserId::decode(&mut d).map_err(|_| DecodeError::InvalidField("user id"))?;
        d.finish()?;
        Ok(TrustedRecord { sn, id })
    }
}

/// File of length-prefixed [`TrustedRecord`]s, read only with the
/// authority credential.
#[derive(Debug)]
pub struct TrustedStore {
    file: Option<File>,
    records: HashMap<SerialNumber, UserId>,
    token: AuthorityToken,
}

impl TrustedStore {
    pub fn in_memory(token: AuthorityToken) -> Self {
        TrustedStore {
            file: None,
            records: HashMap::new(),
            token,
        }
    }

    pub fn open(path: &Path, token: AuthorityToken) -> Result<Self, RegistryError> {
        let mut records = HashMap::new();
        if path.exists() {
            let mut raw = Vec::new();
            File::open(path)?.read_to_end(&mut raw)?;
            let mut d = Decoder::new(&raw);
            while d.remaining() > 0 {
                let r = d
                    .bytes()
                    .and_then(TrustedRecord::from_bytes)
                    .map_err(RegistryError::CorruptStore)?;
                records.insert(r.sn, r.id);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(TrustedStore {
            file: Some(file),
            records,
            token,
        })
    }

    fn insert(&mut self, record: TrustedRecord) -> Result<(), RegistryError> {
        if let Some(file) = self.file.as_mut() {
            file.write_all(&Encoder::new().bytes(&record.to_bytes()).finish())?;
            file.flush()?;
        }
        self.records.insert(record.sn, record.id);
        Ok(())
    }

    pub fn resolve(&self, sn: &SerialNumber, credential: Option<&AuthorityToken>) -> Result<UserId, RegistryError> {
        if credential != Some(&self.token) {
            return Err(RegistryError::Unauthorized);
        }
        self.records.get(sn).cloned().ok_or(RegistryError::UnknownSn(*sn))
    }

    fn mids(&self) -> impl Iterator<Item = &Vec<u8>> {
        self.records.values().map(|id| &id.mid)
    }
}

/// Where the registry keeps its state.
#[derive(Clone, Debug)]
pub struct RegistryConfig {
    pub ledger_path: Option<PathBuf>,
    pub trusted_store_path: Option<PathBuf>,
    pub authority_token: AuthorityToken,
}

impl RegistryConfig {
    pub fn in_memory(authority_token: AuthorityToken) -> Self {
        RegistryConfig {
            ledger_path: None,
            trusted_store_path: None,
            authority_token,
        }
    }
}

#[derive(Debug)]
struct Inner {
    ledger: Ledger,
    by_sn: HashMap<SerialNumber, usize>,
    mids: HashSet<Vec<u8>>,
    trusted: TrustedStore,
}

/// Identity provider plus its storage.
///
/// Reads take a shared lock; registration holds the exclusive lock for the
/// whole issue-append-bind sequence, so readers only ever see fully
/// committed tokens.
#[derive(Debug)]
pub struct Registry<S: PairingSuite> {
    suite: S,
    idp: KeyPair<S>,
    inner: RwLock<Inner>,
    rng: Mutex<ChaCha20Rng>,
    fetches: AtomicU64,
}

impl<S: PairingSuite> Registry<S> {
    pub fn open(suite: S, idp: KeyPair<S>, config: &RegistryConfig) -> Result<Self, RegistryError> {
        let ledger = match &config.ledger_path {
            Some(p) => Ledger::open(p)?,
            None => Ledger::in_memory(),
        };
        let trusted = match &config.trusted_store_path {
            Some(p) => TrustedStore::open(p, config.authority_token.clone())?,
            None => TrustedStore::in_memory(config.authority_token.clone()),
        };
        let mut by_sn = HashMap::new();
        for (i, e) in ledger.entries().iter().enumerate() {
            let sn = Mit::<S>::peek_sn(&e.payload).map_err(|_| RegistryError::CorruptLedger(i as u64))?;
            by_sn.insert(sn, i);
        }
        let mids = trusted.mids().cloned().collect();
        Ok(Registry {
            suite,
            idp,
            inner: RwLock::new(Inner {
                ledger,
                by_sn,
                mids,
                trusted,
            }),
            rng: Mutex::new(ChaCha20Rng::from_entropy()),
            fetches: AtomicU64::new(0),
        })
    }

    pub fn in_memory(suite: S, idp: KeyPair<S>, token: AuthorityToken) -> Self {
        Self::open(suite, idp, &RegistryConfig::in_memory(token)).expect("in-memory registry")
    }

    /// Replaces the entropy-seeded generator, for reproducible runs.
    pub fn reseed(&self, seed: u64) {
        *self.rng.lock().expect("rng lock") = ChaCha20Rng::seed_from_u64(seed);
    }

    pub fn suite(&self) -> &S {
        &self.suite
    }

    pub fn idp_public_key(&self) -> &PublicKey<S> {
        self.idp.public()
    }

    /// A fresh registry-assigned metaverse identity.
    pub fn assign_mid(&self) -> Vec<u8> {
        let mut b = [0u8; 8];
        self.rng.lock().expect("rng lock").fill_bytes(&mut b);
        format!("mid-{}", hex::encode(b)).into_bytes()
    }

    /// Issues and publishes a token for `id`, binding its fresh serial
    /// number to `id` in the trusted store.
    pub fn register_user(
        &self,
        id: UserId,
        pk: PublicKey<S>,
        template: IrisTemplate,
        info: Vec<u8>,
    ) -> Result<Mit<S>, RegistryError> {
        let mut inner = self.inner.write().expect("registry lock");
        if inner.mids.contains(&id.mid) {
            return Err(RegistryError::DuplicateMid(String::from_utf8_lossy(&id.mid).into_owned()));
        }
        let mit = {
            let mut rng = self.rng.lock().expect("rng lock");
            let sn = loop {
                let sn = SerialNumber::random(&mut *rng);
                if !inner.by_sn.contains_key(&sn) {
                    break sn;
                }
            };
            Mit::issue(&self.suite, &self.idp, sn, pk, template, info, &mut *rng)
        };
        let index = inner.ledger.len();
        inner.ledger.append(mit.to_bytes(&self.suite))?;
        inner.by_sn.insert(mit.sn, index);
        inner.trusted.insert(TrustedRecord {
            sn: mit.sn,
            id: id.clone(),
        })?;
        inner.mids.insert(id.mid);
        log::info!("registered {} at ledger index {index}", mit.sn);
        Ok(mit)
    }

    /// The raw published token. Callers verify the endorsement themselves
    /// with their own copy of the provider key.
    pub fn fetch_mit(&self, sn: &SerialNumber) -> Result<Vec<u8>, RegistryError> {
        let inner = self.inner.read().expect("registry lock");
        let i = *inner.by_sn.get(sn).ok_or(RegistryError::UnknownSn(*sn))?;
        self.fetches.fetch_add(1, Ordering::Relaxed);
        Ok(inner.ledger.entries()[i].payload.clone())
    }

    /// Fetches and verifies a token against this provider's key.
    pub fn get_mit(&self, sn: &SerialNumber) -> Result<Mit<S>, RegistryError> {
        let raw = self.fetch_mit(sn)?;
        Ok(Mit::from_bytes(&self.suite, &raw, self.idp.public())?)
    }

    /// Total token fetches since the registry was opened.
    pub fn fetch_count(&self) -> u64 {
        self.fetches.load(Ordering::Relaxed)
    }

    pub fn resolve_sn(&self, sn: &SerialNumber, credential: Option<&AuthorityToken>) -> Result<UserId, RegistryError> {
        self.inner.read().expect("registry lock").trusted.resolve(sn, credential)
    }

    pub fn verify_chain(&self) -> bool {
        self.inner.read().expect("registry lock").ledger.verify_chain()
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("registry lock").ledger.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of the entry digests, oldest first.
    pub fn digests(&self) -> Vec<[u8; 32]> {
        let inner = self.inner.read().expect("registry lock");
        inner.ledger.entries().iter().map(|e| e.entry_digest).collect()
    }

    /// All published serial numbers in ledger order.
    pub fn serial_numbers(&self) -> Vec<SerialNumber> {
        let inner = self.inner.read().expect("registry lock");
        inner
            .ledger
            .entries()
            .iter()
            .filter_map(|e| Mit::<S>::peek_sn(&e.payload).ok())
            .collect()
    }
}
