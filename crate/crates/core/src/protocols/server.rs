//! The platform server: avatar records, challenges and session tokens.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{AbortCode, NonceTable, ProtocolError};
use crate::bilinear::PairingSuite;
use crate::identity::{Avatar, DriverType, SerialNumber};
use crate::registry::Registry;

pub type SessionToken = [u8; 16];

#[derive(Debug)]
struct Slot<S: PairingSuite> {
    owner: SerialNumber,
    avatar: Option<Avatar<S>>,
    token: Option<SessionToken>,
}

/// One avatar record, for carrying server state between processes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AvatarRecord<S: PairingSuite> {
    pub aid: Vec<u8>,
    pub owner: SerialNumber,
    pub avatar: Option<Avatar<S>>,
    pub token: Option<SessionToken>,
}

/// Holds one record per avatar id. All record mutation goes through one
/// lock, so an avatar never has two drivers.
#[derive(Debug)]
pub struct Server<S: PairingSuite> {
    registry: Arc<Registry<S>>,
    slots: Mutex<HashMap<Vec<u8>, Slot<S>>>,
    pub(crate) nonces: NonceTable,
    rng: Mutex<ChaCha20Rng>,
}

impl<S: PairingSuite> Server<S> {
    pub fn new(registry: Arc<Registry<S>>) -> Self {
        Server {
            registry,
            slots: Mutex::new(HashMap::new()),
            nonces: NonceTable::new(),
            rng: Mutex::new(ChaCha20Rng::from_entropy()),
        }
    }

    /// Replaces the entropy-seeded generator, for reproducible runs.
    pub fn reseed(&self, seed: u64) {
        *self.rng.lock().expect("rng lock") = ChaCha20Rng::seed_from_u64(seed);
    }

    pub fn registry(&self) -> &Registry<S> {
        &self.registry
    }

    pub fn suite(&self) -> &S {
        self.registry.suite()
    }

    /// Creates the empty record `(sn, aid, -, -, -, -, -)`.
    pub fn register_avatar(&self, owner: SerialNumber, aid: &[u8]) -> Result<(), ProtocolError> {
        let mut slots = self.slots.lock().expect("slots lock");
        if slots.contains_key(aid) {
            return Err(ProtocolError::AvatarExists(String::from_utf8_lossy(aid).into_owned()));
        }
        slots.insert(
            aid.to_vec(),
            Slot {
                owner,
                avatar: None,
                token: None,
            },
        );
        Ok(())
    }

    /// Every record, ordered by avatar id.
    pub fn records(&self) -> Vec<AvatarRecord<S>> {
        let slots = self.slots.lock().expect("slots lock");
        let mut out: Vec<_> = slots
            .iter()
            .map(|(aid, s)| AvatarRecord {
                aid: aid.clone(),
                owner: s.owner,
                avatar: s.avatar.clone(),
                token: s.token,
            })
            .collect();
        out.sort_by(|a, b| a.aid.cmp(&b.aid));
        out
    }

    /// Reinstates a record taken from [`Server::records`]. The stored
    /// avatar must belong to the record's owner and id.
    pub fn restore(&self, record: AvatarRecord<S>) -> Result<(), ProtocolError> {
        if let Some(a) = &record.avatar {
            if a.aid != record.aid || a.sn_u != record.owner {
                return Err(ProtocolError::Aborted(AbortCode::NoSuchAvatar));
            }
        }
        self.register_avatar(record.owner, &record.aid)?;
        let mut slots = self.slots.lock().expect("slots lock");
        let slot = slots.get_mut(&record.aid).expect("just registered");
        slot.avatar = record.avatar;
        slot.token = record.token;
        Ok(())
    }

    /// The current record, `None` while empty or unknown.
    pub fn avatar(&self, aid: &[u8]) -> Option<Avatar<S>> {
        self.slots.lock().expect("slots lock").get(aid)?.avatar.clone()
    }

    /// Whether `token` is the live human session of `aid`.
    pub fn session_valid(&self, aid: &[u8], token: &SessionToken) -> bool {
        let slots = self.slots.lock().expect("slots lock");
        slots.get(aid).is_some_and(|s| s.token.as_ref() == Some(token))
    }

    pub(crate) fn fill<T>(&self, f: impl FnOnce(&mut ChaCha20Rng) -> T) -> T {
        f(&mut self.rng.lock().expect("rng lock"))
    }

    /// Checks that `owner` may log in to `aid`.
    pub(crate) fn check_login(&self, owner: &SerialNumber, aid: &[u8]) -> Result<(), AbortCode> {
        let slots = self.slots.lock().expect("slots lock");
        let slot = slots.get(aid).ok_or(AbortCode::NoSuchAvatar)?;
        if slot.owner != *owner {
            return Err(AbortCode::NoSuchAvatar);
        }
        if slot.avatar.as_ref().is_some_and(|a| a.driver_type() == DriverType::AiProxy) {
            return Err(AbortCode::AvatarBusy);
        }
        Ok(())
    }

    /// Installs a freshly logged-in human avatar and issues its session
    /// token, replacing any earlier human session.
    pub(crate) fn install_login(&self, avatar: Avatar<S>) -> Result<SessionToken, AbortCode> {
        let mut token = [0u8; 16];
        self.fill(|rng| rng.fill_bytes(&mut token));
        let mut slots = self.slots.lock().expect("slots lock");
        let slot = slots.get_mut(&avatar.aid).ok_or(AbortCode::NoSuchAvatar)?;
        if slot.owner != avatar.sn_u {
            return Err(AbortCode::NoSuchAvatar);
        }
        if slot.avatar.as_ref().is_some_and(|a| a.driver_type() == DriverType::AiProxy) {
            return Err(AbortCode::AvatarBusy);
        }
        slot.avatar = Some(avatar);
        slot.token = Some(token);
        Ok(token)
    }

    /// Hands a human-driven avatar to a proxy and forces the user offline.
    /// The description must be the one the user logged in with.
    pub(crate) fn transfer(&self, updated: Avatar<S>) -> Result<(), AbortCode> {
        let mut slots = self.slots.lock().expect("slots lock");
        let slot = slots.get_mut(&updated.aid).ok_or(AbortCode::NoSuchAvatar)?;
        if slot.owner != updated.sn_u {
            return Err(AbortCode::NoSuchAvatar);
        }
        let current = slot.avatar.as_ref().ok_or(AbortCode::NotLoggedIn)?;
        if current.driver_type() != DriverType::Human {
            return Err(AbortCode::AvatarBusy);
        }
        if slot.token.is_none() {
            return Err(AbortCode::NotLoggedIn);
        }
        let same_description = match (&current.vid, &updated.vid) {
            (Some(a), Some(b)) => a.message == b.message,
            _ => false,
        };
        if !same_description {
            return Err(AbortCode::TransferRejected);
        }
        slot.avatar = Some(updated);
        slot.token = None;
        Ok(())
    }
}
