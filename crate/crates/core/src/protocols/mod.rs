//! Login, delegation, mutual authentication and tracing.
//!
//! Each protocol is a pair of [`Party`] state machines exchanging
//! [`Message`]s over a [`Transport`]. A party rejects any message whose
//! step or session id it does not expect and answers a failed check with
//! an abort carrying an [`AbortCode`].
//!
//! * [`login`]: a user proves control of an avatar to the [`Server`] with a
//!   self-targeted original signature (the virtual identity) and a fresh
//!   collision over an iris reading and the server's challenge (the
//!   physical identity).
//! * [`delegate`]: the user signs a fresh iris reading for an AI proxy's
//!   key; the proxy answers with a collision over the avatar description
//!   and the server hands the avatar over, revoking the user's session.
//! * [`mutual_auth`]: a verifier checks a human- or AI-driven avatar and
//!   both sides agree on `Key_AB = g^(x_A w2 + x_B w1)`. The verifier keeps
//!   the transcript as evidence.
//! * [`trace`]: the tracing authority re-verifies that evidence and
//!   resolves the avatar's original manipulator.

pub mod delegate;
pub mod login;
pub mod message;
pub mod mutual;
pub mod server;
pub mod trace;
pub mod transport;

pub use delegate::{delegate, DelegateOutcome, ProxySession};
pub use login::{login, HumanSession, LoginOutcome};
pub use message::{Message, ProtocolTranscript, Step, TranscriptStatus};
pub use mutual::{mutual_auth, MutualEvidence, MutualOutcome, Prover};
pub use transport::abort_code;
pub use server::{AvatarRecord, Server, SessionToken};
pub use trace::{audit_mutual_transcript, trace, TraceError, TraceReport};
pub use transport::{run_over, run_session, Transport, TransportKind};

use std::collections::HashMap;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use rand::RngCore;
use thiserror::Error;

use crate::bilinear::PairingSuite;
use crate::biometric::{self, IrisFeature, IrisTemplate, DEFAULT_NOISE_RATE};
use crate::cps::{self, KeyPair, PublicKey};
use crate::encoding::{DecodeError, Decoder, Encoder};
use crate::identity::{Mit, UserId};
use crate::registry::{Registry, RegistryError};

/// Why a party stopped a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum AbortCode {
    UnknownSn = 1,
    BadEndorsement = 2,
    VidInvalid = 3,
    PidInvalid = 4,
    ChallengeMismatch = 5,
    StaleChallenge = 6,
    IrisMismatch = 7,
    OutOfOrder = 8,
    Malformed = 9,
    WrongSession = 10,
    NoSuchAvatar = 11,
    AvatarBusy = 12,
    NotHumanDriven = 13,
    TransferRejected = 14,
    NotLoggedIn = 15,
    KeyBindingInvalid = 16,
}

impl AbortCode {
    pub fn from_byte(b: u8) -> Option<Self> {
        use AbortCode::*;
        Some(match b {
            1 => UnknownSn,
            2 => BadEndorsement,
            3 => VidInvalid,
            4 => PidInvalid,
            5 => ChallengeMismatch,
            6 => StaleChallenge,
            7 => IrisMismatch,
            8 => OutOfOrder,
            9 => Malformed,
            10 => WrongSession,
            11 => NoSuchAvatar,
            12 => AvatarBusy,
            13 => NotHumanDriven,
            14 => TransferRejected,
            15 => NotLoggedIn,
            16 => KeyBindingInvalid,
            _ => return None,
        })
    }
}

impl From<DecodeError> for AbortCode {
    fn from(_: DecodeError) -> Self {
        AbortCode::Malformed
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("session aborted: {0:?}")]
    Aborted(AbortCode),
    #[error("session ended before producing a result")]
    Incomplete,
    #[error("avatar {0:?} is already registered")]
    AvatarExists(String),
    #[error("transport: {0}")]
    Transport(#[from] std::io::Error),
}

/// One side of a protocol run.
pub trait Party {
    /// The opening message; only initiators are started.
    fn start(&mut self) -> Result<Message, AbortCode> {
        Err(AbortCode::OutOfOrder)
    }

    /// Processes one message. `Ok(None)` ends the run successfully.
    fn handle(&mut self, msg: &Message) -> Result<Option<Message>, AbortCode>;
}

/// Single-use challenges. A challenge is issued once and may be consumed
/// once.
#[derive(Debug, Default)]
pub struct NonceTable {
    used: Mutex<HashMap<[u8; 32], bool>>,
}

impl NonceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn issue<R: RngCore + ?Sized>(&self, rng: &mut R) -> [u8; 32] {
        let mut table = self.used.lock().expect("nonce lock");
        loop {
            let mut c = [0u8; 32];
            rng.fill_bytes(&mut c);
            if let std::collections::hash_map::Entry::Vacant(v) = table.entry(c) {
                v.insert(false);
                return c;
            }
        }
    }

    pub fn consume(&self, c: &[u8; 32]) -> Result<(), AbortCode> {
        let mut table = self.used.lock().expect("nonce lock");
        match table.get_mut(c) {
            None => Err(AbortCode::ChallengeMismatch),
            Some(true) => Err(AbortCode::StaleChallenge),
            Some(used) => {
                *used = true;
                Ok(())
            }
        }
    }
}

/// Stand-in for an iris camera bound to one eye.
#[derive(Clone, Debug)]
pub struct IrisSensor {
    pub eye: IrisTemplate,
    pub noise_rate: f64,
    /// Simulated capture latency.
    pub delay: Duration,
}

impl IrisSensor {
    pub fn new(eye: IrisTemplate) -> Self {
        IrisSensor {
            eye,
            noise_rate: DEFAULT_NOISE_RATE,
            delay: Duration::ZERO,
        }
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn capture<R: RngCore + ?Sized>(&self, rng: &mut R) -> IrisFeature {
        if !self.delay.is_zero() {
            thread::sleep(self.delay);
        }
        biometric::sample(&self.eye, self.noise_rate, rng).expect("sensor noise rate must lie in [0, 1]")
    }
}

/// A registered human user.
#[derive(Clone, Debug)]
pub struct UserCtx<S: PairingSuite> {
    pub id: UserId,
    pub keys: KeyPair<S>,
    pub mit: Mit<S>,
    pub sensor: IrisSensor,
    /// Canonical avatar description, the virtual-identity message.
    pub description: Vec<u8>,
}

impl<S: PairingSuite> UserCtx<S> {
    /// Generates keys, enrolls the eye `eye_seed` and registers the user.
    pub fn enroll<R: RngCore + ?Sized>(
        registry: &Registry<S>,
        rid: &str,
        eye_seed: [u8; 32],
        description: Vec<u8>,
        rng: &mut R,
    ) -> Result<Self, RegistryError> {
        let keys = cps::keygen(registry.suite(), rng);
        let template = biometric::enroll(eye_seed);
        let id = UserId::new(rid, registry.assign_mid())?;
        let mit = registry.register_user(id.clone(), *keys.public(), template.clone(), b"user".to_vec())?;
        Ok(UserCtx {
            id,
            keys,
            mit,
            sensor: IrisSensor::new(template),
            description,
        })
    }
}

/// A registered agent without an iris: an AI proxy or a verifying avatar.
#[derive(Debug)]
pub struct AgentCtx<S: PairingSuite> {
    pub keys: KeyPair<S>,
    pub mit: Mit<S>,
    pub nonces: NonceTable,
}

impl<S: PairingSuite> AgentCtx<S> {
    pub fn new(keys: KeyPair<S>, mit: Mit<S>) -> Self {
        AgentCtx {
            keys,
            mit,
            nonces: NonceTable::new(),
        }
    }

    /// Generates keys and registers the agent. Its token carries a random
    /// template that no protocol step reads.
    pub fn enroll<R: RngCore + ?Sized>(registry: &Registry<S>, rid: &str, rng: &mut R) -> Result<Self, RegistryError> {
        let keys = cps::keygen(registry.suite(), rng);
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let id = UserId::new(rid, registry.assign_mid())?;
        let mit = registry.register_user(id, *keys.public(), biometric::enroll(seed), b"agent".to_vec())?;
        Ok(AgentCtx::new(keys, mit))
    }
}

/// Fetches a token and checks its provider endorsement.
pub(crate) fn fetch_mit<S: PairingSuite>(
    registry: &Registry<S>,
    sn: &crate::identity::SerialNumber,
) -> Result<Mit<S>, AbortCode> {
    let raw = registry.fetch_mit(sn).map_err(|_| AbortCode::UnknownSn)?;
    Mit::from_bytes(registry.suite(), &raw, registry.idp_public_key()).map_err(|_| AbortCode::BadEndorsement)
}

/// `PVer` over an identity `(M, R)`, additionally refusing an identity
/// check value.
pub(crate) fn verify_identity<S: PairingSuite>(
    suite: &S,
    signer: &PublicKey<S>,
    sigma: &S::G1,
    h: &S::G1,
    message: &[u8],
    check: &S::G1,
    proxy: &PublicKey<S>,
) -> bool {
    if suite.g1_is_identity(check) {
        return false;
    }
    let m = suite.hash_to_g1(message);
    cps::pver_prehashed(suite, signer, sigma, h, &m, check, proxy)
}

pub(crate) fn put_g1<S: PairingSuite>(e: &mut Encoder, suite: &S, x: &S::G1) {
    e.fixed(&suite.g1_to_bytes(x));
}

pub(crate) fn get_g1<S: PairingSuite>(d: &mut Decoder<'_>, suite: &S) -> Result<S::G1, DecodeError> {
    Ok(suite.g1_from_bytes(d.fixed(suite.g1_encoded_len())?)?)
}

/// Common guard: the message must belong to `session` and carry `step`.
pub(crate) fn expect(msg: &Message, session: &[u8; 16], step: Step) -> Result<(), AbortCode> {
    if msg.session_id != *session {
        return Err(AbortCode::WrongSession);
    }
    if msg.step != step {
        return Err(AbortCode::OutOfOrder);
    }
    Ok(())
}

pub(crate) fn random_session_id<R: RngCore + ?Sized>(rng: &mut R) -> [u8; 16] {
    let mut id = [0u8; 16];
    rng.fill_bytes(&mut id);
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn nonces_are_single_use() {
        let t = NonceTable::new();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let c = t.issue(&mut rng);
        assert_eq!(t.consume(&[0; 32]), Err(AbortCode::ChallengeMismatch));
        assert_eq!(t.consume(&c), Ok(()));
        assert_eq!(t.consume(&c), Err(AbortCode::StaleChallenge));
    }

    #[test]
    fn abort_codes_round_trip() {
        for b in 0..=255u8 {
            if let Some(c) = AbortCode::from_byte(b) {
                assert_eq!(c as u8, b);
            }
        }
        assert_eq!(AbortCode::from_byte(0), None);
    }
}
