//! Mutual authentication between avatars, with key agreement.
//!
//! ```text
//! A -> B  Claim     Avatar_A (an AI-driven avatar carries VID_P and PID_P)
//! B -> A  Challenge SN_B, C_a
//! A -> B  Response  PID, W1 = g^w1, bind = H(sid, SN_B, C_a, W1)
//! B -> A  KeyShare  W2 = g^w2, confirm = H(sid, bind, W2)
//! ```
//!
//! A human driver answers with a fresh iris reading over `C_a`; a proxy
//! presents the PID captured at delegation and the nonce binds only the
//! key exchange. Both sides end with `Key_AB = g^(x_D w2 + x_B w1)`, where
//! `x_D` is the driver's secret.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::delegate::{check_pid, ProxySession};
use super::login::HumanSession;
use super::message::{Message, ProtocolTranscript, Step};
use super::transport::{abort_code, run_over, TransportKind};
use super::{
    expect, fetch_mit, get_g1, random_session_id, verify_identity, AbortCode, AgentCtx, Party,
    ProtocolError, UserCtx,
};
use crate::bilinear::PairingSuite;
use crate::cps::{self, KeyPair, PublicKey};
use crate::encoding::{Decoder, Encoder};
use crate::identity::{physical_message, render_digest, Avatar, DriverType, Mit, Pid, SerialNumber, CHALLENGE_LEN};
use crate::registry::Registry;

const BIND_TAG: &[u8] = b"CPS-bind";
const CONFIRM_TAG: &[u8] = b"CPS-confirm";

/// The avatar being authenticated, with its driver's secrets.
pub enum Prover<'a, S: PairingSuite> {
    Human {
        user: &'a UserCtx<S>,
        session: &'a HumanSession<S>,
    },
    Proxy {
        agent: &'a AgentCtx<S>,
        session: &'a ProxySession<S>,
    },
}

impl<S: PairingSuite> Prover<'_, S> {
    fn avatar(&self) -> Avatar<S> {
        match self {
            Prover::Human { session, .. } => session.presented_avatar(),
            Prover::Proxy { session, .. } => session.avatar.clone(),
        }
    }

    fn keys(&self) -> &KeyPair<S> {
        match self {
            Prover::Human { user, .. } => &user.keys,
            Prover::Proxy { agent, .. } => &agent.keys,
        }
    }
}

/// What the verifier keeps for a later accusation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MutualEvidence<S: PairingSuite> {
    pub avatar: Avatar<S>,
    pub transcript: ProtocolTranscript,
    /// Digest of the rendered interaction image.
    pub image_digest: [u8; 32],
}

#[derive(Debug)]
pub struct MutualOutcome<S: PairingSuite> {
    pub prover_key: S::G1,
    pub verifier_key: S::G1,
    /// Exposed for audit; never sent.
    pub w1: S::Scalar,
    pub w2: S::Scalar,
    pub evidence: MutualEvidence<S>,
}

/// A claim that passed verification.
#[derive(Clone, Debug)]
pub(crate) struct CheckedClaim<S: PairingSuite> {
    pub avatar: Avatar<S>,
    pub owner: Mit<S>,
    pub driver: PublicKey<S>,
}

/// Verifies a claimed avatar: VID under `(pk_A, pk_driver)` and, for an
/// AI-driven avatar, the stored PID. Fetches one MIT for a human driver
/// and two for a proxy.
pub(crate) fn check_claim<S: PairingSuite>(
    registry: &Registry<S>,
    avatar: &Avatar<S>,
) -> Result<CheckedClaim<S>, AbortCode> {
    let suite = registry.suite();
    let owner = fetch_mit(registry, &avatar.sn_u)?;
    let driver = match avatar.driver_type() {
        DriverType::Human => owner.pk,
        DriverType::AiProxy => fetch_mit(registry, &avatar.sn_p)?.pk,
    };
    let vid = avatar.vid.as_ref().ok_or(AbortCode::VidInvalid)?;
    if !verify_identity(suite, &owner.pk, &avatar.sigma, &avatar.h, &vid.message, &vid.check, &driver) {
        return Err(AbortCode::VidInvalid);
    }
    if avatar.driver_type() == DriverType::AiProxy {
        let pid = avatar.pid.as_ref().ok_or(AbortCode::PidInvalid)?;
        check_pid(suite, &owner, &avatar.sigma, &avatar.h, pid, &driver)?;
    }
    Ok(CheckedClaim {
        avatar: avatar.clone(),
        owner,
        driver,
    })
}

pub(crate) fn binding(session_id: &[u8; 16], sn_b: &SerialNumber, challenge: &[u8], w1: &[u8]) -> [u8; 32] {
    Sha256::new()
        .chain(BIND_TAG)
        .chain(session_id)
        .chain(sn_b.0)
        .chain(challenge)
        .chain(w1)
        .finalize()
        .into()
}

pub(crate) fn confirmation(session_id: &[u8; 16], binding: &[u8; 32], w2: &[u8]) -> [u8; 32] {
    Sha256::new()
        .chain(CONFIRM_TAG)
        .chain(session_id)
        .chain(binding)
        .chain(w2)
        .finalize()
        .into()
}

pub(crate) fn decode_challenge(body: &[u8]) -> Result<(SerialNumber, [u8; CHALLENGE_LEN]), AbortCode> {
    let mut d = Decoder::new(body);
    let sn = SerialNumber(d.array()?);
    let c = d.array()?;
    d.finish()?;
    Ok((sn, c))
}

pub(crate) struct CheckedResponse<S: PairingSuite> {
    pub w1: S::G1,
    pub binding: [u8; 32],
}

/// Verifies a response against the issued challenge. Nonce consumption is
/// left to the caller.
pub(crate) fn check_response<S: PairingSuite>(
    suite: &S,
    claim: &CheckedClaim<S>,
    session_id: &[u8; 16],
    sn_b: &SerialNumber,
    challenge: &[u8; CHALLENGE_LEN],
    body: &[u8],
) -> Result<CheckedResponse<S>, AbortCode> {
    let mut d = Decoder::new(body);
    let pid = Pid::decode(suite, &mut d)?;
    let w1 = get_g1(&mut d, suite)?;
    let bind: [u8; 32] = d.array()?;
    d.finish()?;
    let avatar = &claim.avatar;
    match avatar.driver_type() {
        DriverType::Human => {
            let echoed = check_pid(suite, &claim.owner, &avatar.sigma, &avatar.h, &pid, &claim.driver)?;
            if echoed != *challenge {
                return Err(AbortCode::ChallengeMismatch);
            }
        }
        DriverType::AiProxy => {
            if avatar.pid.as_ref() != Some(&pid) {
                return Err(AbortCode::PidInvalid);
            }
        }
    }
    if suite.g1_is_identity(&w1) || bind != binding(session_id, sn_b, challenge, &suite.g1_to_bytes(&w1)) {
        return Err(AbortCode::KeyBindingInvalid);
    }
    Ok(CheckedResponse { w1, binding: bind })
}

pub(crate) fn check_key_share<S: PairingSuite>(
    suite: &S,
    session_id: &[u8; 16],
    binding: &[u8; 32],
    body: &[u8],
) -> Result<S::G1, AbortCode> {
    let mut d = Decoder::new(body);
    let w2 = get_g1(&mut d, suite)?;
    let confirm: [u8; 32] = d.array()?;
    d.finish()?;
    if suite.g1_is_identity(&w2) || confirm != confirmation(session_id, binding, &suite.g1_to_bytes(&w2)) {
        return Err(AbortCode::KeyBindingInvalid);
    }
    Ok(w2)
}

enum ProverState<S: PairingSuite> {
    Idle,
    AwaitChallenge,
    AwaitKeyShare { y_b: S::G1, binding: [u8; 32] },
    Done,
}

pub struct ProverParty<'a, S: PairingSuite> {
    registry: &'a Registry<S>,
    prover: Prover<'a, S>,
    rng: ChaCha20Rng,
    session_id: [u8; 16],
    state: ProverState<S>,
    w1: Option<S::Scalar>,
    key: Option<S::G1>,
}

impl<'a, S: PairingSuite> ProverParty<'a, S> {
    pub fn new(registry: &'a Registry<S>, prover: Prover<'a, S>, seed: [u8; 32]) -> Self {
        ProverParty {
            registry,
            prover,
            rng: ChaCha20Rng::from_seed(seed),
            session_id: [0; 16],
            state: ProverState::Idle,
            w1: None,
            key: None,
        }
    }

    /// `(w1, Key_AB)` once the key share has arrived.
    pub fn key(&self) -> Option<(S::Scalar, S::G1)> {
        Some((self.w1?, self.key?))
    }
}

impl<S: PairingSuite> Party for ProverParty<'_, S> {
    fn start(&mut self) -> Result<Message, AbortCode> {
        let suite = self.registry.suite();
        self.session_id = random_session_id(&mut self.rng);
        self.state = ProverState::AwaitChallenge;
        Ok(Message::new(
            self.session_id,
            Step::MutualClaim,
            self.prover.avatar().to_bytes(suite),
        ))
    }

    fn handle(&mut self, msg: &Message) -> Result<Option<Message>, AbortCode> {
        let suite = self.registry.suite();
        match std::mem::replace(&mut self.state, ProverState::Done) {
            ProverState::AwaitChallenge => {
                expect(msg, &self.session_id, Step::MutualChallenge)?;
                let (sn_b, challenge) = decode_challenge(&msg.body)?;
                let peer = fetch_mit(self.registry, &sn_b)?;
                let pid = match &self.prover {
                    Prover::Human { user, session } => {
                        let feature = user.sensor.capture(&mut self.rng);
                        let message = physical_message(&feature, &challenge);
                        let check = cps::psig(suite, &user.keys, &session.avatar.h, &message);
                        Pid { message, check }
                    }
                    Prover::Proxy { session, .. } => session.avatar.pid.clone().ok_or(AbortCode::PidInvalid)?,
                };
                let w1 = suite.random_nonzero_scalar(&mut self.rng);
                let w1_elem = suite.g1_pow(&suite.g1_generator(), &w1);
                let w1_bytes = suite.g1_to_bytes(&w1_elem);
                let bind = binding(&self.session_id, &sn_b, &challenge, &w1_bytes);
                let mut e = Encoder::new();
                pid.encode(suite, &mut e);
                e.fixed(&w1_bytes).fixed(&bind);
                self.w1 = Some(w1);
                self.state = ProverState::AwaitKeyShare {
                    y_b: *peer.pk.g1(),
                    binding: bind,
                };
                Ok(Some(Message::new(self.session_id, Step::MutualResponse, e.finish())))
            }
            ProverState::AwaitKeyShare { y_b, binding } => {
                expect(msg, &self.session_id, Step::MutualKeyShare)?;
                let w2 = check_key_share(suite, &self.session_id, &binding, &msg.body)?;
                let w1 = self.w1.as_ref().expect("set with the response");
                let own = suite.g1_pow(&w2, self.prover.keys().secret());
                self.key = Some(suite.g1_mul(&own, &suite.g1_pow(&y_b, w1)));
                Ok(None)
            }
            ProverState::Idle | ProverState::Done => Err(AbortCode::OutOfOrder),
        }
    }
}

enum VerifierState<S: PairingSuite> {
    AwaitClaim,
    AwaitResponse {
        claim: CheckedClaim<S>,
        challenge: [u8; CHALLENGE_LEN],
    },
    Done,
}

/// The verifying avatar `B`.
pub struct VerifierParty<'a, S: PairingSuite> {
    registry: &'a Registry<S>,
    agent: &'a AgentCtx<S>,
    rng: ChaCha20Rng,
    session_id: [u8; 16],
    state: VerifierState<S>,
    claimed: Option<Avatar<S>>,
    w2: Option<S::Scalar>,
    key: Option<S::G1>,
}

impl<'a, S: PairingSuite> VerifierParty<'a, S> {
    pub fn new(registry: &'a Registry<S>, agent: &'a AgentCtx<S>, seed: [u8; 32]) -> Self {
        VerifierParty {
            registry,
            agent,
            rng: ChaCha20Rng::from_seed(seed),
            session_id: [0; 16],
            state: VerifierState::AwaitClaim,
            claimed: None,
            w2: None,
            key: None,
        }
    }

    /// `(w2, Key_AB)` once the key share has been sent.
    pub fn key(&self) -> Option<(S::Scalar, S::G1)> {
        Some((self.w2?, self.key?))
    }
}

impl<S: PairingSuite> Party for VerifierParty<'_, S> {
    fn handle(&mut self, msg: &Message) -> Result<Option<Message>, AbortCode> {
        let suite = self.registry.suite();
        match std::mem::replace(&mut self.state, VerifierState::Done) {
            VerifierState::AwaitClaim => {
                if msg.step != Step::MutualClaim {
                    return Err(AbortCode::OutOfOrder);
                }
                self.session_id = msg.session_id;
                let avatar = Avatar::from_bytes(suite, &msg.body)?;
                let claim = check_claim(self.registry, &avatar)?;
                self.claimed = Some(avatar);
                let challenge = self.agent.nonces.issue(&mut self.rng);
                let mut e = Encoder::new();
                e.fixed(&self.agent.mit.sn.0).fixed(&challenge);
                self.state = VerifierState::AwaitResponse { claim, challenge };
                Ok(Some(Message::new(self.session_id, Step::MutualChallenge, e.finish())))
            }
            VerifierState::AwaitResponse { claim, challenge } => {
                expect(msg, &self.session_id, Step::MutualResponse)?;
                let sn_b = self.agent.mit.sn;
                let response = check_response(suite, &claim, &self.session_id, &sn_b, &challenge, &msg.body)?;
                self.agent.nonces.consume(&challenge)?;
                let w2 = suite.random_nonzero_scalar(&mut self.rng);
                let w2_elem = suite.g1_pow(&suite.g1_generator(), &w2);
                let w2_bytes = suite.g1_to_bytes(&w2_elem);
                let peer = suite.g1_pow(claim.driver.g1(), &w2);
                let own = suite.g1_pow(&response.w1, self.agent.keys.secret());
                self.key = Some(suite.g1_mul(&peer, &own));
                self.w2 = Some(w2);
                let mut e = Encoder::new();
                e.fixed(&w2_bytes)
                    .fixed(&confirmation(&self.session_id, &response.binding, &w2_bytes));
                Ok(Some(Message::new(self.session_id, Step::MutualKeyShare, e.finish())))
            }
            VerifierState::Done => Err(AbortCode::OutOfOrder),
        }
    }
}

/// Runs mutual authentication of `prover` to the verifying avatar
/// `verifier`.
pub fn mutual_auth<S: PairingSuite, R: RngCore + ?Sized>(
    prover: Prover<'_, S>,
    verifier: &AgentCtx<S>,
    registry: &Registry<S>,
    transport: &TransportKind,
    rng: &mut R,
) -> Result<MutualOutcome<S>, ProtocolError> {
    let mut seeds = [[0u8; 32]; 2];
    for s in &mut seeds {
        rng.fill_bytes(s);
    }
    let mut a = ProverParty::new(registry, prover, seeds[0]);
    let mut b = VerifierParty::new(registry, verifier, seeds[1]);
    let transcript = run_over(transport, &mut a, &mut b)?;
    if let Some(code) = abort_code(&transcript) {
        return Err(ProtocolError::Aborted(code));
    }
    let (w1, prover_key) = a.key().ok_or(ProtocolError::Incomplete)?;
    let (w2, verifier_key) = b.key().ok_or(ProtocolError::Incomplete)?;
    let avatar = b.claimed.take().ok_or(ProtocolError::Incomplete)?;
    let image_digest = render_digest(&avatar.vid.as_ref().ok_or(ProtocolError::Incomplete)?.message);
    Ok(MutualOutcome {
        prover_key,
        verifier_key,
        w1,
        w2,
        evidence: MutualEvidence {
            avatar,
            transcript,
            image_digest,
        },
    })
}

