//! Delegation: a logged-in user hands an avatar to an AI proxy.
//!
//! ```text
//! U -> P  Claim     Avatar_A (with the login PID)
//! P -> U  Challenge SN_P, C_a
//! U -> P  Response  sigma'_A, h_P, PID_P    (DGen(sk_A, iris || C_a, pk_P))
//!                   P sets VID_P = (M_A, PSig(sk_P, h_P, M_A))
//! P -> S  Submit    SN_A, Aid_A, SN_P, sigma'_A, h_P, VID_P, PID_P
//! S -> P  Transfer  Avatar'_A; the user's session token is revoked
//! ```

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::login::HumanSession;
use super::message::{Message, ProtocolTranscript, Step};
use super::server::Server;
use super::transport::{abort_code, run_over, TransportKind};
use super::{
    expect, fetch_mit, get_g1, put_g1, random_session_id, verify_identity, AbortCode, AgentCtx, Party,
    ProtocolError, UserCtx,
};
use crate::bilinear::PairingSuite;
use crate::biometric;
use crate::cps;
use crate::encoding::{Decoder, Encoder};
use crate::identity::{
    physical_message, split_physical_message, Avatar, DriverType, Mit, Pid, SerialNumber, Vid, CHALLENGE_LEN,
};
use crate::registry::Registry;

/// What the proxy holds after a successful transfer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProxySession<S: PairingSuite> {
    /// `(SN_A, Aid_A, SN_P, sigma'_A, h_P, VID_P, PID_P)`.
    pub avatar: Avatar<S>,
}

#[derive(Debug)]
pub struct DelegateOutcome<S: PairingSuite> {
    pub session: ProxySession<S>,
    /// User and proxy.
    pub delegation: ProtocolTranscript,
    /// Proxy and server.
    pub transfer: ProtocolTranscript,
}

/// Checks `PID = (feature || C, R')` for the endorsement `(sigma, h)`:
/// the feature must match `template` and the tuple must pass `PVer`.
pub(crate) fn check_pid<S: PairingSuite>(
    suite: &S,
    owner: &Mit<S>,
    sigma: &S::G1,
    h: &S::G1,
    pid: &Pid<S>,
    driver: &cps::PublicKey<S>,
) -> Result<[u8; CHALLENGE_LEN], AbortCode> {
    let (feature, challenge) = split_physical_message(&pid.message).ok_or(AbortCode::PidInvalid)?;
    if !biometric::is_match(&feature, &owner.template).unwrap_or(false) {
        return Err(AbortCode::IrisMismatch);
    }
    if !verify_identity(suite, &owner.pk, sigma, h, &pid.message, &pid.check, driver) {
        return Err(AbortCode::PidInvalid);
    }
    Ok(challenge)
}

enum UserState {
    Idle,
    AwaitChallenge,
    Done,
}

/// The user's side of the first leg.
pub struct UserDelegate<'a, S: PairingSuite> {
    registry: &'a Registry<S>,
    user: &'a UserCtx<S>,
    session: &'a HumanSession<S>,
    rng: ChaCha20Rng,
    session_id: [u8; 16],
    state: UserState,
}

impl<'a, S: PairingSuite> UserDelegate<'a, S> {
    pub fn new(registry: &'a Registry<S>, user: &'a UserCtx<S>, session: &'a HumanSession<S>, seed: [u8; 32]) -> Self {
        UserDelegate {
            registry,
            user,
            session,
            rng: ChaCha20Rng::from_seed(seed),
            session_id: [0; 16],
            state: UserState::Idle,
        }
    }
}

impl<S: PairingSuite> Party for UserDelegate<'_, S> {
    fn start(&mut self) -> Result<Message, AbortCode> {
        let suite = self.registry.suite();
        self.session_id = random_session_id(&mut self.rng);
        self.state = UserState::AwaitChallenge;
        let body = self.session.presented_avatar().to_bytes(suite);
        Ok(Message::new(self.session_id, Step::DelegateClaim, body))
    }

    fn handle(&mut self, msg: &Message) -> Result<Option<Message>, AbortCode> {
        let suite = self.registry.suite();
        match std::mem::replace(&mut self.state, UserState::Idle) {
            UserState::AwaitChallenge => {
                expect(msg, &self.session_id, Step::DelegateChallenge)?;
                let mut d = Decoder::new(&msg.body);
                let sn_p = SerialNumber(d.array()?);
                let challenge: [u8; CHALLENGE_LEN] = d.array()?;
                d.finish()?;
                let proxy = fetch_mit(self.registry, &sn_p)?;
                let feature = self.user.sensor.capture(&mut self.rng);
                let message = physical_message(&feature, &challenge);
                let t = cps::dgen(suite, &self.user.keys, &message, &proxy.pk, &mut self.rng);
                let mut e = Encoder::new();
                put_g1(&mut e, suite, &t.sigma.expect("dgen endorses"));
                put_g1(&mut e, suite, &t.h);
                Pid::<S> {
                    message: t.message,
                    check: t.check,
                }
                .encode(suite, &mut e);
                self.state = UserState::Done;
                Ok(Some(Message::new(self.session_id, Step::DelegateResponse, e.finish())))
            }
            UserState::Idle | UserState::Done => Err(AbortCode::OutOfOrder),
        }
    }
}

enum ProxyState<S: PairingSuite> {
    AwaitClaim,
    AwaitResponse {
        avatar: Avatar<S>,
        owner: Mit<S>,
        challenge: [u8; CHALLENGE_LEN],
    },
    Done,
}

/// The proxy's side of the first leg. On success it holds the updated
/// avatar, ready to submit to the server.
pub struct ProxyDelegate<'a, S: PairingSuite> {
    registry: &'a Registry<S>,
    agent: &'a AgentCtx<S>,
    rng: ChaCha20Rng,
    session_id: [u8; 16],
    state: ProxyState<S>,
    prepared: Option<Avatar<S>>,
}

impl<'a, S: PairingSuite> ProxyDelegate<'a, S> {
    pub fn new(registry: &'a Registry<S>, agent: &'a AgentCtx<S>, seed: [u8; 32]) -> Self {
        ProxyDelegate {
            registry,
            agent,
            rng: ChaCha20Rng::from_seed(seed),
            session_id: [0; 16],
            state: ProxyState::AwaitClaim,
            prepared: None,
        }
    }

    pub fn into_prepared(self) -> Option<Avatar<S>> {
        self.prepared
    }
}

impl<S: PairingSuite> Party for ProxyDelegate<'_, S> {
    fn handle(&mut self, msg: &Message) -> Result<Option<Message>, AbortCode> {
        let suite = self.registry.suite();
        match std::mem::replace(&mut self.state, ProxyState::Done) {
            ProxyState::AwaitClaim => {
                if msg.step != Step::DelegateClaim {
                    return Err(AbortCode::OutOfOrder);
                }
                self.session_id = msg.session_id;
                let avatar = Avatar::from_bytes(suite, &msg.body)?;
                if avatar.driver_type() != DriverType::Human {
                    return Err(AbortCode::NotHumanDriven);
                }
                let owner = fetch_mit(self.registry, &avatar.sn_u)?;
                let vid = avatar.vid.as_ref().ok_or(AbortCode::VidInvalid)?;
                if !verify_identity(suite, &owner.pk, &avatar.sigma, &avatar.h, &vid.message, &vid.check, &owner.pk) {
                    return Err(AbortCode::VidInvalid);
                }
                let challenge = self.agent.nonces.issue(&mut self.rng);
                let mut e = Encoder::new();
                e.fixed(&self.agent.mit.sn.0).fixed(&challenge);
                self.state = ProxyState::AwaitResponse {
                    avatar,
                    owner,
                    challenge,
                };
                Ok(Some(Message::new(self.session_id, Step::DelegateChallenge, e.finish())))
            }
            ProxyState::AwaitResponse {
                avatar,
                owner,
                challenge,
            } => {
                expect(msg, &self.session_id, Step::DelegateResponse)?;
                let mut d = Decoder::new(&msg.body);
                let sigma = get_g1(&mut d, suite)?;
                let h_p = get_g1(&mut d, suite)?;
                let pid = Pid::decode(suite, &mut d)?;
                d.finish()?;
                let (_, echoed) = split_physical_message(&pid.message).ok_or(AbortCode::PidInvalid)?;
                if echoed != challenge {
                    return Err(AbortCode::ChallengeMismatch);
                }
                self.agent.nonces.consume(&challenge)?;
                check_pid(suite, &owner, &sigma, &h_p, &pid, self.agent.keys.public())?;
                let description = avatar.vid.expect("checked at claim").message;
                let check = cps::psig(suite, &self.agent.keys, &h_p, &description);
                self.prepared = Some(Avatar {
                    sn_u: avatar.sn_u,
                    aid: avatar.aid,
                    sn_p: self.agent.mit.sn,
                    sigma,
                    h: h_p,
                    vid: Some(Vid {
                        message: description,
                        check,
                    }),
                    pid: Some(pid),
                });
                Ok(None)
            }
            ProxyState::Done => Err(AbortCode::OutOfOrder),
        }
    }
}

/// The proxy submitting a prepared avatar to the server.
pub struct ProxySubmit<S: PairingSuite> {
    suite: S,
    prepared: Avatar<S>,
    rng: ChaCha20Rng,
    session_id: [u8; 16],
    outcome: Option<ProxySession<S>>,
}

impl<S: PairingSuite> ProxySubmit<S> {
    pub fn new(suite: &S, prepared: Avatar<S>, seed: [u8; 32]) -> Self {
        ProxySubmit {
            suite: suite.clone(),
            prepared,
            rng: ChaCha20Rng::from_seed(seed),
            session_id: [0; 16],
            outcome: None,
        }
    }

    pub fn into_outcome(self) -> Option<ProxySession<S>> {
        self.outcome
    }
}

impl<S: PairingSuite> Party for ProxySubmit<S> {
    fn start(&mut self) -> Result<Message, AbortCode> {
        self.session_id = random_session_id(&mut self.rng);
        Ok(Message::new(
            self.session_id,
            Step::DelegateSubmit,
            self.prepared.to_bytes(&self.suite),
        ))
    }

    fn handle(&mut self, msg: &Message) -> Result<Option<Message>, AbortCode> {
        if self.outcome.is_some() {
            return Err(AbortCode::OutOfOrder);
        }
        expect(msg, &self.session_id, Step::DelegateTransfer)?;
        let avatar = Avatar::from_bytes(&self.suite, &msg.body)?;
        if avatar != self.prepared {
            return Err(AbortCode::Malformed);
        }
        self.outcome = Some(ProxySession { avatar });
        Ok(None)
    }
}

/// The server's side of the transfer leg.
pub struct ServerTransfer<'a, S: PairingSuite> {
    server: &'a Server<S>,
    done: bool,
}

impl<'a, S: PairingSuite> ServerTransfer<'a, S> {
    pub fn new(server: &'a Server<S>) -> Self {
        ServerTransfer { server, done: false }
    }
}

impl<S: PairingSuite> Party for ServerTransfer<'_, S> {
    fn handle(&mut self, msg: &Message) -> Result<Option<Message>, AbortCode> {
        if self.done || msg.step != Step::DelegateSubmit {
            return Err(AbortCode::OutOfOrder);
        }
        self.done = true;
        let suite = self.server.suite();
        let avatar = Avatar::from_bytes(suite, &msg.body)?;
        if avatar.driver_type() != DriverType::AiProxy {
            return Err(AbortCode::TransferRejected);
        }
        let owner = fetch_mit(self.server.registry(), &avatar.sn_u)?;
        let proxy = fetch_mit(self.server.registry(), &avatar.sn_p)?;
        let (vid, pid) = match (&avatar.vid, &avatar.pid) {
            (Some(v), Some(p)) => (v, p),
            _ => return Err(AbortCode::TransferRejected),
        };
        if !verify_identity(suite, &owner.pk, &avatar.sigma, &avatar.h, &vid.message, &vid.check, &proxy.pk) {
            return Err(AbortCode::TransferRejected);
        }
        check_pid(suite, &owner, &avatar.sigma, &avatar.h, pid, &proxy.pk).map_err(|_| AbortCode::TransferRejected)?;
        self.server.transfer(avatar.clone())?;
        Ok(Some(Message::new(msg.session_id, Step::DelegateTransfer, avatar.to_bytes(suite))))
    }
}

/// Runs both legs: user to proxy, then proxy to server.
pub fn delegate<S: PairingSuite, R: RngCore + ?Sized>(
    user: &UserCtx<S>,
    session: &HumanSession<S>,
    proxy: &AgentCtx<S>,
    server: &Server<S>,
    transport: &TransportKind,
    rng: &mut R,
) -> Result<DelegateOutcome<S>, ProtocolError> {
    let mut seeds = [[0u8; 32]; 3];
    for s in &mut seeds {
        rng.fill_bytes(s);
    }
    let registry = server.registry();
    let mut u = UserDelegate::new(registry, user, session, seeds[0]);
    let mut p = ProxyDelegate::new(registry, proxy, seeds[1]);
    let delegation = run_over(transport, &mut u, &mut p)?;
    if let Some(code) = abort_code(&delegation) {
        return Err(ProtocolError::Aborted(code));
    }
    let prepared = p.into_prepared().ok_or(ProtocolError::Incomplete)?;

    let mut submit = ProxySubmit::new(server.suite(), prepared, seeds[2]);
    let mut s = ServerTransfer::new(server);
    let transfer = run_over(transport, &mut submit, &mut s)?;
    if let Some(code) = abort_code(&transfer) {
        return Err(ProtocolError::Aborted(code));
    }
    let session = submit.into_outcome().ok_or(ProtocolError::Incomplete)?;
    Ok(DelegateOutcome {
        session,
        delegation,
        transfer,
    })
}
