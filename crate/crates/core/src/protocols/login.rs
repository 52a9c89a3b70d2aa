//! Login: a user takes control of an empty or human-driven avatar.
//!
//! ```text
//! U -> S  Claim     SN_A, Aid_A, sigma_A, h_A, VID_A      (DGen with pk_A twice)
//! S -> U  Challenge C_a                                   (after MIT and VID checks)
//! U -> S  Response  PID_A = (iris || C_a, PSig(sk_A, h_A, iris || C_a))
//! S -> U  Accept    session token, Avatar_A               (SN_P = SN_A)
//! ```

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::message::{Message, ProtocolTranscript, Step};
use super::server::{Server, SessionToken};
use super::transport::{run_over, TransportKind};
use super::{
    expect, fetch_mit, get_g1, put_g1, random_session_id, verify_identity, AbortCode, Party, ProtocolError,
    UserCtx,
};
use crate::bilinear::PairingSuite;
use crate::biometric;
use crate::cps;
use crate::encoding::{Decoder, Encoder};
use crate::identity::{physical_message, split_physical_message, Avatar, Mit, Pid, SerialNumber, Vid, CHALLENGE_LEN};

/// What a logged-in user holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HumanSession<S: PairingSuite> {
    /// The record as the server stored it.
    pub avatar: Avatar<S>,
    /// The physical identity presented at login.
    pub pid: Pid<S>,
    pub token: SessionToken,
}

impl<S: PairingSuite> HumanSession<S> {
    /// The avatar with its physical identity attached, as shown to peers.
    pub fn presented_avatar(&self) -> Avatar<S> {
        Avatar {
            pid: Some(self.pid.clone()),
            ..self.avatar.clone()
        }
    }
}

#[derive(Debug)]
pub struct LoginOutcome<S: PairingSuite> {
    pub session: HumanSession<S>,
    pub transcript: ProtocolTranscript,
}

/// Claim body: `SN || Aid || sigma || h || VID`.
pub(crate) struct Claim<S: PairingSuite> {
    pub sn: SerialNumber,
    pub aid: Vec<u8>,
    pub sigma: S::G1,
    pub h: S::G1,
    pub vid: Vid<S>,
}

impl<S: PairingSuite> Claim<S> {
    fn to_bytes(&self, suite: &S) -> Vec<u8> {
        let mut e = Encoder::new();
        e.fixed(&self.sn.0).bytes(&self.aid);
        put_g1(&mut e, suite, &self.sigma);
        put_g1(&mut e, suite, &self.h);
        self.vid.encode(suite, &mut e);
        e.finish()
    }

    fn from_bytes(suite: &S, bytes: &[u8]) -> Result<Self, AbortCode> {
        let mut d = Decoder::new(bytes);
        let claim = Claim {
            sn: SerialNumber(d.array()?),
            aid: d.bytes()?.to_vec(),
            sigma: get_g1(&mut d, suite)?,
            h: get_g1(&mut d, suite)?,
            vid: Vid::decode(suite, &mut d)?,
        };
        d.finish()?;
        Ok(claim)
    }
}

enum UserState<S: PairingSuite> {
    Idle,
    AwaitChallenge { h: S::G1 },
    AwaitAccept { pid: Pid<S>, h: S::G1 },
    Done,
}

/// The user's side of login.
pub struct UserLogin<'a, S: PairingSuite> {
    suite: S,
    user: &'a UserCtx<S>,
    aid: Vec<u8>,
    rng: ChaCha20Rng,
    session_id: [u8; 16],
    state: UserState<S>,
    outcome: Option<HumanSession<S>>,
}

impl<'a, S: PairingSuite> UserLogin<'a, S> {
    pub fn new(suite: &S, user: &'a UserCtx<S>, aid: &[u8], seed: [u8; 32]) -> Self {
        UserLogin {
            suite: suite.clone(),
            user,
            aid: aid.to_vec(),
            rng: ChaCha20Rng::from_seed(seed),
            session_id: [0; 16],
            state: UserState::Idle,
            outcome: None,
        }
    }

    pub fn session_id(&self) -> [u8; 16] {
        self.session_id
    }

    pub fn into_outcome(self) -> Option<HumanSession<S>> {
        self.outcome
    }
}

impl<S: PairingSuite> Party for UserLogin<'_, S> {
    fn start(&mut self) -> Result<Message, AbortCode> {
        let suite = &self.suite;
        self.session_id = random_session_id(&mut self.rng);
        let pk = self.user.keys.public();
        let t = cps::dgen(suite, &self.user.keys, &self.user.description, pk, &mut self.rng);
        let claim = Claim {
            sn: self.user.mit.sn,
            aid: self.aid.clone(),
            sigma: t.sigma.expect("dgen endorses"),
            h: t.h,
            vid: Vid {
                message: t.message,
                check: t.check,
            },
        };
        let body = claim.to_bytes(suite);
        self.state = UserState::AwaitChallenge { h: claim.h };
        Ok(Message::new(self.session_id, Step::LoginClaim, body))
    }

    fn handle(&mut self, msg: &Message) -> Result<Option<Message>, AbortCode> {
        let suite = &self.suite;
        match std::mem::replace(&mut self.state, UserState::Done) {
            UserState::AwaitChallenge { h } => {
                expect(msg, &self.session_id, Step::LoginChallenge)?;
                let challenge: [u8; CHALLENGE_LEN] = Decoder::new(&msg.body).array()?;
                let feature = self.user.sensor.capture(&mut self.rng);
                let message = physical_message(&feature, &challenge);
                let check = cps::psig(suite, &self.user.keys, &h, &message);
                let pid = Pid { message, check };
                let body = pid.to_bytes(suite);
                self.state = UserState::AwaitAccept { pid, h };
                Ok(Some(Message::new(self.session_id, Step::LoginResponse, body)))
            }
            UserState::AwaitAccept { pid, h } => {
                expect(msg, &self.session_id, Step::LoginAccept)?;
                let mut d = Decoder::new(&msg.body);
                let token: SessionToken = d.array()?;
                let avatar = Avatar::decode(suite, &mut d)?;
                d.finish()?;
                if avatar.h != h || avatar.sn_u != self.user.mit.sn || avatar.aid != self.aid {
                    return Err(AbortCode::Malformed);
                }
                self.outcome = Some(HumanSession { avatar, pid, token });
                Ok(None)
            }
            UserState::Idle | UserState::Done => Err(AbortCode::OutOfOrder),
        }
    }
}

enum ServerState<S: PairingSuite> {
    AwaitClaim,
    AwaitResponse {
        claim: Claim<S>,
        mit: Mit<S>,
        challenge: [u8; CHALLENGE_LEN],
    },
    Done,
}

/// The server's side of login.
pub struct ServerLogin<'a, S: PairingSuite> {
    server: &'a Server<S>,
    session_id: [u8; 16],
    state: ServerState<S>,
}

impl<'a, S: PairingSuite> ServerLogin<'a, S> {
    pub fn new(server: &'a Server<S>) -> Self {
        ServerLogin {
            server,
            session_id: [0; 16],
            state: ServerState::AwaitClaim,
        }
    }
}

impl<S: PairingSuite> Party for ServerLogin<'_, S> {
    fn handle(&mut self, msg: &Message) -> Result<Option<Message>, AbortCode> {
        let suite = self.server.suite();
        match std::mem::replace(&mut self.state, ServerState::Done) {
            ServerState::AwaitClaim => {
                if msg.step != Step::LoginClaim {
                    return Err(AbortCode::OutOfOrder);
                }
                self.session_id = msg.session_id;
                let claim = Claim::from_bytes(suite, &msg.body)?;
                let mit = fetch_mit(self.server.registry(), &claim.sn)?;
                self.server.check_login(&claim.sn, &claim.aid)?;
                let pk = &mit.pk;
                if !verify_identity(suite, pk, &claim.sigma, &claim.h, &claim.vid.message, &claim.vid.check, pk) {
                    return Err(AbortCode::VidInvalid);
                }
                let challenge = self.server.fill(|rng| self.server.nonces.issue(rng));
                self.state = ServerState::AwaitResponse { claim, mit, challenge };
                Ok(Some(Message::new(self.session_id, Step::LoginChallenge, challenge.to_vec())))
            }
            ServerState::AwaitResponse { claim, mit, challenge } => {
                expect(msg, &self.session_id, Step::LoginResponse)?;
                let pid = Pid::from_bytes(suite, &msg.body)?;
                let (feature, echoed) = split_physical_message(&pid.message).ok_or(AbortCode::PidInvalid)?;
                if echoed != challenge {
                    return Err(AbortCode::ChallengeMismatch);
                }
                self.server.nonces.consume(&challenge)?;
                if !biometric::is_match(&feature, &mit.template).unwrap_or(false) {
                    return Err(AbortCode::IrisMismatch);
                }
                let pk = &mit.pk;
                if !verify_identity(suite, pk, &claim.sigma, &claim.h, &pid.message, &pid.check, pk) {
                    return Err(AbortCode::PidInvalid);
                }
                let avatar = Avatar {
                    sn_u: claim.sn,
                    aid: claim.aid,
                    sn_p: claim.sn,
                    sigma: claim.sigma,
                    h: claim.h,
                    vid: Some(claim.vid),
                    pid: None,
                };
                let token = self.server.install_login(avatar.clone())?;
                let mut e = Encoder::new();
                e.fixed(&token);
                avatar.encode(suite, &mut e);
                Ok(Some(Message::new(self.session_id, Step::LoginAccept, e.finish())))
            }
            ServerState::Done => Err(AbortCode::OutOfOrder),
        }
    }
}

/// Runs login for `user` on avatar `aid`.
pub fn login<S: PairingSuite, R: RngCore + ?Sized>(
    user: &UserCtx<S>,
    aid: &[u8],
    server: &Server<S>,
    transport: &TransportKind,
    rng: &mut R,
) -> Result<LoginOutcome<S>, ProtocolError> {
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    let mut client = UserLogin::new(server.suite(), user, aid, seed);
    let mut responder = ServerLogin::new(server);
    let transcript = run_over(transport, &mut client, &mut responder)?;
    if let Some(code) = super::transport::abort_code(&transcript) {
        return Err(ProtocolError::Aborted(code));
    }
    let session = client.into_outcome().ok_or(ProtocolError::Incomplete)?;
    Ok(LoginOutcome { session, transcript })
}
