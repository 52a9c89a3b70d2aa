//! Tracing an avatar back to its original manipulator from retained
//! mutual-authentication evidence.

use std::time::{Duration, Instant};

use thiserror::Error;

use super::message::{Message, ProtocolTranscript, Step};
use super::mutual::{check_claim, check_key_share, check_response, decode_challenge, CheckedClaim, MutualEvidence};
use super::AbortCode;
use crate::bilinear::PairingSuite;
use crate::identity::{render_digest, Avatar, DriverType, UserId};
use crate::registry::{AuthorityToken, Registry, RegistryError};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("evidence transcript did not complete")]
    Incomplete,
    #[error("evidence transcript is malformed")]
    Malformed,
    #[error("evidence avatar differs from the one claimed in the transcript")]
    EvidenceMismatch,
    #[error("interaction image does not match the virtual identity")]
    ImageMismatch,
    #[error("accusation rejected: {0:?}")]
    Rejected(AbortCode),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceReport {
    pub user_id: UserId,
    pub driver_type: DriverType,
    /// Tokens fetched from the registry during this trace.
    pub mits_fetched: u64,
    pub elapsed: Duration,
}

const MUTUAL_STEPS: [Step; 4] = [
    Step::MutualClaim,
    Step::MutualChallenge,
    Step::MutualResponse,
    Step::MutualKeyShare,
];

/// Re-verifies `evidence` and resolves the avatar's original manipulator.
///
/// The registry's fetch counter is read before and after, so concurrent
/// fetches on the same registry inflate `mits_fetched`.
pub fn trace<S: PairingSuite>(
    evidence: &MutualEvidence<S>,
    registry: &Registry<S>,
    credential: Option<&AuthorityToken>,
) -> Result<TraceReport, TraceError> {
    let started = Instant::now();
    let fetched_before = registry.fetch_count();
    let suite = registry.suite();
    let t = &evidence.transcript;
    if !t.is_completed() {
        return Err(TraceError::Incomplete);
    }
    let steps: Vec<Step> = t.messages.iter().map(|m| m.step).collect();
    if steps != MUTUAL_STEPS {
        return Err(TraceError::Malformed);
    }
    let sid = t.messages[0].session_id;
    if t.messages.iter().any(|m| m.session_id != sid) {
        return Err(TraceError::Malformed);
    }
    let claimed = Avatar::from_bytes(suite, &t.messages[0].body).map_err(|_| TraceError::Malformed)?;
    if claimed != evidence.avatar {
        return Err(TraceError::EvidenceMismatch);
    }
    let vid = claimed.vid.as_ref().ok_or(TraceError::Rejected(AbortCode::VidInvalid))?;
    if render_digest(&vid.message) != evidence.image_digest {
        return Err(TraceError::ImageMismatch);
    }
    let claim = check_claim(registry, &claimed).map_err(TraceError::Rejected)?;
    let (sn_b, challenge) = decode_challenge(&t.messages[1].body).map_err(TraceError::Rejected)?;
    let response =
        check_response(suite, &claim, &sid, &sn_b, &challenge, &t.messages[2].body).map_err(TraceError::Rejected)?;
    check_key_share(suite, &sid, &response.binding, &t.messages[3].body).map_err(TraceError::Rejected)?;
    let mits_fetched = registry.fetch_count() - fetched_before;
    let user_id = registry.resolve_sn(&claimed.sn_u, credential)?;
    Ok(TraceReport {
        user_id,
        driver_type: claimed.driver_type(),
        mits_fetched,
        elapsed: started.elapsed(),
    })
}

/// Replays the verifier's checks over a stored mutual-authentication
/// transcript: one `(step, accepted)` pair per message. An abort message
/// is recorded as rejected.
pub fn audit_mutual_transcript<S: PairingSuite>(registry: &Registry<S>, transcript: &ProtocolTranscript) -> Vec<(Step, bool)> {
    let suite = registry.suite();
    let mut claim: Option<CheckedClaim<S>> = None;
    let mut challenge = None;
    let mut binding = None;
    let mut out = Vec::with_capacity(transcript.messages.len());
    for m in &transcript.messages {
        let ok = match m.step {
            Step::MutualClaim => {
                claim = Avatar::from_bytes(suite, &m.body)
                    .ok()
                    .and_then(|a| check_claim(registry, &a).ok());
                claim.is_some()
            }
            Step::MutualChallenge => {
                challenge = decode_challenge(&m.body).ok();
                claim.is_some() && challenge.is_some()
            }
            Step::MutualResponse => {
                binding = response_binding(suite, claim.as_ref(), challenge, m);
                binding.is_some()
            }
            Step::MutualKeyShare => binding.is_some_and(|b| check_key_share(suite, &m.session_id, &b, &m.body).is_ok()),
            _ => false,
        };
        out.push((m.step, ok));
    }
    out
}

fn response_binding<S: PairingSuite>(
    suite: &S,
    claim: Option<&CheckedClaim<S>>,
    challenge: Option<(crate::identity::SerialNumber, [u8; 32])>,
    m: &Message,
) -> Option<[u8; 32]> {
    let (sn_b, c) = challenge?;
    check_response(suite, claim?, &m.session_id, &sn_b, &c, &m.body)
        .ok()
        .map(|r| r.binding)
}
