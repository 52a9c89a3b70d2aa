//! False-accusation harnesses: a reporter fabricates evidence against an
//! honest avatar and submits it for tracing.
//!
//! Case 1: the reporter alone replaces the virtual identity with a
//! fabricated image `M*` and a random check value `R*`.
//! Case 2: the reporter colludes with the avatar's proxy, which can build
//! valid collisions for any message under `h`, and supplies a random
//! original signature `sigma*` in place of the owner's.

use rand::RngCore;
use serde_json::{json, Value};

use crate::bilinear::PairingSuite;
use crate::cps::{self, KeyPair};
use crate::encoding::Decoder;
use crate::identity::{render_digest, Avatar, Pid, Vid};
use crate::protocols::{MutualEvidence, Step};
use crate::registry::{AuthorityToken, Registry};

use crate::protocols::trace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccusationReport {
    pub attempts: usize,
    pub rejected: usize,
}

impl AccusationReport {
    /// No attempts were made; the rate is then reported as 1.0.
    pub fn vacuous(&self) -> bool {
        self.attempts == 0
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.vacuous() {
            1.0
        } else {
            self.rejected as f64 / self.attempts as f64
        }
    }

    pub fn to_json(&self, case: &str) -> Value {
        json!({
            "game": case,
            "attempts": self.attempts,
            "rejected": self.rejected,
            "rejection_rate": self.rejection_rate(),
            "vacuous": self.vacuous(),
        })
    }
}

/// Replaces the claimed avatar, and the presented PID when given, in a
/// copy of `evidence`, keeping the rest of the transcript.
fn rewrite<S: PairingSuite>(suite: &S, evidence: &MutualEvidence<S>, avatar: Avatar<S>, pid: Option<&Pid<S>>) -> MutualEvidence<S> {
    let mut forged = evidence.clone();
    for m in &mut forged.transcript.messages {
        match m.step {
            Step::MutualClaim => m.body = avatar.to_bytes(suite),
            Step::MutualResponse => {
                if let Some(pid) = pid {
                    let mut d = Decoder::new(&m.body);
                    if Pid::<S>::decode(suite, &mut d).is_ok() {
                        let rest = m.body[m.body.len() - d.remaining()..].to_vec();
                        let mut body = pid.to_bytes(suite);
                        body.extend(rest);
                        m.body = body;
                    }
                }
            }
            _ => {}
        }
    }
    if let Some(vid) = &avatar.vid {
        forged.image_digest = render_digest(&vid.message);
    }
    forged.avatar = avatar;
    forged
}

fn fabricated_image<R: RngCore + ?Sized>(rng: &mut R) -> Vec<u8> {
    let mut m = vec![0u8; 64];
    rng.fill_bytes(&mut m);
    m
}

fn warn_if_vacuous(report: &AccusationReport, case: &str) {
    if report.vacuous() {
        log::warn!("{case}: zero attempts; rejection rate is vacuous");
    }
}

/// Case 1 over `attempts` random `(M*, R*)`; returns how many traces were
/// rejected.
pub fn false_accusation_case1<S: PairingSuite, R: RngCore + ?Sized>(
    evidence: &MutualEvidence<S>,
    registry: &Registry<S>,
    credential: Option<&AuthorityToken>,
    attempts: usize,
    rng: &mut R,
) -> AccusationReport {
    let suite = registry.suite();
    let mut rejected = 0;
    for _ in 0..attempts {
        let mut avatar = evidence.avatar.clone();
        avatar.vid = Some(Vid {
            message: fabricated_image(rng),
            check: suite.random_g1(rng),
        });
        let forged = rewrite(suite, evidence, avatar, None);
        if trace(&forged, registry, credential).is_err() {
            rejected += 1;
        }
    }
    let report = AccusationReport { attempts, rejected };
    warn_if_vacuous(&report, "case 1");
    report
}

/// Case 2 against AI-driven evidence, colluding with the proxy `proxy`:
/// random `sigma*`, proxy-built VID over a fabricated image and proxy-built
/// PID over the presented iris message.
pub fn false_accusation_case2<S: PairingSuite, R: RngCore + ?Sized>(
    evidence: &MutualEvidence<S>,
    registry: &Registry<S>,
    credential: Option<&AuthorityToken>,
    proxy: &KeyPair<S>,
    attempts: usize,
    rng: &mut R,
) -> AccusationReport {
    let suite = registry.suite();
    let mut rejected = 0;
    for _ in 0..attempts {
        let mut avatar = evidence.avatar.clone();
        avatar.sigma = suite.random_g1(rng);
        let message = fabricated_image(rng);
        let check = cps::psig(suite, proxy, &avatar.h, &message);
        avatar.vid = Some(Vid { message, check });
        let pid = avatar.pid.as_ref().map(|p| Pid {
            message: p.message.clone(),
            check: cps::psig(suite, proxy, &avatar.h, &p.message),
        });
        avatar.pid = pid.clone();
        let forged = rewrite(suite, evidence, avatar, pid.as_ref());
        if trace(&forged, registry, credential).is_err() {
            rejected += 1;
        }
    }
    let report = AccusationReport { attempts, rejected };
    warn_if_vacuous(&report, "case 2");
    report
}
