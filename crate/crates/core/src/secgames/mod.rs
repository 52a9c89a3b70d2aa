//! Executable simulators for the two unforgeability games and the two
//! false-accusation cases.
//!
//! The simulators program the hash oracle around a hard-problem instance
//! and answer signing queries without the secret key. They are checked for
//! internal consistency (every answer verifies) and for extraction: an
//! adversary that forges at the guessed index hands the simulator the
//! instance solution. Adversaries are pluggable; [`os_euf::CheatingOs`] and
//! [`ps_euf::CheatingPs`] are test doubles given the instance exponents.

pub mod accusation;
pub mod os_euf;
pub mod ps_euf;

pub use accusation::{false_accusation_case1, false_accusation_case2, AccusationReport};
pub use os_euf::{run_os_euf_simulation, CheatingOs, HonestOs, OsAdversary, OsForgery, OsOracles, ReplayOs};
pub use ps_euf::{run_ps_euf_simulation, CheatingPs, HonestPs, PsAdversary, PsForgery, PsOracles, ReplayPs, INITIAL_MESSAGE};

use rand::RngCore;
use serde_json::{json, Value};
use thiserror::Error;

use crate::bilinear::PairingSuite;
use crate::cps::PublicKey;

/// `(g, g^a, g^b)`, with the second-group halves needed to form keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance<S: PairingSuite> {
    pub g_a: S::G1,
    pub g_a2: S::G2,
    pub g_b: S::G1,
    pub g_b2: S::G2,
}

impl<S: PairingSuite> Copy for Instance<S> {}

impl<S: PairingSuite> Instance<S> {
    pub fn from_exponents(suite: &S, a: &S::Scalar, b: &S::Scalar) -> Self {
        let (g1, g2) = (suite.g1_generator(), suite.g2_generator());
        Instance {
            g_a: suite.g1_pow(&g1, a),
            g_a2: suite.g2_pow(&g2, a),
            g_b: suite.g1_pow(&g1, b),
            g_b2: suite.g2_pow(&g2, b),
        }
    }

    pub fn random<R: RngCore + ?Sized>(suite: &S, rng: &mut R) -> (Self, S::Scalar, S::Scalar) {
        let a = suite.random_nonzero_scalar(rng);
        let b = suite.random_nonzero_scalar(rng);
        (Self::from_exponents(suite, &a, &b), a, b)
    }

    pub(crate) fn key_a(&self, suite: &S) -> PublicKey<S> {
        PublicKey::from_parts(suite, self.g_a, self.g_a2).expect("instance halves share an exponent")
    }

    pub(crate) fn key_b(&self, suite: &S) -> PublicKey<S> {
        PublicKey::from_parts(suite, self.g_b, self.g_b2).expect("instance halves share an exponent")
    }
}

/// Game parameters. `None` guesses are drawn uniformly from `1..=q_h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameConfig {
    /// Query budget per oracle.
    pub q_h: usize,
    pub j: Option<usize>,
    pub w: Option<usize>,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig { q_h: 64, j: None, w: None }
    }
}

/// A refused oracle query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    /// The query concerns the guessed forgery index; the game stops.
    #[error("query on the guessed forgery index")]
    Abort,
    #[error("query budget exhausted")]
    BudgetExhausted,
}

/// How a simulation ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GameOutcome<S: PairingSuite> {
    /// A valid fresh forgery at the guessed indexes; the extracted solution.
    Solved(S::G1),
    /// The adversary stopped without a forgery.
    NoForgery,
    /// A valid fresh forgery away from the guessed indexes.
    GuessMiss,
    /// The adversary triggered the forbidden oracle index.
    Aborted,
    /// The output does not verify.
    InvalidForgery,
    /// The output was handed out by an oracle.
    NotFresh,
}

impl<S: PairingSuite> GameOutcome<S> {
    pub fn name(&self) -> &'static str {
        match self {
            GameOutcome::Solved(_) => "solved",
            GameOutcome::NoForgery => "no-forgery",
            GameOutcome::GuessMiss => "guess-miss",
            GameOutcome::Aborted => "aborted",
            GameOutcome::InvalidForgery => "invalid-forgery",
            GameOutcome::NotFresh => "not-fresh",
        }
    }
}

/// Result of one simulation, with the consistency sweep over every
/// signing-oracle answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameReport<S: PairingSuite> {
    pub outcome: GameOutcome<S>,
    pub j: usize,
    pub w: Option<usize>,
    pub answers: usize,
    pub answers_valid: usize,
}

impl<S: PairingSuite> GameReport<S> {
    pub fn consistent(&self) -> bool {
        self.answers == self.answers_valid
    }

    pub fn to_json(&self, suite: &S, game: &str) -> Value {
        json!({
            "game": game,
            "outcome": self.outcome.name(),
            "solution": match &self.outcome {
                GameOutcome::Solved(x) => Some(hex::encode(suite.g1_to_bytes(x))),
                _ => None,
            },
            "j": self.j,
            "w": self.w,
            "oracle_answers": self.answers,
            "oracle_answers_valid": self.answers_valid,
        })
    }
}

fn guess<R: RngCore + ?Sized>(fixed: Option<usize>, q_h: usize, rng: &mut R) -> usize {
    fixed.unwrap_or_else(|| 1 + (rng.next_u64() % q_h as u64) as usize)
}
