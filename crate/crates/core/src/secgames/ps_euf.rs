//! Proxy-signature unforgeability game, reducing to DCDH.
//!
//! Keys are `y_A = g^chi` and `y_B = g^b` (from the instance). With random
//! `theta` the simulator fixes `h = g^theta` and answers `H(M') =
//! g^theta y_B^t / y_B^theta`, so that `R' = g^theta / g^t` is a valid
//! collision without `b`. At the guessed index `j` the hash carries an
//! extra `1 / g^a`, and a forgery there gives `g^(a/b) = R* g^(t_j) /
//! g^theta`.

use std::collections::HashMap;

use rand::RngCore;

use super::{guess, GameConfig, GameOutcome, GameReport, Instance, OracleError};
use crate::bilinear::PairingSuite;
use crate::cps::{self, PublicKey};

/// The message of the simulator's initial original signature.
pub const INITIAL_MESSAGE: &[u8] = b"initial delegation";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsForgery<S: PairingSuite> {
    pub message: Vec<u8>,
    pub check: S::G1,
}

pub trait PsAdversary<S: PairingSuite> {
    fn attack(&mut self, oracles: &mut PsOracles<'_, S>) -> Result<Option<PsForgery<S>>, OracleError>;
}

#[derive(Clone, Debug)]
struct HashEntry<S: PairingSuite> {
    index: usize,
    t: S::Scalar,
    m: S::G1,
}

impl<S: PairingSuite> Copy for HashEntry<S> {}

pub struct PsOracles<'a, S: PairingSuite> {
    suite: &'a S,
    instance: Instance<S>,
    theta: S::Scalar,
    pk_a: PublicKey<S>,
    pk_b: PublicKey<S>,
    sigma_a: S::G1,
    h: S::G1,
    q_h: usize,
    j: usize,
    rng: &'a mut dyn RngCore,
    /// Set once a query hits the guessed index; every later query fails.
    stopped: bool,
    /// Hash queries so far; the initial message is index 0.
    queries: usize,
    l_h: HashMap<Vec<u8>, HashEntry<S>>,
    l_ps: Vec<PsForgery<S>>,
}

impl<S: PairingSuite> PsOracles<'_, S> {
    pub fn suite(&self) -> &S {
        self.suite
    }

    pub fn pk_a(&self) -> &PublicKey<S> {
        &self.pk_a
    }

    pub fn pk_b(&self) -> &PublicKey<S> {
        &self.pk_b
    }

    /// The published original signature `(sigma_A, h, M, R)`.
    pub fn original(&self) -> (S::G1, S::G1, Vec<u8>, S::G1) {
        let initial = &self.l_ps[0];
        (self.sigma_a, self.h, initial.message.clone(), initial.check)
    }

    /// `g^theta y_B^t / y_B^theta`, divided by `g^a` at the guessed index.
    fn programmed(&self, t: &S::Scalar, index: usize) -> S::G1 {
        let s = self.suite;
        let g_theta = s.g1_pow(&s.g1_generator(), &self.theta);
        let num = s.g1_mul(&g_theta, &s.g1_pow(self.pk_b.g1(), t));
        let mut den = s.g1_pow(self.pk_b.g1(), &self.theta);
        if index == self.j {
            den = s.g1_mul(&self.instance.g_a, &den);
        }
        s.g1_div(&num, &den)
    }

    fn program(&mut self, msg: &[u8]) -> HashEntry<S> {
        if let Some(e) = self.l_h.get(msg) {
            return *e;
        }
        self.queries += 1;
        let t = self.suite.random_nonzero_scalar(self.rng);
        let e = HashEntry {
            index: self.queries,
            t,
            m: self.programmed(&t, self.queries),
        };
        self.l_h.insert(msg.to_vec(), e);
        e
    }

    pub fn hash(&mut self, msg: &[u8]) -> Result<S::G1, OracleError> {
        if self.stopped {
            return Err(OracleError::Abort);
        }
        if !self.l_h.contains_key(msg) && self.queries >= self.q_h {
            return Err(OracleError::BudgetExhausted);
        }
        Ok(self.program(msg).m)
    }

    fn collision(&self, t: &S::Scalar) -> S::G1 {
        let s = self.suite;
        let g = s.g1_generator();
        s.g1_div(&s.g1_pow(&g, &self.theta), &s.g1_pow(&g, t))
    }

    /// `PSig(sk_B, h, M')` answered without `b`.
    pub fn proxy_sign(&mut self, msg: &[u8]) -> Result<S::G1, OracleError> {
        if self.stopped {
            return Err(OracleError::Abort);
        }
        if let Some(p) = self.l_ps.iter().find(|p| p.message == msg) {
            return Ok(p.check);
        }
        if self.l_ps.len() > self.q_h {
            return Err(OracleError::BudgetExhausted);
        }
        self.hash(msg)?;
        let entry = self.l_h[msg];
        if entry.index == self.j {
            self.stopped = true;
            return Err(OracleError::Abort);
        }
        let check = self.collision(&entry.t);
        self.l_ps.push(PsForgery {
            message: msg.to_vec(),
            check,
        });
        Ok(check)
    }

    fn verifies(&mut self, f: &PsForgery<S>) -> bool {
        let m = self.program(&f.message).m;
        cps::pver_prehashed(self.suite, &self.pk_a, &self.sigma_a, &self.h, &m, &f.check, &self.pk_b)
    }

    fn judge(&mut self, f: &PsForgery<S>) -> GameOutcome<S> {
        if !self.verifies(f) {
            return GameOutcome::InvalidForgery;
        }
        if self.l_ps.contains(f) {
            return GameOutcome::NotFresh;
        }
        let entry = self.l_h[&f.message];
        if entry.index != self.j {
            return GameOutcome::GuessMiss;
        }
        let s = self.suite;
        let g = s.g1_generator();
        let scale = s.g1_div(&s.g1_pow(&g, &entry.t), &s.g1_pow(&g, &self.theta));
        GameOutcome::Solved(s.g1_mul(&f.check, &scale))
    }
}

pub fn run_ps_euf_simulation<S: PairingSuite, R: RngCore>(
    suite: &S,
    instance: &Instance<S>,
    config: GameConfig,
    adversary: &mut dyn PsAdversary<S>,
    rng: &mut R,
) -> GameReport<S> {
    let j = guess(config.j, config.q_h, rng);
    let chi = suite.random_nonzero_scalar(rng);
    let theta = suite.random_nonzero_scalar(rng);
    let t0 = suite.random_nonzero_scalar(rng);
    let pk_a = PublicKey::from_parts(
        suite,
        suite.g1_pow(&suite.g1_generator(), &chi),
        suite.g2_pow(&suite.g2_generator(), &chi),
    )
    .expect("consistent halves");
    let h = suite.g1_pow(&suite.g1_generator(), &theta);
    let mut oracles = PsOracles {
        suite,
        instance: *instance,
        theta,
        pk_a,
        pk_b: instance.key_b(suite),
        sigma_a: suite.g1_pow(&h, &chi),
        h,
        q_h: config.q_h,
        j,
        rng,
        stopped: false,
        queries: 0,
        l_h: HashMap::new(),
        l_ps: Vec::new(),
    };
    let m0 = oracles.programmed(&t0, 0);
    oracles.l_h.insert(
        INITIAL_MESSAGE.to_vec(),
        HashEntry {
            index: 0,
            t: t0,
            m: m0,
        },
    );
    let r0 = oracles.collision(&t0);
    oracles.l_ps.push(PsForgery {
        message: INITIAL_MESSAGE.to_vec(),
        check: r0,
    });

    let outcome = match adversary.attack(&mut oracles) {
        Err(_) => GameOutcome::Aborted,
        Ok(None) => GameOutcome::NoForgery,
        Ok(Some(f)) => oracles.judge(&f),
    };
    let answers = oracles.l_ps.clone();
    let answers_valid = answers.iter().filter(|a| oracles.verifies(a)).count();
    GameReport {
        outcome,
        j,
        w: None,
        answers: answers.len(),
        answers_valid,
    }
}

pub struct HonestPs {
    pub queries: usize,
}

impl<S: PairingSuite> PsAdversary<S> for HonestPs {
    fn attack(&mut self, o: &mut PsOracles<'_, S>) -> Result<Option<PsForgery<S>>, OracleError> {
        for i in 0..self.queries {
            o.proxy_sign(format!("honest-{i}").as_bytes())?;
        }
        Ok(None)
    }
}

/// Test double given the exponent `b`: after `warmup` signing queries it
/// computes `R* = (h / H(M*))^(1/b)` for a target that is the
/// `warmup + 1`-th hash query.
pub struct CheatingPs<S: PairingSuite> {
    pub b: S::Scalar,
    pub warmup: usize,
}

impl<S: PairingSuite> PsAdversary<S> for CheatingPs<S> {
    fn attack(&mut self, o: &mut PsOracles<'_, S>) -> Result<Option<PsForgery<S>>, OracleError> {
        for i in 0..self.warmup {
            o.proxy_sign(format!("warmup-{i}").as_bytes())?;
        }
        let message = b"forged target".to_vec();
        let m = o.hash(&message)?;
        let s = o.suite();
        let inv = s.scalar_inverse(&self.b).map_err(|_| OracleError::Abort)?;
        let (_, h, _, _) = o.original();
        let check = s.g1_pow(&s.g1_div(&h, &m), &inv);
        Ok(Some(PsForgery { message, check }))
    }
}

/// Returns a signing-oracle answer as its forgery.
pub struct ReplayPs;

impl<S: PairingSuite> PsAdversary<S> for ReplayPs {
    fn attack(&mut self, o: &mut PsOracles<'_, S>) -> Result<Option<PsForgery<S>>, OracleError> {
        let message = b"replayed".to_vec();
        let check = o.proxy_sign(&message)?;
        Ok(Some(PsForgery { message, check }))
    }
}
