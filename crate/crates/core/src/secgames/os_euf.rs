//! Original-signature unforgeability game, reducing to CDH.
//!
//! Keys are `y_A = g^a` (from the instance) and `y_B = g^chi`. The hash
//! oracle answers `g^t`, except at the guessed index `j` where it answers
//! `g^b * g^t`. Signing answers `sigma = y_A^t * y_A^(chi r)` without `a`.
//! A forgery on the `j`-th message over the `w`-th chameleon query gives
//! `g^ab = sigma* / (g^a)^(t_j) / (g^a)^(chi r_jw)`.

use std::collections::HashMap;

use rand::RngCore;

use super::{guess, GameConfig, GameOutcome, GameReport, Instance, OracleError};
use crate::bilinear::PairingSuite;
use crate::cps::{self, PublicKey};

/// `(sigma, h, R)` as answered by the signing oracle.
pub type Signed<S> = (<S as PairingSuite>::G1, <S as PairingSuite>::G1, <S as PairingSuite>::G1);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OsForgery<S: PairingSuite> {
    pub sigma: S::G1,
    pub h: S::G1,
    pub message: Vec<u8>,
    pub check: S::G1,
}

pub trait OsAdversary<S: PairingSuite> {
    /// Runs against the oracles; `Ok(None)` means no forgery attempt.
    fn attack(&mut self, oracles: &mut OsOracles<'_, S>) -> Result<Option<OsForgery<S>>, OracleError>;
}

#[derive(Clone, Debug)]
struct HashEntry<S: PairingSuite> {
    index: usize,
    t: S::Scalar,
    m: S::G1,
}

#[derive(Clone, Debug)]
struct ChEntry<S: PairingSuite> {
    /// Query index; zero for entries the simulator added itself.
    k: usize,
    r: S::Scalar,
    h: S::G1,
    check: S::G1,
}

impl<S: PairingSuite> Copy for HashEntry<S> {}
impl<S: PairingSuite> Copy for ChEntry<S> {}

/// The simulator's oracles and lists.
pub struct OsOracles<'a, S: PairingSuite> {
    suite: &'a S,
    instance: Instance<S>,
    chi: S::Scalar,
    pk_a: PublicKey<S>,
    pk_b: PublicKey<S>,
    q_h: usize,
    j: usize,
    w: usize,
    rng: &'a mut dyn RngCore,
    /// Set once a query hits the guessed index; every later query fails.
    stopped: bool,
    l_h: HashMap<Vec<u8>, HashEntry<S>>,
    l_ch: HashMap<Vec<u8>, Vec<ChEntry<S>>>,
    ch_queries: usize,
    l_os: Vec<OsForgery<S>>,
}

impl<S: PairingSuite> OsOracles<'_, S> {
    pub fn suite(&self) -> &S {
        self.suite
    }

    pub fn pk_a(&self) -> &PublicKey<S> {
        &self.pk_a
    }

    pub fn pk_b(&self) -> &PublicKey<S> {
        &self.pk_b
    }

    fn program(&mut self, msg: &[u8]) -> HashEntry<S> {
        if let Some(e) = self.l_h.get(msg) {
            return *e;
        }
        let s = self.suite;
        let index = self.l_h.len() + 1;
        let t = s.random_nonzero_scalar(self.rng);
        let g_t = s.g1_pow(&s.g1_generator(), &t);
        let m = if index == self.j { s.g1_mul(&self.instance.g_b, &g_t) } else { g_t };
        let e = HashEntry { index, t, m };
        self.l_h.insert(msg.to_vec(), e);
        e
    }

    /// `H(M)`.
    pub fn hash(&mut self, msg: &[u8]) -> Result<S::G1, OracleError> {
        if self.stopped {
            return Err(OracleError::Abort);
        }
        if !self.l_h.contains_key(msg) && self.l_h.len() >= self.q_h {
            return Err(OracleError::BudgetExhausted);
        }
        Ok(self.program(msg).m)
    }

    fn fresh_ch(&mut self, msg: &[u8], k: usize) -> ChEntry<S> {
        let s = self.suite;
        let m = self.program(msg).m;
        let r = s.random_nonzero_scalar(self.rng);
        let e = ChEntry {
            k,
            r,
            h: s.g1_mul(&m, &s.g1_pow(self.pk_b.g1(), &r)),
            check: s.g1_pow(&s.g1_generator(), &r),
        };
        self.l_ch.entry(msg.to_vec()).or_default().push(e);
        e
    }

    /// `Hash(M, y_B)`: a chameleon tuple `(h, R)`.
    pub fn chameleon_hash(&mut self, msg: &[u8]) -> Result<(S::G1, S::G1), OracleError> {
        if self.stopped {
            return Err(OracleError::Abort);
        }
        if self.ch_queries >= self.q_h {
            return Err(OracleError::BudgetExhausted);
        }
        self.hash(msg)?;
        self.ch_queries += 1;
        let e = self.fresh_ch(msg, self.ch_queries);
        Ok((e.h, e.check))
    }

    /// `DGen(sk_A, M, y_B)` answered without `a`.
    pub fn original_sign(&mut self, msg: &[u8]) -> Result<Signed<S>, OracleError> {
        if self.stopped {
            return Err(OracleError::Abort);
        }
        if self.l_os.len() >= self.q_h {
            return Err(OracleError::BudgetExhausted);
        }
        let entry = match self.l_h.get(msg) {
            Some(e) => *e,
            None => {
                self.hash(msg)?;
                self.l_h[msg]
            }
        };
        if entry.index == self.j {
            self.stopped = true;
            return Err(OracleError::Abort);
        }
        let w = self.w;
        let eligible: Vec<ChEntry<S>> = self
            .l_ch
            .get(msg)
            .map(|v| v.iter().filter(|e| e.k != w).copied().collect())
            .unwrap_or_default();
        let ch = if eligible.is_empty() {
            self.fresh_ch(msg, 0)
        } else {
            eligible[(self.rng.next_u64() % eligible.len() as u64) as usize]
        };
        let s = self.suite;
        let chi_r = s.scalar_mul(&self.chi, &ch.r);
        let sigma = s.g1_mul(&s.g1_pow(&self.instance.g_a, &entry.t), &s.g1_pow(&self.instance.g_a, &chi_r));
        self.l_os.push(OsForgery {
            sigma,
            h: ch.h,
            message: msg.to_vec(),
            check: ch.check,
        });
        Ok((sigma, ch.h, ch.check))
    }

    fn verifies(&mut self, f: &OsForgery<S>) -> bool {
        let m = self.program(&f.message).m;
        cps::pver_prehashed(self.suite, &self.pk_a, &f.sigma, &f.h, &m, &f.check, &self.pk_b)
    }

    fn judge(&mut self, f: &OsForgery<S>) -> GameOutcome<S> {
        if !self.verifies(f) {
            return GameOutcome::InvalidForgery;
        }
        if self.l_os.contains(f) {
            return GameOutcome::NotFresh;
        }
        let entry = self.l_h[&f.message];
        let w = self.w;
        let ch = self
            .l_ch
            .get(&f.message)
            .and_then(|v| v.iter().find(|e| e.k == w && e.h == f.h).copied());
        match ch {
            Some(ch) if entry.index == self.j => {
                let s = self.suite;
                let chi_r = s.scalar_mul(&self.chi, &ch.r);
                let mask = s.g1_mul(&s.g1_pow(&self.instance.g_a, &entry.t), &s.g1_pow(&self.instance.g_a, &chi_r));
                GameOutcome::Solved(s.g1_div(&f.sigma, &mask))
            }
            _ => GameOutcome::GuessMiss,
        }
    }
}

/// Runs the simulation against `adversary` and re-verifies every
/// signing-oracle answer.
pub fn run_os_euf_simulation<S: PairingSuite, R: RngCore>(
    suite: &S,
    instance: &Instance<S>,
    config: GameConfig,
    adversary: &mut dyn OsAdversary<S>,
    rng: &mut R,
) -> GameReport<S> {
    let j = guess(config.j, config.q_h, rng);
    let w = guess(config.w, config.q_h, rng);
    let chi = suite.random_nonzero_scalar(rng);
    let pk_b = PublicKey::from_parts(
        suite,
        suite.g1_pow(&suite.g1_generator(), &chi),
        suite.g2_pow(&suite.g2_generator(), &chi),
    )
    .expect("consistent halves");
    let mut oracles = OsOracles {
        suite,
        instance: *instance,
        chi,
        pk_a: instance.key_a(suite),
        pk_b,
        q_h: config.q_h,
        j,
        w,
        rng,
        stopped: false,
        l_h: HashMap::new(),
        l_ch: HashMap::new(),
        ch_queries: 0,
        l_os: Vec::new(),
    };
    let outcome = match adversary.attack(&mut oracles) {
        Err(_) => GameOutcome::Aborted,
        Ok(None) => GameOutcome::NoForgery,
        Ok(Some(f)) => oracles.judge(&f),
    };
    let answers = oracles.l_os.clone();
    let answers_valid = answers.iter().filter(|a| oracles.verifies(a)).count();
    GameReport {
        outcome,
        j,
        w: Some(w),
        answers: answers.len(),
        answers_valid,
    }
}

/// Queries the oracles on `queries` distinct messages and never forges.
pub struct HonestOs {
    pub queries: usize,
}

impl<S: PairingSuite> OsAdversary<S> for HonestOs {
    fn attack(&mut self, o: &mut OsOracles<'_, S>) -> Result<Option<OsForgery<S>>, OracleError> {
        for i in 0..self.queries {
            let msg = format!("honest-{i}").into_bytes();
            o.chameleon_hash(&msg)?;
            o.original_sign(&msg)?;
        }
        Ok(None)
    }
}

/// Test double given the exponent `a`. After `warmup` honest queries it
/// hashes a target message, takes one chameleon tuple and signs it with
/// `a`. The target is the `warmup + 1`-th hash and chameleon query.
pub struct CheatingOs<S: PairingSuite> {
    pub a: S::Scalar,
    pub warmup: usize,
}

impl<S: PairingSuite> OsAdversary<S> for CheatingOs<S> {
    fn attack(&mut self, o: &mut OsOracles<'_, S>) -> Result<Option<OsForgery<S>>, OracleError> {
        for i in 0..self.warmup {
            let msg = format!("warmup-{i}").into_bytes();
            o.chameleon_hash(&msg)?;
            o.original_sign(&msg)?;
        }
        let message = b"forged target".to_vec();
        let (h, check) = o.chameleon_hash(&message)?;
        let sigma = o.suite().g1_pow(&h, &self.a);
        Ok(Some(OsForgery {
            sigma,
            h,
            message,
            check,
        }))
    }
}

/// Returns a signing-oracle answer as its forgery.
pub struct ReplayOs;

impl<S: PairingSuite> OsAdversary<S> for ReplayOs {
    fn attack(&mut self, o: &mut OsOracles<'_, S>) -> Result<Option<OsForgery<S>>, OracleError> {
        let message = b"replayed".to_vec();
        let (sigma, h, check) = o.original_sign(&message)?;
        Ok(Some(OsForgery {
            sigma,
            h,
            message,
            check,
        }))
    }
}
