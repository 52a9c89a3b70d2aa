//! Wall-clock timing of single scheme calls.

use std::hint::black_box;
use std::time::{Duration, Instant};

use cps_core::bilinear::PairingSuite;
use cps_core::cps;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::ops::Algorithm;

/// Batch sizes of the reference timing figure.
pub const FIGURE_BATCHES: [usize; 4] = [10, 20, 30, 40];

/// Per-call statistics over a batch, in nanoseconds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub samples: usize,
    pub mean_ns: u64,
    pub p50_ns: u64,
    pub p95_ns: u64,
    pub min_ns: u64,
    pub max_ns: u64,
}

impl Stats {
    /// Summarizes `samples`; an empty input gives all zeros.
    pub fn from_durations(samples: &[Duration]) -> Self {
        let mut ns: Vec<u64> = samples.iter().map(|d| d.as_nanos() as u64).collect();
        ns.sort_unstable();
        let n = ns.len();
        if n == 0 {
            return Stats {
                samples: 0,
                mean_ns: 0,
                p50_ns: 0,
                p95_ns: 0,
                min_ns: 0,
                max_ns: 0,
            };
        }
        // Nearest-rank percentiles.
        let rank = |p: usize| ns[((p * n).div_ceil(100)).clamp(1, n) - 1];
        Stats {
            samples: n,
            mean_ns: (ns.iter().map(|&v| v as u128).sum::<u128>() / n as u128) as u64,
            p50_ns: rank(50),
            p95_ns: rank(95),
            min_ns: ns[0],
            max_ns: ns[n - 1],
        }
    }

    pub fn mean(&self) -> Duration {
        Duration::from_nanos(self.mean_ns)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingRow {
    pub algorithm: Algorithm,
    pub batch: usize,
    pub stats: Stats,
}

struct Fixture<S: PairingSuite> {
    a: cps::KeyPair<S>,
    b: cps::KeyPair<S>,
    msg: Vec<u8>,
    other: Vec<u8>,
    tuple: cps::ChameleonTuple<S>,
    collided: cps::ChameleonTuple<S>,
}

fn fixture<S: PairingSuite, R: RngCore + ?Sized>(suite: &S, rng: &mut R) -> Fixture<S> {
    let a = cps::keygen(suite, rng);
    let b = cps::keygen(suite, rng);
    let mut msg = vec![0u8; 32];
    rng.fill_bytes(&mut msg);
    let mut other = vec![0u8; 32];
    rng.fill_bytes(&mut other);
    let tuple = cps::dgen(suite, &a, &msg, b.public(), rng);
    let collided = tuple.with_collision(other.clone(), cps::psig(suite, &b, &tuple.h, &other));
    Fixture {
        a,
        b,
        msg,
        other,
        tuple,
        collided,
    }
}

/// Times `batch` calls of `algorithm`, each on fresh inputs prepared
/// outside the timed region, after one untimed warm-up call.
pub fn time_batch<S: PairingSuite, R: RngCore + ?Sized>(
    suite: &S,
    algorithm: Algorithm,
    batch: usize,
    rng: &mut R,
) -> TimingRow {
    let fixtures: Vec<Fixture<S>> = (0..=batch).map(|_| fixture(suite, rng)).collect();
    let mut samples = Vec::with_capacity(batch);
    for (i, f) in fixtures.iter().enumerate() {
        let start = Instant::now();
        match algorithm {
            Algorithm::ChameleonHash => {
                black_box(cps::chameleon_hash(suite, &f.msg, f.b.public(), rng));
            }
            Algorithm::Dgen => {
                black_box(cps::dgen(suite, &f.a, &f.msg, f.b.public(), rng));
            }
            Algorithm::Dver => {
                black_box(cps::pver(suite, f.a.public(), &f.tuple, f.b.public()).ok());
            }
            Algorithm::Psig => {
                black_box(cps::psig(suite, &f.b, &f.tuple.h, &f.other));
            }
            Algorithm::Pver => {
                black_box(cps::pver(suite, f.a.public(), &f.collided, f.b.public()).ok());
            }
        }
        if i > 0 {
            samples.push(start.elapsed());
        }
    }
    TimingRow {
        algorithm,
        batch,
        stats: Stats::from_durations(&samples),
    }
}
