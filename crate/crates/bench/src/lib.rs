//! Operation counts, signature lengths and timings for the chameleon proxy
//! signature scheme and the avatar protocols built on it.
//!
//! Each suite fills part of a [`BenchReport`]; [`run`] drives one suite on
//! a chosen backend and [`report::emit_report`] writes it out.

pub mod flows;
pub mod ops;
pub mod report;
pub mod scenario;
pub mod sizes;
pub mod timing;

use std::str::FromStr;
use std::time::Duration;

use cps_core::bilinear::{Bls12Suite, PairingSuite, TransparentSuite, SECURITY_BITS};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub use flows::{time_protocols, Flow, FlowConfig, FlowRow};
pub use ops::{count_all, count_ops, table_cost, Algorithm, Cost, OpRow};
pub use report::{emit_report, parse_json_lines, BenchReport, Format, Hardware, Metadata};
pub use scenario::{Deployment, ScenarioError};
pub use sizes::{measure_sizes, SizeReport};
pub use timing::{time_batch, Stats, TimingRow, FIGURE_BATCHES};

/// Environment variable selecting the backend.
pub const BACKEND_ENV: &str = "CPS_BACKEND";

/// Modulus of the transparent backend outside of tests: the Mersenne prime
/// `2^61 - 1`, large enough that random exponents never collide in a run.
pub const TOY_MODULUS: u64 = (1 << 61) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Production,
    Transparent,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "production" => Ok(Backend::Production),
            "transparent" => Ok(Backend::Transparent),
            other => Err(format!("unknown backend {other:?}; expected production or transparent")),
        }
    }
}

impl Backend {
    /// Reads [`BACKEND_ENV`]; unset means production.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var(BACKEND_ENV) {
            Ok(v) => v.parse(),
            Err(std::env::VarError::NotPresent) => Ok(Backend::Production),
            Err(e) => Err(e.to_string()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::Production => "production",
            Backend::Transparent => "transparent",
        }
    }

    pub fn production() -> Bls12Suite {
        Bls12Suite::setup(SECURITY_BITS).expect("supported security level")
    }

    pub fn transparent() -> TransparentSuite {
        TransparentSuite::insecure(TOY_MODULUS).expect("prime modulus")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Ops,
    Sizes,
    Timing,
    Protocols,
}

impl FromStr for SuiteKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ops" => Ok(SuiteKind::Ops),
            "sizes" => Ok(SuiteKind::Sizes),
            "timing" => Ok(SuiteKind::Timing),
            "protocols" => Ok(SuiteKind::Protocols),
            other => Err(format!("unknown suite {other:?}; expected ops, sizes, timing or protocols")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub suite: SuiteKind,
    /// Calls per timing batch, or protocol runs. `None` uses the figure
    /// batches for timing and 10 runs for protocols.
    pub batch: Option<usize>,
    pub iris_delay: Duration,
    pub seed: u64,
}

const PROJECTION_NOTE: &str = "table column charges the message hash as one exponentiation in psig and pver";
const TIMING_NOTE: &str = "timings compare with published figures by order of magnitude only; hardware and curve differ";
const TOY_NOTE: &str = "transparent backend: toy encodings, byte sizes and timings are non-conformant";

/// Runs one suite on `suite`, labelled `backend`.
pub fn run<S: PairingSuite>(suite: S, backend: Backend, config: &RunConfig) -> Result<BenchReport, ScenarioError> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut notes = Vec::new();
    if suite.is_insecure() {
        notes.push(TOY_NOTE.to_string());
    }
    let mut report = BenchReport::new(Metadata {
        backend: backend.name().into(),
        group_id: suite.params().group_id.clone(),
        insecure: suite.is_insecure(),
        hardware: Hardware::detect(),
        batch: config.batch,
        iris_delay_ms: None,
        notes: Vec::new(),
    });
    match config.suite {
        SuiteKind::Ops => {
            notes.push(PROJECTION_NOTE.into());
            report.ops = count_all(&suite, &mut rng);
        }
        SuiteKind::Sizes => report.sizes = Some(measure_sizes(&suite, &mut rng)),
        SuiteKind::Timing => {
            notes.push(TIMING_NOTE.into());
            let batches = config.batch.map_or(FIGURE_BATCHES.to_vec(), |b| vec![b]);
            for batch in batches {
                for algorithm in Algorithm::ALL {
                    report.timings.push(time_batch(&suite, algorithm, batch, &mut rng));
                }
            }
        }
        SuiteKind::Protocols => {
            notes.push(TIMING_NOTE.into());
            report.meta.iris_delay_ms = Some(config.iris_delay.as_millis() as u64);
            report.flows = time_protocols(
                suite,
                FlowConfig {
                    runs: config.batch.unwrap_or(10),
                    iris_delay: config.iris_delay,
                    seed: config.seed,
                },
            )?;
        }
    }
    report.meta.notes = notes;
    Ok(report)
}
