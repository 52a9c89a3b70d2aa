//! End-to-end protocol timing: login, delegation, mutual authentication
//! and tracing for both driver types.

use std::fmt;
use std::time::{Duration, Instant};

use cps_core::bilinear::PairingSuite;
use cps_core::counters::measure;
use cps_core::protocols::{trace, Prover, TraceError};
use serde::{Deserialize, Serialize};

use crate::ops::Cost;
use crate::scenario::{Deployment, ScenarioError};
use crate::timing::Stats;

/// Iris captures per run; only the human side of login and delegation
/// reads the sensor.
pub const LOGIN_CAPTURES: u32 = 1;
pub const DELEGATE_CAPTURES: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    Login,
    Delegate,
    MutualHuman,
    MutualAi,
    TraceHuman,
    TraceAi,
}

impl Flow {
    pub const ALL: [Flow; 6] = [
        Flow::Login,
        Flow::Delegate,
        Flow::MutualHuman,
        Flow::MutualAi,
        Flow::TraceHuman,
        Flow::TraceAi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Flow::Login => "login",
            Flow::Delegate => "delegate",
            Flow::MutualHuman => "mutual/human",
            Flow::MutualAi => "mutual/ai",
            Flow::TraceHuman => "trace/human",
            Flow::TraceAi => "trace/ai",
        }
    }

    fn captures(self) -> u32 {
        match self {
            Flow::Login => LOGIN_CAPTURES,
            Flow::Delegate => DELEGATE_CAPTURES,
            _ => 0,
        }
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Totals for one flow, with the split between simulated iris capture and
/// everything else, and the group operations of one run across all parties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRow {
    pub flow: Flow,
    pub total: Stats,
    pub iris_ns: u64,
    pub cost: Cost,
    /// Tracing only: fewest and most tokens fetched in a single trace.
    pub mits_fetched: Option<(u64, u64)>,
}

impl FlowRow {
    /// Mean time outside the simulated capture.
    pub fn protocol_ns(&self) -> u64 {
        self.total.mean_ns.saturating_sub(self.iris_ns)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowConfig {
    pub runs: usize,
    pub iris_delay: Duration,
    pub seed: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            runs: 10,
            iris_delay: Duration::ZERO,
            seed: 0,
        }
    }
}

#[derive(Default)]
struct Acc {
    samples: Vec<Duration>,
    cost: Cost,
    mits: Vec<u64>,
}

impl Acc {
    fn push(&mut self, elapsed: Duration, c: &cps_core::counters::OpCounters) {
        self.samples.push(elapsed);
        self.cost = Cost::new(c.exps, c.muls, c.pairings);
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration, cps_core::counters::OpCounters) {
    let start = Instant::now();
    let (out, counters) = measure(f);
    (out, start.elapsed(), counters)
}

/// Runs every flow `config.runs` times, each run on a freshly registered
/// user, proxy and verifier. Registration is not timed.
pub fn time_protocols<S: PairingSuite>(suite: S, config: FlowConfig) -> Result<Vec<FlowRow>, ScenarioError> {
    let mut d = Deployment::new(suite, config.seed).with_iris_delay(config.iris_delay);
    let mut acc: Vec<Acc> = Flow::ALL.iter().map(|_| Acc::default()).collect();
    let token = d.token.clone();
    for run in 0..config.runs {
        let aid = format!("avatar-{run}");
        let user = d.user(&format!("user-{run}"), &aid)?;
        let proxy = d.agent(&format!("proxy-{run}"))?;
        let verifier = d.agent(&format!("verifier-{run}"))?;

        let (out, t, c) = timed(|| d.login(&user, &aid));
        let session = out?.session;
        acc[0].push(t, &c);

        let (out, t, c) = timed(|| d.mutual(Prover::Human { user: &user, session: &session }, &verifier));
        let human = out?;
        acc[2].push(t, &c);

        let (out, t, c) = timed(|| trace(&human.evidence, d.registry(), Some(&token)));
        let report = out.map_err(trace_failure)?;
        acc[4].push(t, &c);
        acc[4].mits.push(report.mits_fetched);

        let (out, t, c) = timed(|| d.delegate(&user, &session, &proxy));
        let proxied = out?.session;
        acc[1].push(t, &c);

        let (out, t, c) = timed(|| d.mutual(Prover::Proxy { agent: &proxy, session: &proxied }, &verifier));
        let ai = out?;
        acc[3].push(t, &c);

        let (out, t, c) = timed(|| trace(&ai.evidence, d.registry(), Some(&token)));
        let report = out.map_err(trace_failure)?;
        acc[5].push(t, &c);
        acc[5].mits.push(report.mits_fetched);
    }
    Ok(Flow::ALL
        .into_iter()
        .zip(acc)
        .map(|(flow, a)| FlowRow {
            flow,
            total: Stats::from_durations(&a.samples),
            iris_ns: config.iris_delay.as_nanos() as u64 * flow.captures() as u64,
            cost: a.cost,
            mits_fetched: match (a.mits.iter().min(), a.mits.iter().max()) {
                (Some(&lo), Some(&hi)) => Some((lo, hi)),
                _ => None,
            },
        })
        .collect())
}

fn trace_failure(e: TraceError) -> ScenarioError {
    ScenarioError::Trace(e.to_string())
}
