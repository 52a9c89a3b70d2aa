//! Report assembly and the two output formats.
//!
//! `json-lines` writes one tagged record per line and is what
//! [`parse_json_lines`] reads back. `table` is for people. Both list the
//! published reference rows next to the measured ones; those rows are
//! constants and are never read back.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::flows::FlowRow;
use crate::ops::{self, Algorithm, Cost, OpRow, ReferenceCost};
use crate::sizes::{self, Length, ReferenceLength, SizeReport};
use crate::timing::TimingRow;

/// Label carried by every reference row.
pub const REFERENCE_LABEL: &str = "published, not measured";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Table,
    JsonLines,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "json-lines" => Ok(Format::JsonLines),
            other => Err(format!("unknown format {other:?}; expected table or json-lines")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hardware {
    pub cpu: String,
    pub logical_cpus: usize,
    pub os: String,
    pub arch: String,
}

impl Hardware {
    pub fn detect() -> Self {
        let cpu = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|v| v.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        Hardware {
            cpu,
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub backend: String,
    pub group_id: String,
    pub insecure: bool,
    pub hardware: Hardware,
    pub batch: Option<usize>,
    pub iris_delay_ms: Option<u64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchReport {
    pub meta: Metadata,
    pub ops: Vec<OpRow>,
    pub sizes: Option<SizeReport>,
    pub timings: Vec<TimingRow>,
    pub flows: Vec<FlowRow>,
}

impl BenchReport {
    pub fn new(meta: Metadata) -> Self {
        BenchReport {
            meta,
            ops: Vec::new(),
            sizes: None,
            timings: Vec::new(),
            flows: Vec::new(),
        }
    }

    pub fn op(&self, algorithm: Algorithm) -> Option<&OpRow> {
        self.ops.iter().find(|r| r.algorithm == algorithm)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Meta(Metadata),
    Ops(OpRow),
    Sizes(SizeReport),
    Timing(TimingRow),
    Flow(FlowRow),
    ReferenceCost {
        scheme: String,
        source: String,
        dgen: Option<Cost>,
        dver: Option<Cost>,
        psig: Option<Cost>,
        pver: Option<Cost>,
    },
    ReferenceLength {
        scheme: String,
        source: String,
        original: LengthRecord,
        proxy: LengthRecord,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct LengthRecord {
    g: u32,
    z: u32,
}

impl From<Length> for LengthRecord {
    fn from(l: Length) -> Self {
        LengthRecord { g: l.g, z: l.z }
    }
}

fn cost_record(r: &ReferenceCost) -> Record {
    Record::ReferenceCost {
        scheme: r.scheme.into(),
        source: REFERENCE_LABEL.into(),
        dgen: r.dgen,
        dver: r.dver,
        psig: r.psig,
        pver: r.pver,
    }
}

fn length_record(r: &ReferenceLength) -> Record {
    Record::ReferenceLength {
        scheme: r.scheme.into(),
        source: REFERENCE_LABEL.into(),
        original: r.original.into(),
        proxy: r.proxy.into(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("no metadata record")]
    MissingMeta,
    #[error("line {0}: second metadata or size record")]
    Duplicate(usize),
}

fn records(report: &BenchReport) -> Vec<Record> {
    let mut out = vec![Record::Meta(report.meta.clone())];
    out.extend(report.ops.iter().cloned().map(Record::Ops));
    if !report.ops.is_empty() {
        out.extend(ops::REFERENCE_COSTS.iter().map(cost_record));
    }
    if let Some(s) = &report.sizes {
        out.push(Record::Sizes(s.clone()));
        out.extend(sizes::REFERENCE_LENGTHS.iter().map(length_record));
    }
    out.extend(report.timings.iter().cloned().map(Record::Timing));
    out.extend(report.flows.iter().cloned().map(Record::Flow));
    out
}

pub fn to_json_lines(report: &BenchReport) -> String {
    records(report)
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

pub fn parse_json_lines(text: &str) -> Result<BenchReport, ParseError> {
    let mut meta = None;
    let mut report = BenchReport::new(Metadata {
        backend: String::new(),
        group_id: String::new(),
        insecure: false,
        hardware: Hardware {
            cpu: String::new(),
            logical_cpus: 0,
            os: String::new(),
            arch: String::new(),
        },
        batch: None,
        iris_delay_ms: None,
        notes: Vec::new(),
    });
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: Record = serde_json::from_str(line).map_err(|source| ParseError::Json { line: i + 1, source })?;
        match rec {
            Record::Meta(m) => {
                if meta.replace(m).is_some() {
                    return Err(ParseError::Duplicate(i + 1));
                }
            }
            Record::Ops(r) => report.ops.push(r),
            Record::Sizes(s) => {
                if report.sizes.replace(s).is_some() {
                    return Err(ParseError::Duplicate(i + 1));
                }
            }
            Record::Timing(t) => report.timings.push(t),
            Record::Flow(f) => report.flows.push(f),
            Record::ReferenceCost { .. } | Record::ReferenceLength { .. } => {}
        }
    }
    report.meta = meta.ok_or(ParseError::MissingMeta)?;
    Ok(report)
}

fn ms(ns: u64) -> String {
    format!("{:.3}", ns as f64 / 1e6)
}

fn opt_cost(c: Option<Cost>) -> String {
    c.map_or_else(|| "-".into(), |c| c.to_string())
}

pub fn to_table(report: &BenchReport) -> String {
    let m = &report.meta;
    let mut s = String::new();
    let _ = writeln!(s, "backend   {} ({}){}", m.backend, m.group_id, if m.insecure { " INSECURE" } else { "" });
    let _ = writeln!(
        s,
        "hardware  {} x{} {}/{}",
        m.hardware.cpu, m.hardware.logical_cpus, m.hardware.os, m.hardware.arch
    );
    if let Some(b) = m.batch {
        let _ = writeln!(s, "batch     {b}");
    }
    if let Some(d) = m.iris_delay_ms {
        let _ = writeln!(s, "iris      {d} ms simulated capture");
    }
    for n in &m.notes {
        let _ = writeln!(s, "note      {n}");
    }

    if !report.ops.is_empty() {
        let _ = writeln!(s, "\noperation counts");
        let _ = writeln!(s, "{:<16} {:<14} {:>6} {:>6} {:<14} {:<14}", "algorithm", "raw", "hash", "inv", "table", "expected");
        for r in &report.ops {
            let _ = writeln!(
                s,
                "{:<16} {:<14} {:>6} {:>6} {:<14} {:<14}",
                r.algorithm.name(),
                r.raw.to_string(),
                r.hash_to_group,
                r.scalar_inversions,
                r.table.to_string(),
                opt_cost(ops::OURS.get(r.algorithm)),
            );
        }
        let _ = writeln!(s, "\n{:<16} {:<10} {:<10} {:<10} {:<14} source", "scheme", "dgen", "dver", "psig", "pver");
        for r in std::iter::once(&ops::OURS).chain(ops::REFERENCE_COSTS.iter()) {
            let source = if r.scheme == ops::OURS.scheme { "expected" } else { REFERENCE_LABEL };
            let _ = writeln!(
                s,
                "{:<16} {:<10} {:<10} {:<10} {:<14} {source}",
                r.scheme,
                opt_cost(r.dgen),
                opt_cost(r.dver),
                opt_cost(r.psig),
                opt_cost(r.pver),
            );
        }
    }

    if let Some(z) = &report.sizes {
        let _ = writeln!(s, "\nsignature lengths ({} bytes per element, 1 tag byte)", z.element_bytes);
        let _ = writeln!(s, "{:<16} {:<16} {:<16} source", "scheme", "original", "proxy");
        let _ = writeln!(
            s,
            "{:<16} {:<16} {:<16} measured{}",
            "CPS",
            format!("{}|G| ({} B)", z.original_elements, z.original_bytes),
            format!("{}|G| ({} B)", z.proxy_elements, z.proxy_bytes),
            if z.conformant { "" } else { ", toy encoding, non-conformant" },
        );
        for r in &sizes::REFERENCE_LENGTHS {
            let _ = writeln!(
                s,
                "{:<16} {:<16} {:<16} {REFERENCE_LABEL}",
                r.scheme,
                r.original.to_string(),
                r.proxy.to_string()
            );
        }
    }

    if !report.timings.is_empty() {
        let _ = writeln!(s, "\nper-call time (ms)");
        let _ = writeln!(s, "{:<16} {:>6} {:>10} {:>10} {:>10} {:>10}", "algorithm", "batch", "mean", "p50", "p95", "max");
        for t in &report.timings {
            let _ = writeln!(
                s,
                "{:<16} {:>6} {:>10} {:>10} {:>10} {:>10}",
                t.algorithm.name(),
                t.batch,
                ms(t.stats.mean_ns),
                ms(t.stats.p50_ns),
                ms(t.stats.p95_ns),
                ms(t.stats.max_ns)
            );
        }
    }

    if !report.flows.is_empty() {
        let _ = writeln!(s, "\nprotocol totals (ms)");
        let _ = writeln!(
            s,
            "{:<14} {:>5} {:>10} {:>10} {:>10} {:>10} {:<14} {:>5}",
            "flow", "runs", "mean", "p95", "iris", "other", "ops", "mits"
        );
        for f in &report.flows {
            let mits = f
                .mits_fetched
                .map_or_else(|| "-".into(), |(lo, hi)| if lo == hi { lo.to_string() } else { format!("{lo}-{hi}") });
            let _ = writeln!(
                s,
                "{:<14} {:>5} {:>10} {:>10} {:>10} {:>10} {:<14} {:>5}",
                f.flow.name(),
                f.total.samples,
                ms(f.total.mean_ns),
                ms(f.total.p95_ns),
                ms(f.iris_ns),
                ms(f.protocol_ns()),
                f.cost.to_string(),
                mits
            );
        }
    }
    s
}

pub fn render(report: &BenchReport, format: Format) -> String {
    match format {
        Format::Table => to_table(report),
        Format::JsonLines => to_json_lines(report),
    }
}

/// Writes the rendered report to `out`.
pub fn emit_report(report: &BenchReport, format: Format, out: &mut dyn Write) -> io::Result<()> {
    out.write_all(render(report, format).as_bytes())?;
    out.flush()
}
