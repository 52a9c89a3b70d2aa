use std::time::Duration;

use cps_bench::report::{render, to_json_lines, REFERENCE_LABEL};
use cps_bench::{
    count_all, parse_json_lines, run, Algorithm, Backend, BenchReport, Format, Hardware, Metadata, RunConfig, SuiteKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn config(suite: SuiteKind, batch: Option<usize>) -> RunConfig {
    RunConfig {
        suite,
        batch,
        iris_delay: Duration::ZERO,
        seed: 7,
    }
}

fn full_report() -> BenchReport {
    let s = Backend::transparent();
    let mut r = run(s.clone(), Backend::Transparent, &config(SuiteKind::Ops, None)).unwrap();
    r.sizes = run(s.clone(), Backend::Transparent, &config(SuiteKind::Sizes, None)).unwrap().sizes;
    r.timings = run(s.clone(), Backend::Transparent, &config(SuiteKind::Timing, Some(5))).unwrap().timings;
    r.flows = run(s, Backend::Transparent, &config(SuiteKind::Protocols, Some(2))).unwrap().flows;
    r
}

#[test]
fn json_lines_round_trip() {
    let report = full_report();
    let text = to_json_lines(&report);
    assert_eq!(parse_json_lines(&text).unwrap(), report);
    assert!(text.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(text.lines().any(|l| l.contains("\"kind\":\"reference_cost\"") && l.contains(REFERENCE_LABEL)));
    assert!(text.lines().any(|l| l.contains("\"kind\":\"reference_length\"")));
}

#[test]
fn parse_rejects_missing_or_repeated_meta() {
    let text = to_json_lines(&full_report());
    let without_meta: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    assert!(parse_json_lines(&without_meta).is_err());
    let first = text.lines().next().unwrap();
    assert!(parse_json_lines(&format!("{first}\n{text}")).is_err());
    assert!(parse_json_lines("not json\n").is_err());
}

#[test]
fn table_lists_measured_and_reference_rows() {
    let table = render(&full_report(), Format::Table);
    for needle in ["INSECURE", "operation counts", "Verma (2019)", "Qiao (2022)", "Yang (2020)", "3E + 1M", "trace/ai", REFERENCE_LABEL] {
        assert!(table.contains(needle), "table lacks {needle:?}:\n{table}");
    }
    assert!(table.contains("non-conformant"));
}

#[test]
fn counts_agree_across_backends_and_seeds() {
    let a = count_all(&Backend::transparent(), &mut ChaCha20Rng::seed_from_u64(1));
    let b = count_all(&Backend::transparent(), &mut ChaCha20Rng::seed_from_u64(2));
    let c = count_all(&Backend::production(), &mut ChaCha20Rng::seed_from_u64(3));
    assert_eq!(a, b);
    assert_eq!(a, c);
    let dver = a.iter().find(|r| r.algorithm == Algorithm::Dver).unwrap();
    assert_eq!(dver.hash_to_group, 1);
    assert_eq!(dver.table, dver.raw);
}

#[test]
fn production_report_metadata() {
    let r = run(Backend::production(), Backend::Production, &config(SuiteKind::Sizes, None)).unwrap();
    assert_eq!(r.meta.backend, "production");
    assert!(!r.meta.insecure);
    assert!(r.sizes.unwrap().conformant);
    assert!(r.meta.hardware.logical_cpus >= 1);
    let _ = Hardware::detect();
}

#[test]
fn protocol_flows_report_mits() {
    let r = run(Backend::transparent(), Backend::Transparent, &config(SuiteKind::Protocols, Some(3))).unwrap();
    assert_eq!(r.flows.len(), 6);
    let mits: Vec<_> = r.flows.iter().filter_map(|f| f.mits_fetched).collect();
    assert_eq!(mits, vec![(1, 1), (2, 2)]);
    assert!(r.flows.iter().all(|f| f.total.samples == 3));
    let _: &Metadata = &r.meta;
}

#[test]
fn parsers_reject_unknown_names() {
    assert!("nope".parse::<Backend>().is_err());
    assert!("nope".parse::<SuiteKind>().is_err());
    assert!("nope".parse::<Format>().is_err());
    assert!("csv".parse::<Format>().is_err());
    assert_eq!("json-lines".parse::<Format>().unwrap(), Format::JsonLines);
}

proptest::proptest! {
    #[test]
    fn stats_are_ordered(ns in proptest::collection::vec(0u64..10_000_000, 1..64)) {
        let samples: Vec<Duration> = ns.iter().map(|&n| Duration::from_nanos(n)).collect();
        let s = cps_bench::Stats::from_durations(&samples);
        let (min, max) = (*ns.iter().min().unwrap(), *ns.iter().max().unwrap());
        proptest::prop_assert_eq!(s.samples, ns.len());
        proptest::prop_assert_eq!((s.min_ns, s.max_ns), (min, max));
        proptest::prop_assert!(min <= s.p50_ns && s.p50_ns <= s.p95_ns && s.p95_ns <= max);
        proptest::prop_assert!(min <= s.mean_ns && s.mean_ns <= max);
        proptest::prop_assert!(ns.contains(&s.p50_ns) && ns.contains(&s.p95_ns));
    }
}
