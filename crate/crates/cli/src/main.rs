//! `cps`: register users, run the avatar protocols against a persistent
//! registry, trace evidence, and run the security-game and benchmark
//! harnesses.

mod state;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cps_bench::report::emit_report;
use cps_bench::{Backend, Deployment, Format, RunConfig, SuiteKind, BACKEND_ENV};
use cps_core::bilinear::PairingSuite;
use cps_core::identity::{Avatar, AvatarDescription};
use cps_core::protocols::{
    delegate, login, mutual_auth, trace, MutualEvidence, ProtocolTranscript, Prover, TransportKind, UserCtx,
};
use cps_core::registry::AuthorityToken;
use cps_core::secgames::{
    false_accusation_case1, false_accusation_case2, run_os_euf_simulation, run_ps_euf_simulation, CheatingOs,
    CheatingPs, GameConfig, GameOutcome, HonestOs, HonestPs, Instance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use state::{sn_hex, AgentEntry, Layout, UserEntry, World};

#[derive(Parser, Debug)]
#[command(name = "cps", version, about = "Chameleon proxy signature avatar authentication simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Directory holding keys, avatar records, transcripts and evidence.
    #[arg(long, global = true, env = "CPS_STATE_DIR", default_value = "cps-state")]
    state_dir: PathBuf,
    /// Ledger file; defaults to `<state-dir>/ledger.bin`.
    #[arg(long, global = true, env = "CPS_LEDGER_PATH")]
    ledger_path: Option<PathBuf>,
    /// Trusted serial-number store; defaults to `<state-dir>/trusted.bin`.
    #[arg(long, global = true, env = "CPS_TRUSTED_STORE_PATH")]
    trusted_store_path: Option<PathBuf>,
    /// Tracing authority credential. Sets up a new deployment; `trace`
    /// presents it to the trusted store.
    #[arg(long, global = true, env = "CPS_AUTHORITY_TOKEN", hide_env_values = true)]
    authority_token: Option<String>,
    /// `loopback` or `tcp:<addr>`.
    #[arg(long, global = true, env = "CPS_TRANSPORT", default_value = "loopback")]
    transport: TransportKind,
    /// Use the transparent toy group. It has no security at all.
    #[arg(long, global = true)]
    insecure_toy_group: bool,
    /// Seed for client-side randomness (keys, eye seeds, nonces). Registry
    /// and server draw from the OS.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Register a human user with an avatar, or an agent.
    Register(RegisterArgs),
    /// Log a human user in to their avatar.
    Login(LoginArgs),
    /// Hand a logged-in avatar to an AI proxy.
    Delegate(DelegateArgs),
    /// Mutually authenticate the avatar's current driver with a verifier.
    Interact(InteractArgs),
    /// Resolve stored evidence to the avatar's original manipulator.
    Trace(TraceArgs),
    /// Run a security-game simulator or a false-accusation harness.
    Secgames(SecgamesArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Human,
    Agent,
}

#[derive(Args, Debug)]
struct RegisterArgs {
    #[arg(long)]
    rid: String,
    #[arg(long, value_enum, default_value = "human")]
    kind: Kind,
    /// Avatar id, required for humans.
    #[arg(long, required_if_eq("kind", "human"))]
    aid: Option<String>,
    /// Avatar appearance text; defaults to the avatar id.
    #[arg(long)]
    description: Option<String>,
}

#[derive(Args, Debug)]
struct LoginArgs {
    #[arg(long)]
    rid: String,
    #[arg(long)]
    aid: String,
    /// Simulated iris capture latency.
    #[arg(long, default_value_t = 0)]
    iris_delay_ms: u64,
}

#[derive(Args, Debug)]
struct DelegateArgs {
    #[arg(long)]
    rid: String,
    #[arg(long)]
    aid: String,
    /// Agent rid of the proxy.
    #[arg(long)]
    proxy: String,
    #[arg(long, default_value_t = 0)]
    iris_delay_ms: u64,
}

#[derive(Args, Debug)]
struct InteractArgs {
    #[arg(long)]
    aid: String,
    /// Agent rid of the verifying party.
    #[arg(long)]
    verifier: String,
    /// Where to write the evidence; defaults to `<state-dir>/evidence/`.
    #[arg(long)]
    evidence_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[arg(long)]
    evidence: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Game {
    OsEuf,
    PsEuf,
    Accuse1,
    Accuse2,
}

#[derive(Args, Debug)]
struct SecgamesArgs {
    #[arg(long, value_enum)]
    game: Game,
    #[arg(long, default_value_t = 100)]
    attempts: usize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_parser = parse_suite)]
    suite: SuiteKind,
    /// Calls per timing batch, or protocol runs.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, value_parser = parse_format, default_value = "table")]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    iris_delay_ms: u64,
}

fn parse_suite(s: &str) -> Result<SuiteKind, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn backend(global: &Global) -> Result<Backend> {
    let chosen = Backend::from_env().map_err(|e| anyhow!("{BACKEND_ENV}: {e}"))?;
    match (chosen, global.insecure_toy_group, std::env::var_os(BACKEND_ENV).is_some()) {
        (Backend::Transparent, false, _) => bail!("the transparent backend needs --insecure-toy-group"),
        (Backend::Production, true, true) => bail!("{BACKEND_ENV}=production conflicts with --insecure-toy-group"),
        (_, true, _) => Ok(Backend::Transparent),
        (b, false, _) => Ok(b),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let b = backend(&cli.global)?;
    if b == Backend::Transparent {
        log::warn!("running on the transparent toy group; nothing here is secure");
    }
    match b {
        Backend::Production => execute(Backend::production(), b, cli),
        Backend::Transparent => execute(Backend::transparent(), b, cli),
    }
}

fn rng_for(seed: Option<u64>) -> ChaCha20Rng {
    seed.map_or_else(ChaCha20Rng::from_entropy, ChaCha20Rng::seed_from_u64)
}

fn print(v: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn execute<S: PairingSuite>(suite: S, b: Backend, cli: Cli) -> Result<()> {
    let g = cli.global;
    let mut rng = rng_for(g.seed);
    let layout = Layout {
        ledger_path: g.ledger_path.clone().unwrap_or_else(|| g.state_dir.join("ledger.bin")),
        trusted_store_path: g.trusted_store_path.clone().unwrap_or_else(|| g.state_dir.join("trusted.bin")),
        state_dir: g.state_dir.clone(),
        authority_token: g.authority_token.clone(),
    };
    match cli.command {
        Command::Secgames(a) => return secgames(&suite, a, g.seed),
        Command::Bench(a) => return bench(suite, b, a, g.seed),
        _ => {}
    }
    let mut world = World::open(suite, b.name(), layout, &mut rng)?;
    let out = match cli.command {
        Command::Register(a) => register(&mut world, a, &mut rng)?,
        Command::Login(a) => cmd_login(&mut world, a, &g.transport, &mut rng)?,
        Command::Delegate(a) => cmd_delegate(&mut world, a, &g.transport, &mut rng)?,
        Command::Interact(a) => interact(&mut world, a, &g.transport, &mut rng)?,
        Command::Trace(a) => cmd_trace(&world, a, g.authority_token.as_deref())?,
        Command::Secgames(_) | Command::Bench(_) => unreachable!("handled above"),
    };
    world.save()?;
    print(&out)
}

fn register<S: PairingSuite>(w: &mut World<S>, a: RegisterArgs, rng: &mut ChaCha20Rng) -> Result<Value> {
    if w.state.users.contains_key(&a.rid) || w.state.agents.contains_key(&a.rid) {
        bail!("{:?} is already registered", a.rid);
    }
    match a.kind {
        Kind::Human => {
            let aid = a.aid.expect("clap requires --aid for humans");
            if w.state.records.contains_key(&aid) {
                bail!("avatar {aid:?} already exists");
            }
            let eye: [u8; 32] = rng.gen();
            let description = AvatarDescription::new()
                .with("name", aid.as_bytes())
                .with("appearance", a.description.unwrap_or_else(|| aid.clone()).into_bytes())
                .to_bytes();
            let user = UserCtx::enroll(w.registry(), &a.rid, eye, description, rng)?;
            w.server.register_avatar(user.mit.sn, aid.as_bytes())?;
            log::info!("registered human {} with avatar {aid}", a.rid);
            w.state.users.insert(
                a.rid.clone(),
                UserEntry {
                    secret: hex::encode(user.keys.secret_bytes(w.suite())),
                    eye_seed: hex::encode(eye),
                    sn: sn_hex(&user.mit.sn),
                    mid: hex::encode(&user.id.mid),
                    description: hex::encode(&user.description),
                },
            );
            Ok(json!({
                "registered": "human",
                "rid": a.rid,
                "mid": hex::encode(&user.id.mid),
                "sn": sn_hex(&user.mit.sn),
                "aid": aid,
            }))
        }
        Kind::Agent => {
            let agent = cps_core::protocols::AgentCtx::enroll(w.registry(), &a.rid, rng)?;
            w.state.agents.insert(
                a.rid.clone(),
                AgentEntry {
                    secret: hex::encode(agent.keys.secret_bytes(w.suite())),
                    sn: sn_hex(&agent.mit.sn),
                },
            );
            Ok(json!({ "registered": "agent", "rid": a.rid, "sn": sn_hex(&agent.mit.sn) }))
        }
    }
}

fn save_transcript<S: PairingSuite>(w: &mut World<S>, kind: &str, t: &ProtocolTranscript) -> Result<String> {
    let n = w.next_run();
    let path = w.layout.artifact("transcripts", &format!("{n:04}-{kind}.bin"))?;
    fs::write(&path, t.to_bytes()).with_context(|| format!("writing {}", path.display()))?;
    Ok(path.display().to_string())
}

fn status(t: &ProtocolTranscript) -> String {
    match cps_core::protocols::abort_code(t) {
        None => "completed".into(),
        Some(c) => format!("aborted: {c:?}"),
    }
}

fn cmd_login<S: PairingSuite>(
    w: &mut World<S>,
    a: LoginArgs,
    transport: &TransportKind,
    rng: &mut ChaCha20Rng,
) -> Result<Value> {
    let mut user = w.user(&a.rid)?;
    user.sensor.delay = Duration::from_millis(a.iris_delay_ms);
    let start = Instant::now();
    let out = login(&user, a.aid.as_bytes(), &w.server, transport, rng)?;
    let elapsed = start.elapsed();
    w.store_human_session(&a.aid, &out.session);
    w.state.proxy_sessions.remove(&a.aid);
    let transcript = save_transcript(w, "login", &out.transcript)?;
    Ok(json!({
        "flow": "login",
        "status": status(&out.transcript),
        "rid": a.rid,
        "aid": a.aid,
        "driver": out.session.avatar.driver_type().to_string(),
        "elapsed_ms": elapsed.as_secs_f64() * 1e3,
        "transcript": transcript,
    }))
}

fn cmd_delegate<S: PairingSuite>(
    w: &mut World<S>,
    a: DelegateArgs,
    transport: &TransportKind,
    rng: &mut ChaCha20Rng,
) -> Result<Value> {
    let mut user = w.user(&a.rid)?;
    user.sensor.delay = Duration::from_millis(a.iris_delay_ms);
    let session = w.human_session(&a.aid)?;
    let proxy = w.agent(&a.proxy)?;
    let start = Instant::now();
    let out = delegate(&user, &session, &proxy, &w.server, transport, rng)?;
    let elapsed = start.elapsed();
    w.store_proxy_session(&a.aid, &a.proxy, &out.session);
    let delegation = save_transcript(w, "delegate", &out.delegation)?;
    let transfer = save_transcript(w, "transfer", &out.transfer)?;
    Ok(json!({
        "flow": "delegate",
        "status": status(&out.transfer),
        "aid": a.aid,
        "proxy": a.proxy,
        "driver": out.session.avatar.driver_type().to_string(),
        "elapsed_ms": elapsed.as_secs_f64() * 1e3,
        "transcripts": [delegation, transfer],
    }))
}

fn interact<S: PairingSuite>(
    w: &mut World<S>,
    a: InteractArgs,
    transport: &TransportKind,
    rng: &mut ChaCha20Rng,
) -> Result<Value> {
    let verifier = w.agent(&a.verifier)?;
    let start = Instant::now();
    let (driver, out) = if w.state.proxy_sessions.contains_key(&a.aid) {
        let (rid, session) = w.proxy_session(&a.aid)?;
        let agent = w.agent(&rid)?;
        let prover = Prover::Proxy { agent: &agent, session: &session };
        (rid, mutual_auth(prover, &verifier, w.registry(), transport, rng)?)
    } else {
        let session = w.human_session(&a.aid)?;
        let rid = w
            .state
            .users
            .iter()
            .find(|(_, u)| u.sn == sn_hex(&session.avatar.sn_u))
            .map(|(rid, _)| rid.clone())
            .ok_or_else(|| anyhow!("owner of {:?} is not in this state directory", a.aid))?;
        let user = w.user(&rid)?;
        let prover = Prover::Human { user: &user, session: &session };
        (rid, mutual_auth(prover, &verifier, w.registry(), transport, rng)?)
    };
    let elapsed = start.elapsed();
    if out.prover_key != out.verifier_key {
        bail!("session keys differ");
    }
    let transcript = save_transcript(w, "mutual", &out.evidence.transcript)?;
    let path = match a.evidence_out {
        Some(p) => p,
        None => {
            let n = w.state.runs;
            w.layout.artifact("evidence", &format!("{n:04}-{}.json", a.aid))?
        }
    };
    let evidence = evidence_json(w.suite(), &out.evidence);
    fs::write(&path, serde_json::to_string_pretty(&evidence)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(json!({
        "flow": "interact",
        "status": status(&out.evidence.transcript),
        "aid": a.aid,
        "driver": out.evidence.avatar.driver_type().to_string(),
        "driven_by": driver,
        "verifier": a.verifier,
        "keys_agree": true,
        "elapsed_ms": elapsed.as_secs_f64() * 1e3,
        "transcript": transcript,
        "evidence": path.display().to_string(),
    }))
}

fn evidence_json<S: PairingSuite>(suite: &S, e: &MutualEvidence<S>) -> Value {
    json!({
        "avatar": hex::encode(e.avatar.to_bytes(suite)),
        "transcript": hex::encode(e.transcript.to_bytes()),
        "image_digest": hex::encode(e.image_digest),
    })
}

fn read_evidence<S: PairingSuite>(suite: &S, v: &Value) -> Result<MutualEvidence<S>> {
    let field = |name: &str| -> Result<Vec<u8>> {
        let s = v[name].as_str().ok_or_else(|| anyhow!("evidence lacks {name}"))?;
        hex::decode(s).with_context(|| format!("evidence {name} is not hex"))
    };
    Ok(MutualEvidence {
        avatar: Avatar::from_bytes(suite, &field("avatar")?).context("decoding evidence avatar")?,
        transcript: ProtocolTranscript::from_bytes(&field("transcript")?).context("decoding evidence transcript")?,
        image_digest: field("image_digest")?
            .try_into()
            .map_err(|_| anyhow!("image digest must be 32 bytes"))?,
    })
}

fn cmd_trace<S: PairingSuite>(w: &World<S>, a: TraceArgs, credential: Option<&str>) -> Result<Value> {
    let text = fs::read_to_string(&a.evidence).with_context(|| format!("reading {}", a.evidence.display()))?;
    let evidence = read_evidence(w.suite(), &serde_json::from_str(&text)?)?;
    let token = credential.map(|t| AuthorityToken(t.to_string()));
    let report = trace(&evidence, w.registry(), token.as_ref()).context("trace rejected the evidence")?;
    Ok(json!({
        "flow": "trace",
        "rid": String::from_utf8_lossy(&report.user_id.rid),
        "mid": hex::encode(&report.user_id.mid),
        "driver": report.driver_type.to_string(),
        "mits_fetched": report.mits_fetched,
        "elapsed_ms": report.elapsed.as_secs_f64() * 1e3,
    }))
}

fn secgames<S: PairingSuite>(suite: &S, a: SecgamesArgs, global_seed: Option<u64>) -> Result<()> {
    let seed = global_seed.unwrap_or(0);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut report = match a.game {
        Game::OsEuf | Game::PsEuf => simulate(suite, a.game, a.attempts, &mut rng),
        Game::Accuse1 | Game::Accuse2 => accuse(suite.clone(), a.game, a.attempts, seed, &mut rng)?,
    };
    report["seed"] = json!(seed);
    report["backend_group"] = json!(suite.params().group_id);
    print(&report)
}

const GAME_QUERIES: usize = 16;
const SWEEP_QUERIES: usize = 100;

/// One honest sweep, then `attempts` runs of the cheating adversary with
/// randomly guessed indices.
fn simulate<S: PairingSuite>(suite: &S, game: Game, attempts: usize, rng: &mut ChaCha20Rng) -> Value {
    let name = if game == Game::OsEuf { "os-euf" } else { "ps-euf" };
    let sweep_cfg = GameConfig {
        q_h: SWEEP_QUERIES + 1,
        j: Some(SWEEP_QUERIES + 1),
        w: Some(1),
    };
    let (inst, _, _) = Instance::random(suite, rng);
    let sweep = if game == Game::OsEuf {
        run_os_euf_simulation(suite, &inst, sweep_cfg, &mut HonestOs { queries: SWEEP_QUERIES }, rng)
    } else {
        run_ps_euf_simulation(suite, &inst, sweep_cfg, &mut HonestPs { queries: SWEEP_QUERIES }, rng)
    };
    let (mut solved, mut wrong, mut miss, mut aborted, mut other) = (0, 0, 0, 0, 0);
    let mut inconsistent = 0;
    for _ in 0..attempts {
        let (inst, x, y) = Instance::random(suite, rng);
        let warmup = rng.gen_range(0..GAME_QUERIES - 1);
        let cfg = GameConfig {
            q_h: GAME_QUERIES,
            j: Some(rng.gen_range(1..=warmup + 1)),
            w: Some(rng.gen_range(1..=warmup + 1)),
        };
        let g = suite.g1_generator();
        let (r, expected) = if game == Game::OsEuf {
            let r = run_os_euf_simulation(suite, &inst, cfg, &mut CheatingOs { a: x, warmup }, rng);
            (r, suite.g1_pow(&suite.g1_pow(&g, &x), &y))
        } else {
            let r = run_ps_euf_simulation(suite, &inst, cfg, &mut CheatingPs { b: y, warmup }, rng);
            let inv = suite.scalar_inverse(&y).expect("instance exponents are non-zero");
            (r, suite.g1_pow(&g, &suite.scalar_mul(&x, &inv)))
        };
        inconsistent += !r.consistent() as usize;
        match r.outcome {
            GameOutcome::Solved(e) if e == expected => solved += 1,
            GameOutcome::Solved(_) => wrong += 1,
            GameOutcome::GuessMiss => miss += 1,
            GameOutcome::Aborted => aborted += 1,
            _ => other += 1,
        }
    }
    json!({
        "game": name,
        "sweep": sweep.to_json(suite, name),
        "attempts": attempts,
        "solved": solved,
        "solved_wrong": wrong,
        "guess_miss": miss,
        "aborted": aborted,
        "other": other,
        "inconsistent_runs": inconsistent,
    })
}

fn accuse<S: PairingSuite>(suite: S, game: Game, attempts: usize, seed: u64, rng: &mut ChaCha20Rng) -> Result<Value> {
    let mut d = Deployment::new(suite, seed);
    let user = d.user("owner", "avatar")?;
    let proxy = d.agent("proxy")?;
    let verifier = d.agent("verifier")?;
    let session = d.login(&user, "avatar")?.session;
    let proxied = d.delegate(&user, &session, &proxy)?.session;
    let ai = d.mutual(Prover::Proxy { agent: &proxy, session: &proxied }, &verifier)?;
    let token = Some(&d.token);
    Ok(match game {
        Game::Accuse1 => false_accusation_case1(&ai.evidence, d.registry(), token, attempts, rng).to_json("accuse1"),
        _ => false_accusation_case2(&ai.evidence, d.registry(), token, &proxy.keys, attempts, rng).to_json("accuse2"),
    })
}

fn bench<S: PairingSuite>(suite: S, b: Backend, a: BenchArgs, seed: Option<u64>) -> Result<()> {
    let config = RunConfig {
        suite: a.suite,
        batch: a.batch,
        iris_delay: Duration::from_millis(a.iris_delay_ms),
        seed: seed.unwrap_or(0),
    };
    let report = cps_bench::run(suite, b, &config)?;
    match &a.out {
        Some(path) => {
            let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            emit_report(&report, a.format, &mut f)?;
        }
        None => emit_report(&report, a.format, &mut io::stdout().lock())?,
    }
    Ok(())
}
