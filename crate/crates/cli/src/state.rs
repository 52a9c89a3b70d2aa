//! What survives between invocations: key material, avatar records and
//! sessions, kept as one JSON file of hex-encoded canonical encodings.
//!
//! The ledger and trusted store live in their own files and are owned by
//! the registry.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use cps_core::biometric;
use cps_core::bilinear::PairingSuite;
use cps_core::cps::KeyPair;
use cps_core::identity::{Avatar, Pid, SerialNumber, UserId};
use cps_core::protocols::{AgentCtx, AvatarRecord, HumanSession, IrisSensor, ProxySession, Server, UserCtx};
use cps_core::registry::{AuthorityToken, Registry, RegistryConfig};
use serde::{Deserialize, Serialize};

pub const STATE_FILE: &str = "state.json";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UserEntry {
    pub secret: String,
    pub eye_seed: String,
    pub sn: String,
    pub mid: String,
    pub description: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AgentEntry {
    pub secret: String,
    pub sn: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecordEntry {
    pub owner: String,
    pub avatar: Option<String>,
    pub token: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HumanSessionEntry {
    pub avatar: String,
    pub pid: String,
    pub token: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProxySessionEntry {
    pub agent: String,
    pub avatar: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StateFile {
    pub backend: String,
    pub group_id: String,
    pub authority_token: String,
    pub idp_secret: String,
    pub users: BTreeMap<String, UserEntry>,
    pub agents: BTreeMap<String, AgentEntry>,
    /// Server avatar records by avatar id.
    pub records: BTreeMap<String, RecordEntry>,
    /// Live human sessions by avatar id.
    pub human_sessions: BTreeMap<String, HumanSessionEntry>,
    /// Proxy sessions by avatar id.
    pub proxy_sessions: BTreeMap<String, ProxySessionEntry>,
    /// Sequence number for transcript and evidence file names.
    pub runs: u64,
}

/// Paths and credential shared by every protocol subcommand.
#[derive(Clone, Debug)]
pub struct Layout {
    pub state_dir: PathBuf,
    pub ledger_path: PathBuf,
    pub trusted_store_path: PathBuf,
    pub authority_token: Option<String>,
}

impl Layout {
    pub fn state_file(&self) -> PathBuf {
        self.state_dir.join(STATE_FILE)
    }

    pub fn artifact(&self, dir: &str, name: &str) -> Result<PathBuf> {
        let d = self.state_dir.join(dir);
        fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
        Ok(d.join(name))
    }
}

fn unhex(field: &str, s: &str) -> Result<Vec<u8>> {
    hex::decode(s).with_context(|| format!("{field} is not hex"))
}

fn sn_from_hex(s: &str) -> Result<SerialNumber> {
    let bytes: [u8; 16] = unhex("serial number", s)?
        .try_into()
        .map_err(|_| anyhow!("serial number must be 16 bytes"))?;
    Ok(SerialNumber(bytes))
}

fn array32(field: &str, s: &str) -> Result<[u8; 32]> {
    unhex(field, s)?.try_into().map_err(|_| anyhow!("{field} must be 32 bytes"))
}

/// A loaded deployment: the registry, the server with its records
/// restored, and the state file it came from.
pub struct World<S: PairingSuite> {
    pub layout: Layout,
    pub state: StateFile,
    pub server: Server<S>,
}

impl<S: PairingSuite> World<S> {
    /// Opens the deployment under `layout`, creating it on first use.
    /// A new deployment needs an authority token; an existing one keeps
    /// the token it was created with.
    pub fn open(suite: S, backend: &str, layout: Layout, rng: &mut dyn rand::RngCore) -> Result<Self> {
        fs::create_dir_all(&layout.state_dir)
            .with_context(|| format!("creating state directory {}", layout.state_dir.display()))?;
        let path = layout.state_file();
        let (state, idp) = if path.exists() {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let state: StateFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if state.backend != backend || state.group_id != suite.params().group_id {
                bail!(
                    "state in {} was created for the {} backend ({}); rerun with the matching backend",
                    layout.state_dir.display(),
                    state.backend,
                    state.group_id
                );
            }
            let idp = keypair(&suite, "idp secret", &state.idp_secret)?;
            (state, idp)
        } else {
            let token = layout
                .authority_token
                .clone()
                .ok_or_else(|| anyhow!("a new deployment needs --authority-token"))?;
            let idp = cps_core::cps::keygen(&suite, rng);
            let state = StateFile {
                backend: backend.to_string(),
                group_id: suite.params().group_id.clone(),
                authority_token: token,
                idp_secret: hex::encode(idp.secret_bytes(&suite)),
                ..StateFile::default()
            };
            (state, idp)
        };
        let config = RegistryConfig {
            ledger_path: Some(layout.ledger_path.clone()),
            trusted_store_path: Some(layout.trusted_store_path.clone()),
            authority_token: AuthorityToken(state.authority_token.clone()),
        };
        let registry = Registry::open(suite, idp, &config).context("opening registry")?;
        let server = Server::new(Arc::new(registry));
        for (aid, r) in &state.records {
            let avatar = match &r.avatar {
                Some(a) => Some(avatar(server.suite(), a)?),
                None => None,
            };
            let token = match &r.token {
                Some(t) => Some(
                    unhex("session token", t)?
                        .try_into()
                        .map_err(|_| anyhow!("session token must be 16 bytes"))?,
                ),
                None => None,
            };
            server.restore(AvatarRecord {
                aid: aid.as_bytes().to_vec(),
                owner: sn_from_hex(&r.owner)?,
                avatar,
                token,
            })?;
        }
        Ok(World { layout, state, server })
    }

    pub fn suite(&self) -> &S {
        self.server.suite()
    }

    pub fn registry(&self) -> &Registry<S> {
        self.server.registry()
    }

    /// Writes the state file, with server records taken afresh.
    pub fn save(&mut self) -> Result<()> {
        let suite = self.server.suite();
        self.state.records = self
            .server
            .records()
            .into_iter()
            .map(|r| {
                (
                    String::from_utf8_lossy(&r.aid).into_owned(),
                    RecordEntry {
                        owner: hex::encode(r.owner.0),
                        avatar: r.avatar.map(|a| hex::encode(a.to_bytes(suite))),
                        token: r.token.map(hex::encode),
                    },
                )
            })
            .collect();
        let path = self.layout.state_file();
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&self.state)?).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &path).with_context(|| format!("replacing {}", path.display()))?;
        Ok(())
    }

    pub fn next_run(&mut self) -> u64 {
        self.state.runs += 1;
        self.state.runs
    }

    pub fn user(&self, rid: &str) -> Result<UserCtx<S>> {
        let e = self.state.users.get(rid).ok_or_else(|| anyhow!("no registered human {rid:?}"))?;
        let suite = self.suite();
        let eye = biometric::enroll(array32("eye seed", &e.eye_seed)?);
        Ok(UserCtx {
            id: UserId::new(rid, unhex("mid", &e.mid)?)?,
            keys: keypair(suite, "user secret", &e.secret)?,
            mit: self.registry().get_mit(&sn_from_hex(&e.sn)?)?,
            sensor: IrisSensor::new(eye),
            description: unhex("description", &e.description)?,
        })
    }

    pub fn agent(&self, rid: &str) -> Result<AgentCtx<S>> {
        let e = self.state.agents.get(rid).ok_or_else(|| anyhow!("no registered agent {rid:?}"))?;
        let keys = keypair(self.suite(), "agent secret", &e.secret)?;
        Ok(AgentCtx::new(keys, self.registry().get_mit(&sn_from_hex(&e.sn)?)?))
    }

    pub fn human_session(&self, aid: &str) -> Result<HumanSession<S>> {
        let e = self
            .state
            .human_sessions
            .get(aid)
            .ok_or_else(|| anyhow!("no human session for avatar {aid:?}; run login first"))?;
        let suite = self.suite();
        Ok(HumanSession {
            avatar: avatar(suite, &e.avatar)?,
            pid: Pid::from_bytes(suite, &unhex("pid", &e.pid)?).context("decoding stored pid")?,
            token: unhex("session token", &e.token)?
                .try_into()
                .map_err(|_| anyhow!("session token must be 16 bytes"))?,
        })
    }

    pub fn store_human_session(&mut self, aid: &str, s: &HumanSession<S>) {
        let suite = self.server.suite();
        self.state.human_sessions.insert(
            aid.to_string(),
            HumanSessionEntry {
                avatar: hex::encode(s.avatar.to_bytes(suite)),
                pid: hex::encode(s.pid.to_bytes(suite)),
                token: hex::encode(s.token),
            },
        );
    }

    /// The proxy session for `aid` and the rid of the agent holding it.
    pub fn proxy_session(&self, aid: &str) -> Result<(String, ProxySession<S>)> {
        let e = self
            .state
            .proxy_sessions
            .get(aid)
            .ok_or_else(|| anyhow!("avatar {aid:?} is not delegated; run delegate first"))?;
        Ok((e.agent.clone(), ProxySession { avatar: avatar(self.suite(), &e.avatar)? }))
    }

    pub fn store_proxy_session(&mut self, aid: &str, agent: &str, s: &ProxySession<S>) {
        let bytes = s.avatar.to_bytes(self.server.suite());
        self.state.human_sessions.remove(aid);
        self.state.proxy_sessions.insert(
            aid.to_string(),
            ProxySessionEntry {
                agent: agent.to_string(),
                avatar: hex::encode(bytes),
            },
        );
    }
}

fn keypair<S: PairingSuite>(suite: &S, field: &str, hex_secret: &str) -> Result<KeyPair<S>> {
    let sk = suite
        .scalar_from_bytes(&unhex(field, hex_secret)?)
        .with_context(|| format!("decoding {field}"))?;
    Ok(KeyPair::from_secret(suite, sk)?)
}

fn avatar<S: PairingSuite>(suite: &S, hex_bytes: &str) -> Result<Avatar<S>> {
    Avatar::from_bytes(suite, &unhex("avatar", hex_bytes)?).context("decoding stored avatar")
}

pub fn sn_hex(sn: &SerialNumber) -> String {
    hex::encode(sn.0)
}
