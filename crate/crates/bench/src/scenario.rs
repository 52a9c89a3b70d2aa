//! A self-contained deployment for scripted protocol runs: one registry,
//! one avatar server and a seeded RNG.

use std::sync::Arc;
use std::time::Duration;

use cps_core::bilinear::PairingSuite;
use cps_core::cps;
use cps_core::identity::AvatarDescription;
use cps_core::protocols::{
    delegate, login, mutual_auth, AgentCtx, DelegateOutcome, HumanSession, LoginOutcome, MutualOutcome,
    ProtocolError, Prover, Server, TransportKind, UserCtx,
};
use cps_core::registry::{AuthorityToken, Registry, RegistryError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("trace failed: {0}")]
    Trace(String),
}

pub struct Deployment<S: PairingSuite> {
    pub server: Server<S>,
    pub token: AuthorityToken,
    pub rng: ChaCha20Rng,
    pub transport: TransportKind,
    /// Capture latency given to every enrolled user's sensor.
    pub iris_delay: Duration,
}

impl<S: PairingSuite> Deployment<S> {
    /// An in-memory deployment; every random choice derives from `seed`.
    pub fn new(suite: S, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let idp = cps::keygen(&suite, &mut rng);
        let token = AuthorityToken(format!("authority-{seed}"));
        let registry = Registry::in_memory(suite, idp, token.clone());
        registry.reseed(rng.gen());
        let server = Server::new(Arc::new(registry));
        server.reseed(rng.gen());
        Deployment {
            server,
            token,
            rng,
            transport: TransportKind::Loopback,
            iris_delay: Duration::ZERO,
        }
    }

    pub fn with_iris_delay(mut self, delay: Duration) -> Self {
        self.iris_delay = delay;
        self
    }

    pub fn registry(&self) -> &Registry<S> {
        self.server.registry()
    }

    pub fn suite(&self) -> &S {
        self.server.suite()
    }

    /// Registers a human user and a server-side avatar `aid` owned by them.
    pub fn user(&mut self, rid: &str, aid: &str) -> Result<UserCtx<S>, ScenarioError> {
        let eye: [u8; 32] = self.rng.gen();
        let description = AvatarDescription::new()
            .with("name", aid.as_bytes())
            .with("mesh", self.rng.gen::<[u8; 16]>().to_vec())
            .to_bytes();
        let mut user = UserCtx::enroll(self.server.registry(), rid, eye, description, &mut self.rng)?;
        user.sensor.delay = self.iris_delay;
        self.server.register_avatar(user.mit.sn, aid.as_bytes())?;
        Ok(user)
    }

    pub fn agent(&mut self, rid: &str) -> Result<AgentCtx<S>, ScenarioError> {
        Ok(AgentCtx::enroll(self.server.registry(), rid, &mut self.rng)?)
    }

    pub fn login(&mut self, user: &UserCtx<S>, aid: &str) -> Result<LoginOutcome<S>, ScenarioError> {
        Ok(login(user, aid.as_bytes(), &self.server, &self.transport, &mut self.rng)?)
    }

    pub fn delegate(
        &mut self,
        user: &UserCtx<S>,
        session: &HumanSession<S>,
        proxy: &AgentCtx<S>,
    ) -> Result<DelegateOutcome<S>, ScenarioError> {
        Ok(delegate(user, session, proxy, &self.server, &self.transport, &mut self.rng)?)
    }

    pub fn mutual(&mut self, prover: Prover<'_, S>, verifier: &AgentCtx<S>) -> Result<MutualOutcome<S>, ScenarioError> {
        Ok(mutual_auth(prover, verifier, self.server.registry(), &self.transport, &mut self.rng)?)
    }
}
