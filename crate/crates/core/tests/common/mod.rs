#![allow(dead_code)]

use std::sync::Arc;

use cps_core::bilinear::{PairingSuite, TransparentSuite};
use cps_core::identity::AvatarDescription;
use cps_core::protocols::{
    delegate, login, mutual_auth, AgentCtx, HumanSession, MutualOutcome, ProtocolError, Prover, ProxySession, Server,
    TransportKind, UserCtx,
};
use cps_core::registry::{AuthorityToken, Registry};
use cps_core::cps;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const Q: u64 = (1 << 61) - 1;

pub struct World<S: PairingSuite> {
    pub server: Server<S>,
    pub token: AuthorityToken,
    pub rng: ChaCha20Rng,
}

impl<S: PairingSuite> World<S> {
    pub fn new(suite: S, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let idp = cps::keygen(&suite, &mut rng);
        let token = AuthorityToken("authority".into());
        let registry = Registry::in_memory(suite, idp, token.clone());
        registry.reseed(seed + 1);
        let server = Server::new(Arc::new(registry));
        server.reseed(seed + 2);
        World { server, token, rng }
    }

    pub fn registry(&self) -> &Registry<S> {
        self.server.registry()
    }

    pub fn user(&mut self, name: &str, aid: &str) -> UserCtx<S> {
        let eye: [u8; 32] = self.rng.gen();
        let desc = AvatarDescription::new()
            .with("skin", format!("{name}-skin"))
            .with("model", vec![1, 2, 3])
            .to_bytes();
        let user = UserCtx::enroll(self.server.registry(), name, eye, desc, &mut self.rng).unwrap();
        self.server.register_avatar(user.mit.sn, aid.as_bytes()).unwrap();
        user
    }

    pub fn agent(&mut self, name: &str) -> AgentCtx<S> {
        AgentCtx::enroll(self.server.registry(), name, &mut self.rng).unwrap()
    }

    pub fn login(&mut self, user: &UserCtx<S>, aid: &str) -> Result<HumanSession<S>, ProtocolError> {
        login(user, aid.as_bytes(), &self.server, &TransportKind::Loopback, &mut self.rng).map(|o| o.session)
    }

    pub fn delegate(&mut self, user: &UserCtx<S>, s: &HumanSession<S>, p: &AgentCtx<S>) -> Result<ProxySession<S>, ProtocolError> {
        delegate(user, s, p, &self.server, &TransportKind::Loopback, &mut self.rng).map(|o| o.session)
    }

    pub fn mutual(&mut self, prover: Prover<'_, S>, verifier: &AgentCtx<S>) -> MutualOutcome<S> {
        mutual_auth(prover, verifier, self.server.registry(), &TransportKind::Loopback, &mut self.rng).unwrap()
    }
}

pub fn toy_world(seed: u64) -> World<TransparentSuite> {
    World::new(TransparentSuite::insecure(Q).unwrap(), seed)
}
