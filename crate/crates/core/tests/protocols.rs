use std::sync::Arc;
use std::thread;

use cps_core::bilinear::{Bls12Suite, PairingSuite, TransparentSuite};
use cps_core::identity::{render_digest, DriverType};
use cps_core::protocols::delegate::{ProxyDelegate, ProxySubmit, ServerTransfer, UserDelegate};
use cps_core::protocols::login::{ServerLogin, UserLogin};
use cps_core::protocols::message::Step;
use cps_core::protocols::{
    audit_mutual_transcript, login, run_over, trace, AbortCode, HumanSession, IrisSensor, Party, ProtocolError, Prover,
    TraceError, TransportKind,
};
use cps_core::registry::{AuthorityToken, RegistryError};
use cps_core::{biometric, cps};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

mod common;

use common::{toy_world, World, Q};

fn aborted<T: std::fmt::Debug>(r: Result<T, ProtocolError>) -> AbortCode {
    match r {
        Err(ProtocolError::Aborted(code)) => code,
        other => panic!("expected an abort, got {other:?}"),
    }
}

#[test]
fn login_produces_a_human_avatar() {
    let mut w = toy_world(1);
    let alice = w.user("alice", "ava");
    let s = w.login(&alice, "ava").unwrap();
    let suite = w.server.suite().clone();
    assert_eq!(s.avatar.driver_type(), DriverType::Human);
    assert_eq!(s.avatar.sn_u, alice.mit.sn);
    assert_eq!(s.avatar.vid.as_ref().unwrap().message, alice.description);
    assert!(w.server.session_valid(b"ava", &s.token));
    assert_eq!(w.server.avatar(b"ava").unwrap(), s.avatar);

    // sigma = h^x_A, and R satisfies h = H(M) * y_A^r with R = g^r.
    let x = alice.keys.secret().0 as u128;
    let h = s.avatar.h.exponent() as u128;
    assert_eq!(s.avatar.sigma.exponent() as u128, h * x % Q as u128);
    let vid = s.avatar.vid.as_ref().unwrap();
    let m = suite.hash_to_g1(&vid.message).exponent() as u128;
    let r = vid.check.exponent() as u128;
    assert_eq!((m + x * r % Q as u128) % Q as u128, h);
}

#[test]
fn login_over_tcp() {
    let mut w = toy_world(2);
    let alice = w.user("alice", "ava");
    let out = login(&alice, b"ava", &w.server, &TransportKind::Tcp("127.0.0.1:0".into()), &mut w.rng).unwrap();
    assert!(out.transcript.is_completed());
    assert_eq!(out.transcript.messages.len(), 4);
}

#[test]
fn replayed_login_response_is_rejected() {
    let mut w = toy_world(3);
    let alice = w.user("alice", "ava");
    let suite = w.server.suite().clone();

    let mut u1 = UserLogin::new(&suite, &alice, b"ava", [1; 32]);
    let mut s1 = ServerLogin::new(&w.server);
    let claim = u1.start().unwrap();
    let challenge = s1.handle(&claim).unwrap().unwrap();
    let response = u1.handle(&challenge).unwrap().unwrap();
    assert_eq!(response.step, Step::LoginResponse);
    s1.handle(&response).unwrap().unwrap();

    // The same response replayed into a second session.
    let mut u2 = UserLogin::new(&suite, &alice, b"ava", [2; 32]);
    let mut s2 = ServerLogin::new(&w.server);
    let claim2 = u2.start().unwrap();
    s2.handle(&claim2).unwrap().unwrap();
    let mut replay = response.clone();
    replay.session_id = claim2.session_id;
    assert_eq!(s2.handle(&replay), Err(AbortCode::ChallengeMismatch));

    // Unmodified, it does not even belong to the session.
    let mut s3 = ServerLogin::new(&w.server);
    let mut u3 = UserLogin::new(&suite, &alice, b"ava", [3; 32]);
    s3.handle(&u3.start().unwrap()).unwrap();
    assert_eq!(s3.handle(&response), Err(AbortCode::WrongSession));
}

#[test]
fn impostor_iris_is_rejected() {
    let mut w = toy_world(4);
    let mut alice = w.user("alice", "ava");
    alice.sensor = IrisSensor::new(biometric::enroll([0xee; 32]));
    assert_eq!(aborted(w.login(&alice, "ava")), AbortCode::IrisMismatch);
    assert!(w.server.avatar(b"ava").is_none());
}

#[test]
fn login_failures_have_distinct_codes() {
    let mut w = toy_world(5);
    let alice = w.user("alice", "ava");
    let mut other = toy_world(6);
    let stranger = other.user("mallory", "mav");
    w.server.register_avatar(stranger.mit.sn, b"mav").unwrap();
    assert_eq!(aborted(w.login(&stranger, "mav")), AbortCode::UnknownSn);
    assert_eq!(aborted(w.login(&alice, "nope")), AbortCode::NoSuchAvatar);
    let bob = w.user("bob", "bav");
    assert_eq!(aborted(w.login(&bob, "ava")), AbortCode::NoSuchAvatar);
}

#[test]
fn delegation_hands_the_avatar_to_the_proxy() {
    let mut w = toy_world(7);
    let alice = w.user("alice", "ava");
    let proxy = w.agent("proxy");
    let s = w.login(&alice, "ava").unwrap();
    let p = w.delegate(&alice, &s, &proxy).unwrap();
    let a = &p.avatar;
    assert_eq!(a.driver_type(), DriverType::AiProxy);
    assert_eq!(a.sn_u, alice.mit.sn);
    assert_eq!(a.sn_p, proxy.mit.sn);
    assert_eq!(a.vid.as_ref().unwrap().message, s.avatar.vid.as_ref().unwrap().message);
    assert_eq!(w.server.avatar(b"ava").unwrap(), *a);

    // Forced offline, and the avatar cannot be taken back by logging in.
    assert!(!w.server.session_valid(b"ava", &s.token));
    assert_eq!(aborted(w.login(&alice, "ava")), AbortCode::AvatarBusy);
    // Nor delegated again from the stale session.
    let other = w.agent("other");
    assert_eq!(aborted(w.delegate(&alice, &s, &other)), AbortCode::AvatarBusy);
}

#[test]
fn proxy_cannot_be_a_delegator() {
    let mut w = toy_world(8);
    let alice = w.user("alice", "ava");
    let proxy = w.agent("proxy");
    let s = w.login(&alice, "ava").unwrap();
    let p = w.delegate(&alice, &s, &proxy).unwrap();
    let forged = HumanSession {
        avatar: p.avatar.clone(),
        pid: p.avatar.pid.clone().unwrap(),
        token: s.token,
    };
    let other = w.agent("other");
    assert_eq!(aborted(w.delegate(&alice, &forged, &other)), AbortCode::NotHumanDriven);
}

#[test]
fn substituted_description_is_rejected_at_transfer() {
    let mut w = toy_world(9);
    let alice = w.user("alice", "ava");
    let proxy = w.agent("proxy");
    let s = w.login(&alice, "ava").unwrap();
    let suite = w.server.suite().clone();
    let reg = w.registry();
    let mut u = UserDelegate::new(reg, &alice, &s, [4; 32]);
    let mut p = ProxyDelegate::new(reg, &proxy, [5; 32]);
    let t = run_over(&TransportKind::Loopback, &mut u, &mut p).unwrap();
    assert!(t.is_completed());
    let honest = p.into_prepared().unwrap();

    // Keeping R_P: the compatibility equation fails for the new message.
    let mut kept = honest.clone();
    kept.vid.as_mut().unwrap().message = b"substituted".to_vec();
    // Recomputing R_P with the proxy key: the tuple verifies, but the
    // description is not the one the user logged in with.
    let mut recomputed = kept.clone();
    recomputed.vid.as_mut().unwrap().check = cps::psig(&suite, &proxy.keys, &honest.h, b"substituted");
    for bad in [kept, recomputed] {
        let mut submit = ProxySubmit::new(&suite, bad, [6; 32]);
        let mut server = ServerTransfer::new(&w.server);
        let t = run_over(&TransportKind::Loopback, &mut submit, &mut server).unwrap();
        assert_eq!(cps_core::protocols::transport::abort_code(&t), Some(AbortCode::TransferRejected));
    }
    assert!(w.server.session_valid(b"ava", &s.token));

    let mut submit = ProxySubmit::new(&suite, honest, [7; 32]);
    let mut server = ServerTransfer::new(&w.server);
    assert!(run_over(&TransportKind::Loopback, &mut submit, &mut server).unwrap().is_completed());
    assert!(!w.server.session_valid(b"ava", &s.token));
}

#[test]
fn worked_key_agreement_example() {
    let s = TransparentSuite::insecure(23).unwrap();
    let g = s.g1_generator();
    let (x_a, x_b, w1, w2) = (s.scalar(6), s.scalar(4), s.scalar(2), s.scalar(5));
    let (y_a, y_b) = (s.g1_pow(&g, &x_a), s.g1_pow(&g, &x_b));
    let (g_w1, g_w2) = (s.g1_pow(&g, &w1), s.g1_pow(&g, &w2));
    let prover = s.g1_mul(&s.g1_pow(&g_w2, &x_a), &s.g1_pow(&y_b, &w1));
    let verifier = s.g1_mul(&s.g1_pow(&y_a, &w2), &s.g1_pow(&g_w1, &x_b));
    assert_eq!(prover, verifier);
    assert_eq!(prover.exponent(), 15);
}

#[test]
fn human_driven_mutual_auth_and_trace() {
    let mut w = toy_world(10);
    let alice = w.user("alice", "ava");
    let bob = w.agent("bob-avatar");
    let s = w.login(&alice, "ava").unwrap();
    let out = w.mutual(Prover::Human { user: &alice, session: &s }, &bob);
    assert_eq!(out.prover_key, out.verifier_key);
    let (x_a, x_b) = (alice.keys.secret().0 as u128, bob.keys.secret().0 as u128);
    let expected = (x_a * out.w2.0 as u128 + x_b * out.w1.0 as u128) % Q as u128;
    assert_eq!(out.prover_key.exponent() as u128, expected);
    assert_eq!(out.evidence.image_digest, render_digest(&alice.description));

    let report = trace(&out.evidence, w.registry(), Some(&w.token)).unwrap();
    assert_eq!(report.user_id, alice.id);
    assert_eq!(report.driver_type, DriverType::Human);
    assert_eq!(report.mits_fetched, 1);
}

#[test]
fn ai_driven_mutual_auth_and_trace() {
    let mut w = toy_world(11);
    let alice = w.user("alice", "ava");
    let proxy = w.agent("proxy");
    let bob = w.agent("bob-avatar");
    let s = w.login(&alice, "ava").unwrap();
    let p = w.delegate(&alice, &s, &proxy).unwrap();
    let out = w.mutual(Prover::Proxy { agent: &proxy, session: &p }, &bob);
    assert_eq!(out.prover_key, out.verifier_key);
    let (x_p, x_b) = (proxy.keys.secret().0 as u128, bob.keys.secret().0 as u128);
    let expected = (x_p * out.w2.0 as u128 + x_b * out.w1.0 as u128) % Q as u128;
    assert_eq!(out.verifier_key.exponent() as u128, expected);

    let report = trace(&out.evidence, w.registry(), Some(&w.token)).unwrap();
    assert_eq!(report.user_id, alice.id, "the original manipulator, not the proxy");
    assert_eq!(report.driver_type, DriverType::AiProxy);
    assert_eq!(report.mits_fetched, 2);

    assert!(matches!(
        trace(&out.evidence, w.registry(), None),
        Err(TraceError::Registry(RegistryError::Unauthorized))
    ));
    assert!(matches!(
        trace(&out.evidence, w.registry(), Some(&AuthorityToken("guess".into()))),
        Err(TraceError::Registry(RegistryError::Unauthorized))
    ));
}

#[test]
fn production_backend_end_to_end() {
    let mut w = World::new(Bls12Suite::setup(128).unwrap(), 12);
    let alice = w.user("alice", "ava");
    let proxy = w.agent("proxy");
    let bob = w.agent("bob-avatar");
    let s = w.login(&alice, "ava").unwrap();
    let human = w.mutual(Prover::Human { user: &alice, session: &s }, &bob);
    assert_eq!(human.prover_key, human.verifier_key);
    assert_eq!(trace(&human.evidence, w.registry(), Some(&w.token)).unwrap().user_id, alice.id);

    let p = w.delegate(&alice, &s, &proxy).unwrap();
    let ai = w.mutual(Prover::Proxy { agent: &proxy, session: &p }, &bob);
    assert_eq!(ai.prover_key, ai.verifier_key);
    let report = trace(&ai.evidence, w.registry(), Some(&w.token)).unwrap();
    assert_eq!((report.user_id, report.mits_fetched), (alice.id.clone(), 2));
}

#[test]
fn tampered_evidence_is_rejected() {
    let mut w = toy_world(13);
    let alice = w.user("alice", "ava");
    let proxy = w.agent("proxy");
    let bob = w.agent("bob-avatar");
    let s = w.login(&alice, "ava").unwrap();
    let p = w.delegate(&alice, &s, &proxy).unwrap();
    let out = w.mutual(Prover::Proxy { agent: &proxy, session: &p }, &bob);
    let ev = out.evidence;
    let tok = Some(&w.token);
    assert!(trace(&ev, w.registry(), tok).is_ok());

    let mut image = ev.clone();
    image.image_digest[0] ^= 1;
    assert!(matches!(trace(&image, w.registry(), tok), Err(TraceError::ImageMismatch)));

    let mut avatar = ev.clone();
    avatar.avatar.aid.push(b'x');
    assert!(matches!(trace(&avatar, w.registry(), tok), Err(TraceError::EvidenceMismatch)));

    let mut swapped = ev.clone();
    swapped.avatar.sn_u = bob.mit.sn;
    assert!(trace(&swapped, w.registry(), tok).is_err());

    // Every single-byte flip of the stored transcript.
    let bytes = ev.transcript.to_bytes();
    for i in 0..bytes.len() {
        let mut b = bytes.clone();
        b[i] ^= 0x01;
        let Ok(t) = cps_core::protocols::ProtocolTranscript::from_bytes(&b) else {
            continue;
        };
        let mut forged = ev.clone();
        forged.transcript = t;
        assert!(trace(&forged, w.registry(), tok).is_err(), "flip at byte {i} accepted");
    }
}

#[test]
fn stored_transcripts_replay_to_the_same_decisions() {
    let mut w = toy_world(14);
    let alice = w.user("alice", "ava");
    let bob = w.agent("bob-avatar");
    let s = w.login(&alice, "ava").unwrap();
    let out = w.mutual(Prover::Human { user: &alice, session: &s }, &bob);
    let stored = cps_core::protocols::ProtocolTranscript::from_bytes(&out.evidence.transcript.to_bytes()).unwrap();
    let decisions = audit_mutual_transcript(w.registry(), &stored);
    assert_eq!(decisions.len(), 4);
    assert!(decisions.iter().all(|(_, ok)| *ok));

    // An impostor at the iris step: accepted claim, rejected response.
    let mut impostor = alice.clone();
    impostor.sensor = IrisSensor::new(biometric::enroll([0x42; 32]));
    let mut a = cps_core::protocols::mutual::ProverParty::new(
        w.registry(),
        Prover::Human { user: &impostor, session: &s },
        [8; 32],
    );
    let mut b = cps_core::protocols::mutual::VerifierParty::new(w.registry(), &bob, [9; 32]);
    let t = run_over(&TransportKind::Loopback, &mut a, &mut b).unwrap();
    assert_eq!(cps_core::protocols::transport::abort_code(&t), Some(AbortCode::IrisMismatch));
    let decisions: Vec<bool> = audit_mutual_transcript(w.registry(), &t).into_iter().map(|(_, ok)| ok).collect();
    assert_eq!(decisions, vec![true, true, false, false]);
}

#[test]
fn concurrent_logins_on_one_server() {
    let mut w = toy_world(15);
    let users: Vec<_> = (0..8).map(|i| w.user(&format!("u{i}"), &format!("av{i}"))).collect();
    let server = Arc::new(w.server);
    let handles: Vec<_> = users
        .into_iter()
        .enumerate()
        .map(|(i, u)| {
            let server = Arc::clone(&server);
            thread::spawn(move || {
                let mut rng = ChaCha20Rng::seed_from_u64(100 + i as u64);
                let aid = format!("av{i}");
                let s = login(&u, aid.as_bytes(), &server, &TransportKind::Loopback, &mut rng).unwrap();
                server.session_valid(aid.as_bytes(), &s.session.token)
            })
        })
        .collect();
    for h in handles {
        assert!(h.join().unwrap());
    }
}

#[test]
fn duplicate_avatar_registration_fails() {
    let mut w = toy_world(16);
    let alice = w.user("alice", "ava");
    assert!(matches!(
        w.server.register_avatar(alice.mit.sn, b"ava"),
        Err(ProtocolError::AvatarExists(_))
    ));
}

#[test]
fn server_records_survive_a_restart() {
    use std::sync::Arc;

    use cps_core::protocols::{delegate, login, AgentCtx, Server, TransportKind, UserCtx};
    use cps_core::registry::{AuthorityToken, Registry};
    use rand::SeedableRng;

    let suite = cps_core::bilinear::TransparentSuite::insecure(Q).unwrap();
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(90);
    let idp = cps_core::cps::keygen(&suite, &mut rng);
    let registry = Arc::new(Registry::in_memory(suite, idp, AuthorityToken("t".into())));
    let first = Server::new(registry.clone());
    let user = UserCtx::enroll(&registry, "alice", [5; 32], b"desc".to_vec(), &mut rng).unwrap();
    let proxy = AgentCtx::enroll(&registry, "bot", &mut rng).unwrap();
    first.register_avatar(user.mit.sn, b"ava").unwrap();
    first.register_avatar(user.mit.sn, b"spare").unwrap();
    let session = login(&user, b"ava", &first, &TransportKind::Loopback, &mut rng).unwrap().session;

    let records = first.records();
    assert_eq!(records.iter().map(|r| r.aid.as_slice()).collect::<Vec<_>>(), [&b"ava"[..], b"spare"]);
    assert_eq!(records[0].token, Some(session.token));
    assert!(records[1].avatar.is_none());

    let second = Server::new(registry.clone());
    for r in records.clone() {
        second.restore(r).unwrap();
    }
    assert_eq!(second.records(), records);
    assert!(second.session_valid(b"ava", &session.token));
    assert!(second.restore(records[0].clone()).is_err());
    let out = delegate(&user, &session, &proxy, &second, &TransportKind::Loopback, &mut rng).unwrap();
    assert_eq!(second.avatar(b"ava"), Some(out.session.avatar));

    // A stored avatar must match its record.
    let third = Server::new(registry);
    let mut wrong = records[0].clone();
    wrong.aid = b"elsewhere".to_vec();
    assert!(third.restore(wrong).is_err());
}
