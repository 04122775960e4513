mod common;

use common::*;
use phc_core::issuance::verify_ring;
use phc_core::GroupParams;
use phc_net::codes;
use phc_net::protocol::*;
use phc_net::{IssuerNode, ServiceNode};
use serde_json::json;

fn fresh() -> (GroupParams, IssuerNode, phc_core::GroupElement) {
    let params = GroupParams::test256();
    let state = issuer_state("issuer-a", &params, 1);
    let key = state.public_key().clone();
    (params, IssuerNode::in_memory(state), key)
}

#[test]
fn duplicate_enrollment_is_409() {
    let (params, node, _) = fresh();
    let mut r = rng(2);
    let alice = Holder::new("alice", &params, &mut r);
    let first = node.handle("POST", paths::ENROLL, &enroll_body(&alice.request(None), &params));
    assert_eq!(first.status, 200);
    let again = Holder::new("alice", &params, &mut r);
    let second = node.handle("POST", paths::ENROLL, &enroll_body(&again.request(None), &params));
    assert_eq!(second.status, 409);
    assert_eq!(code(&second), codes::DUPLICATE_ENROLLMENT);

    let same_key = node.handle("POST", paths::ENROLL, &enroll_body(&alice.request(None), &params));
    assert_eq!(code(&same_key), codes::DUPLICATE_ENROLLMENT);
}

#[test]
fn ring_round_trip_verifies() {
    let (params, node, key) = fresh();
    let mut r = rng(3);
    for i in 0..6 {
        let h = Holder::new(&format!("p{i}"), &params, &mut r);
        assert_eq!(node.handle("POST", paths::ENROLL, &enroll_body(&h.request(None), &params)).status, 200);
    }
    let current = parse_ring(&node.handle("GET", "/ring/current", b""), &params);
    assert_eq!(current.len(), 6);
    assert!(verify_ring(&params, &key, &current));
    let by_epoch = parse_ring(&node.handle("GET", "/ring/0", b""), &params);
    assert_eq!(by_epoch, current);

    let info: IssuerKeyBody = open(&node.handle("GET", paths::ISSUER_KEY, b""), kinds::ISSUER_KEY);
    assert_eq!(info.public_key, params.element_hex(&key));
    assert_eq!(info.params, "test-256");
}

#[test]
fn malformed_requests_are_400() {
    let (params, node, _) = fresh();
    let mut r = rng(4);
    let h = Holder::new("bob", &params, &mut r);
    let mut doc = serde_json::to_value(phc_core::wire::Wire::to_doc(&h.request(None), &params)).unwrap();

    let mut bad_hex = doc.clone();
    bad_hex["public_key"] = json!("zz");
    let reply = node.handle("POST", paths::ENROLL, &envelope(kinds::ENROLLMENT_REQUEST, &bad_hex));
    assert_eq!((reply.status, code(&reply).as_str()), (400, codes::MALFORMED));

    let upper = doc["public_key"].as_str().unwrap().to_uppercase();
    doc["public_key"] = json!(upper);
    let reply = node.handle("POST", paths::ENROLL, &envelope(kinds::ENROLLMENT_REQUEST, &doc));
    assert_eq!((reply.status, code(&reply).as_str()), (400, codes::MALFORMED));

    let reply = node.handle("POST", paths::ENROLL, b"{not json");
    assert_eq!((reply.status, code(&reply).as_str()), (400, codes::MALFORMED));

    let v2 = json!({"version": 2, "kind": kinds::ENROLLMENT_REQUEST, "body": {}});
    let reply = node.handle("POST", paths::ENROLL, v2.to_string().as_bytes());
    assert_eq!((reply.status, code(&reply).as_str()), (400, codes::UNSUPPORTED_VERSION));

    let wrong_kind = node.handle("POST", paths::ENROLL, &envelope("ring", &json!({})));
    assert_eq!(code(&wrong_kind), codes::MALFORMED);

    let reply = node.handle("POST", paths::REVOKE, &revoke_body(b"x", "bob"));
    assert_eq!(code(&reply), codes::UNKNOWN_RECOVERY_CODE);
    let odd = envelope(kinds::REVOCATION_REQUEST, &json!({"recovery_code": "abc", "root_id": "bob"}));
    assert_eq!(code(&node.handle("POST", paths::REVOKE, &odd)), codes::MALFORMED);

    assert_eq!(code(&node.handle("GET", "/ring/x1", b"")), codes::MALFORMED);
    let unknown = node.handle("GET", "/ring/9", b"");
    assert_eq!((unknown.status, code(&unknown).as_str()), (404, codes::UNKNOWN_EPOCH));
    assert_eq!(code(&node.handle("GET", "/nowhere", b"")), codes::NOT_FOUND);
    assert_eq!(node.handle("GET", paths::ENROLL, b"").status, 405);
}

#[test]
fn revocation_ticket_and_epochs() {
    let (params, node, _) = fresh();
    let mut r = rng(5);
    let h = Holder::new("carol", &params, &mut r);
    node.handle("POST", paths::ENROLL, &enroll_body(&h.request(None), &params));
    let rev: RevocationBody = open(&node.handle("POST", paths::REVOKE, &revoke_body(&h.code, "carol")), kinds::REVOCATION);
    let second = node.handle("POST", paths::REVOKE, &revoke_body(&h.code, "carol"));
    assert_eq!(code(&second), codes::UNKNOWN_RECOVERY_CODE);

    let ticket: [u8; 16] = phc_core::encoding::hex_array(&rev.ticket).unwrap();
    let fresh_key = Holder::new("carol", &params, &mut r);
    let ok = node.handle("POST", paths::ENROLL, &enroll_body(&fresh_key.request(Some(ticket)), &params));
    assert_eq!(ok.status, 200);
    let reused = Holder::new("carol", &params, &mut r);
    let bad = node.handle("POST", paths::ENROLL, &enroll_body(&reused.request(Some(ticket)), &params));
    assert_eq!((bad.status, code(&bad).as_str()), (403, codes::INVALID_TICKET));

    let again = node.handle("POST", paths::REVOKE, &revoke_body(&fresh_key.code, "carol"));
    assert_eq!(code(&again), codes::ALREADY_REVOKED_THIS_EPOCH);

    let epoch: EpochBody = open(&node.handle("POST", paths::ADVANCE_EPOCH, b""), kinds::EPOCH);
    assert_eq!(epoch.epoch, 1);
    assert_eq!(node.current_epoch(), 1);
    assert!(parse_ring(&node.handle("GET", "/ring/current", b""), &params).is_empty());
    assert_eq!(parse_ring(&node.handle("GET", "/ring/0", b""), &params).len(), 1);
}

struct World {
    params: GroupParams,
    issuer: IssuerNode,
    service: ServiceNode,
    rng: rand_chacha::ChaCha20Rng,
}

fn world(k: u32) -> World {
    let params = GroupParams::test256();
    let state = issuer_state("issuer-a", &params, 10);
    let key = state.public_key().clone();
    let service = ServiceNode::in_memory(setup("forum", &[("issuer-a", &key)], &params, k), [9; 32]).unwrap();
    World {
        params,
        issuer: IssuerNode::in_memory(state),
        service,
        rng: rng(11),
    }
}

impl World {
    fn enroll(&mut self, root: &str) -> phc_core::wallet::Credential {
        let h = Holder::new(root, &self.params, &mut self.rng);
        let reply = self.issuer.handle("POST", paths::ENROLL, &enroll_body(&h.request(None), &self.params));
        h.credential(&self.params, &open(&reply, kinds::ENROLLED))
    }

    fn sync_ring(&self) -> phc_core::issuance::EpochRing {
        let ring = parse_ring(&self.issuer.handle("GET", "/ring/current", b""), &self.params);
        let reply = self.service.handle("POST", paths::INSTALL_RING, &ring_body(&ring, &self.params));
        let _: RingInstalledBody = open(&reply, kinds::RING_INSTALLED);
        ring
    }

    fn register(&mut self, cred: &phc_core::wallet::Credential, ring: &phc_core::issuance::EpochRing) -> Reply {
        let challenge = nonce(&self.service.handle("GET", paths::CHALLENGE, b""));
        let body = register_body(cred, ring, "forum", challenge, &mut self.rng);
        self.service.handle("POST", paths::REGISTER, &body)
    }
}

#[test]
fn registration_flow_and_error_codes() {
    let mut w = world(1);
    let alice = w.enroll("alice");
    let bob = w.enroll("bob");

    let challenge = nonce(&w.service.handle("GET", paths::CHALLENGE, b""));
    let ring = parse_ring(&w.issuer.handle("GET", "/ring/current", b""), &w.params);
    let body = register_body(&alice, &ring, "forum", challenge, &mut w.rng);
    let missing = w.service.handle("POST", paths::REGISTER, &body);
    assert_eq!((missing.status, code(&missing).as_str()), (503, codes::MISSING_RING));

    w.sync_ring();
    let account: AccountBody = open(&w.service.handle("POST", paths::REGISTER, &body), kinds::ACCOUNT);
    assert!(account.account_id.starts_with("acct-"));
    let replay = w.service.handle("POST", paths::REGISTER, &body);
    assert_eq!((replay.status, code(&replay).as_str()), (409, codes::REPLAYED_CHALLENGE));

    let limit = w.register(&alice, &ring);
    assert_eq!((limit.status, code(&limit).as_str()), (403, codes::LIMIT_REACHED));

    let bob_ok: AccountBody = open(&w.register(&bob, &ring), kinds::ACCOUNT);
    assert_ne!(bob_ok.tag, account.tag);
    let s: SuspensionBody = open(&w.service.handle("POST", paths::SUSPEND, &suspend_body("issuer-a", &bob_ok.tag)), kinds::SUSPENDED);
    assert_eq!(s.tag, bob_ok.tag);

    let unknown = w.service.handle("POST", paths::SUSPEND, &suspend_body("issuer-z", &bob_ok.tag));
    assert_eq!(code(&unknown), codes::UNKNOWN_ISSUER);

    // Wrong audience and a proof made for another service.
    let challenge = nonce(&w.service.handle("GET", paths::CHALLENGE, b""));
    let wrong = register_body(&alice, &ring, "elsewhere", challenge, &mut w.rng);
    assert_eq!(code(&w.service.handle("POST", paths::REGISTER, &wrong)), codes::WRONG_AUDIENCE);
    let mut doc: serde_json::Value = serde_json::from_slice(&wrong).unwrap();
    doc["body"]["service_id"] = json!("forum");
    let forged = w.service.handle("POST", paths::REGISTER, doc.to_string().as_bytes());
    assert_eq!((forged.status, code(&forged).as_str()), (401, codes::INVALID_PROOF));
}

#[test]
fn suspended_tag_cannot_register_again() {
    let mut w = world(3);
    let carol = w.enroll("carol");
    let ring = w.sync_ring();
    let account: AccountBody = open(&w.register(&carol, &ring), kinds::ACCOUNT);
    w.service.handle("POST", paths::SUSPEND, &suspend_body("issuer-a", &account.tag));
    let reply = w.register(&carol, &ring);
    assert_eq!((reply.status, code(&reply).as_str()), (403, codes::SUSPENDED_CREDENTIAL));
}

#[test]
fn ring_installation_rules() {
    let mut w = world(1);
    let first = w.enroll("a");
    let ring = w.sync_ring();

    let mut tampered = ring.clone();
    tampered.cohorts[0].push(w.params.generator());
    let reply = w.service.handle("POST", paths::INSTALL_RING, &ring_body(&tampered, &w.params));
    assert_eq!(code(&reply), codes::BAD_RING_SIGNATURE);

    let other = issuer_state("issuer-b", &w.params, 99).current_ring_snapshot();
    let reply = w.service.handle("POST", paths::INSTALL_RING, &ring_body(&other, &w.params));
    assert_eq!(code(&reply), codes::UNKNOWN_ISSUER);

    let mut doc: serde_json::Value = serde_json::from_slice(&ring_body(&ring, &w.params)).unwrap();
    doc["body"]["params"] = json!("modp-2048");
    let reply = w.service.handle("POST", paths::INSTALL_RING, doc.to_string().as_bytes());
    assert_eq!(code(&reply), codes::PARAMS_MISMATCH);

    w.issuer.handle("POST", paths::ADVANCE_EPOCH, b"");
    w.enroll("a");
    w.sync_ring();
    assert_eq!(w.service.ring_epoch("issuer-a"), Some(1));
    let stale = w.service.handle("POST", paths::INSTALL_RING, &ring_body(&ring, &w.params));
    assert_eq!(code(&stale), codes::STALE_EPOCH);

    // A presentation against the previous epoch's ring.
    let reply = w.register(&first, &ring);
    assert_eq!((reply.status, code(&reply).as_str()), (409, codes::STALE_EPOCH));
}

#[test]
fn delegation_verify_endpoint() {
    let mut w = world(1);
    let dana = w.enroll("dana");
    let ring = w.sync_ring();
    let agent = phc_core::KeyPair::generate(&w.params, &mut w.rng);

    let early = delegation_body(&dana, "forum", agent.public(), 10, 5, &mut w.rng);
    assert_eq!(code(&w.service.handle("POST", paths::DELEGATION_VERIFY, &early)), codes::UNKNOWN_PRINCIPAL);

    let account: AccountBody = open(&w.register(&dana, &ring), kinds::ACCOUNT);
    let status: DelegationStatusBody = open(&w.service.handle("POST", paths::DELEGATION_VERIFY, &early), kinds::DELEGATION_STATUS);
    assert!(status.valid);
    let late = delegation_body(&dana, "forum", agent.public(), 10, 11, &mut w.rng);
    let status: DelegationStatusBody = open(&w.service.handle("POST", paths::DELEGATION_VERIFY, &late), kinds::DELEGATION_STATUS);
    assert!(!status.valid);

    w.service.handle("POST", paths::SUSPEND, &suspend_body("issuer-a", &account.tag));
    let reply = w.service.handle("POST", paths::DELEGATION_VERIFY, &early);
    assert_eq!((reply.status, code(&reply).as_str()), (403, codes::SUSPENDED_PRINCIPAL));
}

#[test]
fn every_code_has_a_documented_status() {
    let protocol = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../protocol.md")).unwrap();
    for (code, status) in codes::ALL {
        let row = format!("| `{code}` | {status} |");
        assert!(protocol.contains(&row), "protocol.md lacks {row}");
    }
}
