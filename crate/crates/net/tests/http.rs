mod common;

use std::sync::Arc;

use common::*;
use phc_core::wallet::create_presentation;
use phc_core::GroupParams;
use phc_net::server::{spawn, App, ServeOptions};
use phc_net::{codes, IssuerClient, IssuerNode, IssuerPin, ServiceClient, ServiceNode};

#[test]
fn wallet_to_service_over_loopback() {
    let params = GroupParams::test256();
    let state = issuer_state("issuer-a", &params, 1);
    let key = state.public_key().clone();
    let issuer = spawn(App::Issuer(Arc::new(IssuerNode::in_memory(state))), "127.0.0.1:0", ServeOptions::default()).unwrap();

    let mut setup = setup("forum", &[("issuer-a", &key)], &params, 1);
    setup.accepted_issuers = vec![IssuerPin {
        issuer_id: "issuer-a".into(),
        public_key: params.element_hex(&key),
        url: Some(issuer.url()),
    }];
    let service_node = Arc::new(ServiceNode::in_memory(setup, [3; 32]).unwrap());
    let service = spawn(App::Service(service_node.clone()), "127.0.0.1:0", ServeOptions::default()).unwrap();

    let ic = IssuerClient::connect(&issuer.url()).unwrap();
    let sc = ServiceClient::connect(&service.url()).unwrap();
    assert_eq!(sc.info().service_id, "forum");
    let pinned = ic.public_key().unwrap();
    assert_eq!(pinned, key);

    let mut r = rng(2);
    let alice = Holder::new("alice", &params, &mut r);
    let enrolled = ic.enroll(&alice.request(None)).unwrap();
    let cred = alice.credential(&params, &enrolled);
    let dup = Holder::new("alice", &params, &mut r);
    let err = ic.enroll(&dup.request(None)).unwrap_err();
    assert_eq!(err.code(), Some(codes::DUPLICATE_ENROLLMENT));

    // The service has no ring yet and pulls one from the pinned URL.
    let ring = ic.ring(None, &pinned).unwrap();
    let challenge = sc.challenge().unwrap();
    let pres = create_presentation(&cred, &ring, &context(&cred, "forum", challenge), &mut r).unwrap();
    let account = sc.register(&pres, SCOPE, &challenge).unwrap();
    assert!(account.account_id.starts_with("acct-"));
    assert_eq!(service_node.ring_epoch("issuer-a"), Some(0));

    let replay = sc.register(&pres, SCOPE, &challenge).unwrap_err();
    assert_eq!(replay.code(), Some(codes::REPLAYED_CHALLENGE));

    // A later enrollee is not in the cached ring; the service refreshes.
    let bob = Holder::new("bob", &params, &mut r);
    let bob_cred = bob.credential(&params, &ic.enroll(&bob.request(None)).unwrap());
    let ring = ic.ring(None, &pinned).unwrap();
    let challenge = sc.challenge().unwrap();
    let pres = create_presentation(&bob_cred, &ring, &context(&bob_cred, "forum", challenge), &mut r).unwrap();
    let bob_account = sc.register(&pres, SCOPE, &challenge).unwrap();

    let tag = params.element_from_hex(&bob_account.tag).unwrap();
    sc.suspend("issuer-a", &tag).unwrap();
    let challenge = sc.challenge().unwrap();
    let pres = create_presentation(&bob_cred, &ring, &context(&bob_cred, "forum", challenge), &mut r).unwrap();
    let err = sc.register(&pres, SCOPE, &challenge).unwrap_err();
    assert_eq!(err.code(), Some(codes::SUSPENDED_CREDENTIAL));
    assert!(matches!(err, phc_net::ClientError::Api { status: 403, .. }));

    // New epoch: the service follows the issuer.
    assert_eq!(ic.advance_epoch().unwrap(), 1);
    let renewed = alice.credential(&params, &ic.enroll(&alice.request(None)).unwrap());
    let ring = ic.ring(Some(1), &pinned).unwrap();
    let challenge = sc.challenge().unwrap();
    let pres = create_presentation(&renewed, &ring, &context(&renewed, "forum", challenge), &mut r).unwrap();
    let err = sc.register(&pres, SCOPE, &challenge).unwrap_err();
    assert_eq!(err.code(), Some(codes::LIMIT_REACHED), "same pseudonym across epochs");
    assert_eq!(service_node.ring_epoch("issuer-a"), Some(1));

    let ticket = ic.revoke(&alice.code, "alice").unwrap();
    assert_eq!(ticket.len(), 16);

    service.shutdown().unwrap();
    issuer.shutdown().unwrap();
}

#[test]
fn unreachable_server_is_a_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let err = IssuerClient::connect(&format!("http://{addr}")).err().unwrap();
    assert!(matches!(err, phc_net::ClientError::Transport(_)));
}
