#![allow(dead_code)]

use phc_core::issuance::{recovery_hash, EnrollmentRequest, EpochRing, IssuerConfig, IssuerState, Ticket};
use phc_core::wallet::{create_delegation, create_identity, create_presentation, Credential, PresentationContext};
use phc_core::wire::{Wire, WireEnvelope};
use phc_core::{GroupElement, GroupParams, KeyPair};
use phc_net::protocol::*;
use phc_net::{IssuerPin, ServiceSetup};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub const SCOPE: &str = "account-registration";

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn issuer_state(id: &str, params: &GroupParams, seed: u64) -> IssuerState {
    let mut config = IssuerConfig::new(id, params.clone());
    config.cohort_size = 4;
    IssuerState::new(config, &mut rng(seed)).unwrap()
}

pub fn setup(service_id: &str, issuers: &[(&str, &GroupElement)], params: &GroupParams, k: u32) -> ServiceSetup {
    ServiceSetup {
        version: 1,
        service_id: service_id.into(),
        params: params.name().into(),
        account_limit: k,
        scopes: vec![SCOPE.into()],
        accepted_issuers: issuers
            .iter()
            .map(|(id, key)| IssuerPin {
                issuer_id: id.to_string(),
                public_key: params.element_hex(key),
                url: None,
            })
            .collect(),
    }
}

/// A person's device before and after enrollment.
pub struct Holder {
    pub root_id: String,
    pub keypair: KeyPair,
    pub code: Vec<u8>,
}

impl Holder {
    pub fn new(root_id: &str, params: &GroupParams, rng: &mut ChaCha20Rng) -> Self {
        let (keypair, code) = create_identity(params, rng);
        Self {
            root_id: root_id.into(),
            keypair,
            code: code.to_vec(),
        }
    }

    pub fn request(&self, ticket: Option<Ticket>) -> EnrollmentRequest {
        EnrollmentRequest {
            root_id: self.root_id.clone(),
            public_key: self.keypair.public().clone(),
            recovery_hash: recovery_hash(&self.root_id, &self.code),
            reenroll_ticket: ticket,
        }
    }

    pub fn credential(&self, params: &GroupParams, enrolled: &EnrolledBody) -> Credential {
        Credential {
            issuer_id: enrolled.issuer_id.clone(),
            params: params.clone(),
            epoch: enrolled.epoch,
            keypair: self.keypair.clone(),
            cohort_index: enrolled.cohort_index,
            position: enrolled.position,
            recovery_code: self.code.clone(),
        }
    }
}

pub fn envelope<T: serde::Serialize>(kind: &str, body: &T) -> Vec<u8> {
    envelope_bytes(kind, body)
}

pub fn enroll_body(req: &EnrollmentRequest, params: &GroupParams) -> Vec<u8> {
    envelope(kinds::ENROLLMENT_REQUEST, &req.to_doc(params))
}

pub fn revoke_body(code: &[u8], root_id: &str) -> Vec<u8> {
    envelope(
        kinds::REVOCATION_REQUEST,
        &RevocationRequestBody {
            recovery_code: hex::encode(code),
            root_id: root_id.into(),
        },
    )
}

pub fn ring_body(ring: &EpochRing, params: &GroupParams) -> Vec<u8> {
    envelope(kinds::RING, &ring.to_doc(params))
}

pub fn open<T: serde::de::DeserializeOwned>(reply: &Reply, kind: &str) -> T {
    assert!(reply.is_success(), "unexpected error {}", String::from_utf8_lossy(&reply.body));
    let env: WireEnvelope = serde_json::from_slice(&reply.body).unwrap();
    env.open(kind).unwrap()
}

pub fn code(reply: &Reply) -> String {
    reply
        .error_code()
        .unwrap_or_else(|| panic!("expected an error, got {}", String::from_utf8_lossy(&reply.body)))
}

pub fn parse_ring(reply: &Reply, params: &GroupParams) -> EpochRing {
    let doc: RingDoc = open(reply, kinds::RING);
    EpochRing::from_doc(&doc, params).unwrap()
}

pub fn context(cred: &Credential, service_id: &str, challenge: [u8; 16]) -> PresentationContext {
    PresentationContext {
        issuer_id: cred.issuer_id.clone(),
        service_id: service_id.into(),
        scope: SCOPE.into(),
        challenge,
    }
}

pub fn nonce(reply: &Reply) -> [u8; 16] {
    let body: ChallengeBody = open(reply, kinds::CHALLENGE);
    phc_core::encoding::hex_array(&body.nonce).unwrap()
}

/// Registration request for `cred` answering `challenge`.
pub fn register_body(
    cred: &Credential,
    ring: &EpochRing,
    service_id: &str,
    challenge: [u8; 16],
    rng: &mut ChaCha20Rng,
) -> Vec<u8> {
    let ctx = context(cred, service_id, challenge);
    let pres = create_presentation(cred, ring, &ctx, rng).unwrap();
    envelope(
        kinds::REGISTRATION,
        &RegistrationBody {
            service_id: service_id.into(),
            scope: SCOPE.into(),
            challenge: hex::encode(challenge),
            presentation: pres.to_doc(&cred.params),
        },
    )
}

pub fn delegation_body(
    cred: &Credential,
    service_id: &str,
    agent: &GroupElement,
    expiry: u64,
    now: u64,
    rng: &mut ChaCha20Rng,
) -> Vec<u8> {
    let ctx = context(cred, service_id, [0; 16]);
    let att = create_delegation(cred, &ctx, agent, "post", expiry, rng).unwrap();
    envelope(
        kinds::DELEGATION_CHECK,
        &DelegationCheckBody {
            attestation: att.to_doc(&cred.params),
            scope: SCOPE.into(),
            now,
        },
    )
}

pub fn suspend_body(issuer_id: &str, tag_hex: &str) -> Vec<u8> {
    envelope(
        kinds::SUSPENSION,
        &SuspensionBody {
            issuer_id: issuer_id.into(),
            tag: tag_hex.into(),
        },
    )
}
