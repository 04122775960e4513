#![allow(dead_code)]

use phc_core::crypto::{GroupParams, KeyPair};
use phc_core::issuance::{recovery_hash, EnrollmentRequest, EpochRing, IssuerConfig, IssuerState};
use phc_core::relying_party::{AcceptedIssuer, PseudonymLedger, ServiceConfig};
use phc_core::wallet::{create_identity, Credential, PresentationContext};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeMap;

pub const SCOPE: &str = "account-registration";

pub struct Fixture {
    pub params: GroupParams,
    pub rng: ChaCha20Rng,
    pub issuers: Vec<IssuerState>,
}

impl Fixture {
    pub fn new(n_issuers: usize, seed: u64) -> Self {
        Self::with_params(GroupParams::test256(), n_issuers, seed)
    }

    pub fn with_params(params: GroupParams, n_issuers: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let issuers = (0..n_issuers)
            .map(|i| IssuerState::new(IssuerConfig::new(format!("issuer-{i}"), params.clone()), &mut rng).unwrap())
            .collect();
        Self { params, rng, issuers }
    }

    pub fn enroll(&mut self, issuer: usize, root_id: &str) -> Credential {
        let (keypair, code) = create_identity(&self.params, &mut self.rng);
        self.enroll_key(issuer, root_id, keypair, code.to_vec())
    }

    pub fn enroll_key(&mut self, issuer: usize, root_id: &str, keypair: KeyPair, code: Vec<u8>) -> Credential {
        let st = &mut self.issuers[issuer];
        let placed = st
            .enroll(&EnrollmentRequest {
                root_id: root_id.into(),
                public_key: keypair.public().clone(),
                recovery_hash: recovery_hash(root_id, &code),
                reenroll_ticket: None,
            })
            .unwrap();
        Credential {
            issuer_id: st.issuer_id().to_owned(),
            params: self.params.clone(),
            epoch: placed.epoch,
            keypair,
            cohort_index: placed.cohort_index,
            position: placed.position,
            recovery_code: code,
        }
    }

    pub fn service(&self, service_id: &str, accepted: &[usize], k: u32) -> ServiceConfig {
        ServiceConfig {
            service_id: service_id.into(),
            params: self.params.clone(),
            accepted_issuers: accepted
                .iter()
                .map(|&i| AcceptedIssuer {
                    issuer_id: self.issuers[i].issuer_id().to_owned(),
                    public_key: self.issuers[i].public_key().clone(),
                })
                .collect(),
            account_limit: k,
            scopes: vec![SCOPE.into()],
        }
    }

    pub fn rings(&self) -> BTreeMap<String, EpochRing> {
        self.issuers
            .iter()
            .map(|i| (i.issuer_id().to_owned(), i.current_ring_snapshot()))
            .collect()
    }

    pub fn ledger(&self, config: &ServiceConfig) -> PseudonymLedger {
        let mut seed = [7u8; 32];
        for (slot, b) in seed.iter_mut().zip(config.service_id.bytes()) {
            *slot = b;
        }
        PseudonymLedger::new(&config.service_id, &self.params, seed)
    }
}

pub fn context(cred: &Credential, service_id: &str, challenge: [u8; 16]) -> PresentationContext {
    PresentationContext {
        issuer_id: cred.issuer_id.clone(),
        service_id: service_id.into(),
        scope: SCOPE.into(),
        challenge,
    }
}
