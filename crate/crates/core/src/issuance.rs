//! Issuer state and the enrollment, renewal, and revocation lifecycle.
//!
//! The issuer stores only salted digests of root identifiers, never the
//! identifiers themselves, and keeps no record connecting a digest to the
//! public key enrolled under it. Every mutation is expressed as an
//! [`IssuerEvent`]; replaying the events reconstructs the state exactly.

use crate::crypto::{schnorr_sign, schnorr_verify, CryptoError, GroupElement, GroupParams, KeyPair, SchnorrSignature};
use crate::encoding::{hex_array, Encoder};
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub const DEFAULT_COHORT_SIZE: usize = 64;

pub type Digest32 = [u8; 32];
pub type Ticket = [u8; 16];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IssuanceError {
    #[error("person has already received a personhood credential this epoch")]
    DuplicateEnrollment,
    #[error("public key is already on the ring")]
    DuplicateKey,
    #[error("recovery code is already bound to another credential")]
    DuplicateRecoveryCode,
    #[error("re-enrollment ticket is unknown, spent, or issued to someone else")]
    InvalidTicket,
    #[error("unknown recovery code")]
    UnknownRecoveryCode,
    #[error("credential already revoked once this epoch")]
    AlreadyRevokedThisEpoch,
    #[error("unknown epoch {0}")]
    UnknownEpoch(u64),
    #[error("invalid issuer configuration: {0}")]
    InvalidConfig(String),
    #[error("event log cannot be replayed: {0}")]
    Replay(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssuerConfig {
    pub issuer_id: String,
    pub params: GroupParams,
    pub cohort_size: usize,
    /// When false the issuer skips the one-per-person check entirely.
    pub enforce_limit: bool,
    /// Free-form description of the root-of-trust evidence the issuer uses.
    pub evidence_label: String,
}

impl IssuerConfig {
    pub fn new(issuer_id: impl Into<String>, params: GroupParams) -> Self {
        Self {
            issuer_id: issuer_id.into(),
            params,
            cohort_size: DEFAULT_COHORT_SIZE,
            enforce_limit: true,
            evidence_label: "government-id".into(),
        }
    }
}

/// A signed, cohort-partitioned snapshot of the valid keys for one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochRing {
    pub issuer_id: String,
    pub epoch: u64,
    pub cohorts: Vec<Vec<GroupElement>>,
    pub snapshot_sig: SchnorrSignature,
}

impl EpochRing {
    pub fn cohort(&self, index: usize) -> Option<&[GroupElement]> {
        self.cohorts.get(index).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.cohorts.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, key: &GroupElement) -> bool {
        self.locate(key).is_some()
    }

    /// `(cohort_index, position)` of a key.
    pub fn locate(&self, key: &GroupElement) -> Option<(usize, usize)> {
        self.cohorts.iter().enumerate().find_map(|(ci, cohort)| {
            cohort.iter().position(|y| y == key).map(|pos| (ci, pos))
        })
    }
}

/// Bytes covered by the snapshot signature.
pub fn ring_message(params: &GroupParams, issuer_id: &str, epoch: u64, cohorts: &[Vec<GroupElement>]) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.str(issuer_id).u64(epoch).count(cohorts.len());
    for cohort in cohorts {
        enc.count(cohort.len());
        for y in cohort {
            enc.bytes(&params.element_bytes(y));
        }
    }
    enc.finish()
}

/// Checks a snapshot against the issuer's published key.
pub fn verify_ring(params: &GroupParams, issuer_public: &GroupElement, ring: &EpochRing) -> bool {
    let mut seen = BTreeSet::new();
    if !ring.cohorts.iter().flatten().all(|y| seen.insert(y)) {
        return false;
    }
    let msg = ring_message(params, &ring.issuer_id, ring.epoch, &ring.cohorts);
    schnorr_verify(params, &params.generator(), issuer_public, &msg, &ring.snapshot_sig)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnrollmentRequest {
    /// Opaque identifier vouched for by an out-of-band root-of-trust check.
    pub root_id: String,
    pub public_key: GroupElement,
    /// [`recovery_hash`] of the holder's root identifier and recovery code.
    pub recovery_hash: Digest32,
    pub reenroll_ticket: Option<Ticket>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enrolled {
    pub epoch: u64,
    pub cohort_index: usize,
    pub position: usize,
}

/// Commitment to a recovery code, bound to the root identifier that enrolled
/// it so a code cannot be redeemed under another person's identifier.
pub fn recovery_hash(root_id: &str, code: &[u8]) -> Digest32 {
    let mut enc = Encoder::new();
    enc.bytes(DOMAIN_RECOVERY).str(root_id).bytes(code);
    Sha256::digest(enc.finish()).into()
}

pub const DOMAIN_RECOVERY: &[u8] = b"PHC/recovery";

/// One line of the issuer's append-only log. Fields are lowercase hex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum IssuerEvent {
    Init {
        issuer_id: String,
        params: String,
        cohort_size: usize,
        enforce_limit: bool,
        evidence_label: String,
        signing_key: String,
        dedup_salt: String,
        rng_seed: String,
    },
    /// A root digest passed the per-epoch check.
    Admitted {
        digest: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ticket: Option<String>,
    },
    /// A key joined the current ring. Logged separately from `Admitted` so
    /// no record pairs a root digest with a key.
    KeyAdded { key: String, recovery_hash: String },
    Revoked { recovery_hash: String },
    TicketIssued { digest: String, ticket: String },
    EpochAdvanced { epoch: u64 },
}

/// Issuer-side state for one issuer.
#[derive(Debug, Clone)]
pub struct IssuerState {
    config: IssuerConfig,
    signing_keypair: KeyPair,
    dedup_salt: [u8; 32],
    rng_seed: [u8; 32],
    applied: u64,
    current_epoch: u64,
    dedup_set: BTreeSet<Digest32>,
    revoked_once_set: BTreeSet<Digest32>,
    recovery_bindings: BTreeMap<Digest32, GroupElement>,
    rings: BTreeMap<u64, EpochRing>,
    reenroll_tickets: BTreeMap<Ticket, Digest32>,
    journal: Option<Vec<IssuerEvent>>,
}

impl IssuerState {
    /// Creates a fresh issuer with secrets drawn from `rng`.
    pub fn new<R: RngCore + CryptoRng + ?Sized>(config: IssuerConfig, rng: &mut R) -> Result<Self, IssuanceError> {
        if config.cohort_size == 0 {
            return Err(IssuanceError::InvalidConfig("cohort size must be at least 1".into()));
        }
        if config.issuer_id.is_empty() {
            return Err(IssuanceError::InvalidConfig("issuer id must be nonempty".into()));
        }
        let params = config.params.clone();
        let signing = KeyPair::generate(&params, rng);
        let mut salt = [0u8; 32];
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut salt);
        rng.fill_bytes(&mut seed);
        let init = IssuerEvent::Init {
            issuer_id: config.issuer_id.clone(),
            params: params.name().to_owned(),
            cohort_size: config.cohort_size,
            enforce_limit: config.enforce_limit,
            evidence_label: config.evidence_label.clone(),
            signing_key: params.scalar_hex(signing.secret()),
            dedup_salt: hex::encode(salt),
            rng_seed: hex::encode(seed),
        };
        let mut state = Self {
            config,
            signing_keypair: signing,
            dedup_salt: salt,
            rng_seed: seed,
            applied: 0,
            current_epoch: 0,
            dedup_set: BTreeSet::new(),
            revoked_once_set: BTreeSet::new(),
            recovery_bindings: BTreeMap::new(),
            rings: BTreeMap::new(),
            reenroll_tickets: BTreeMap::new(),
            journal: None,
        };
        state.applied = 1;
        state.journal = Some(vec![init]);
        state.commit(IssuerEvent::EpochAdvanced { epoch: 0 })?;
        Ok(state)
    }

    /// Rebuilds state from a log whose first event is `Init`.
    pub fn replay<I: IntoIterator<Item = IssuerEvent>>(events: I) -> Result<Self, IssuanceError> {
        let mut events = events.into_iter();
        let Some(IssuerEvent::Init {
            issuer_id,
            params,
            cohort_size,
            enforce_limit,
            evidence_label,
            signing_key,
            dedup_salt,
            rng_seed,
        }) = events.next()
        else {
            return Err(IssuanceError::Replay("log does not start with init".into()));
        };
        let params = GroupParams::preset(&params)?;
        let secret = params.scalar_from_hex(&signing_key)?;
        let bad = |what: &str| IssuanceError::Replay(format!("bad {what}"));
        let mut state = Self {
            config: IssuerConfig {
                issuer_id,
                params: params.clone(),
                cohort_size,
                enforce_limit,
                evidence_label,
            },
            signing_keypair: KeyPair::from_secret(&params, secret)?,
            dedup_salt: hex_array(&dedup_salt).ok_or_else(|| bad("salt"))?,
            rng_seed: hex_array(&rng_seed).ok_or_else(|| bad("seed"))?,
            applied: 1,
            current_epoch: 0,
            dedup_set: BTreeSet::new(),
            revoked_once_set: BTreeSet::new(),
            recovery_bindings: BTreeMap::new(),
            rings: BTreeMap::new(),
            reenroll_tickets: BTreeMap::new(),
            journal: None,
        };
        for event in events {
            if matches!(event, IssuerEvent::Init { .. }) {
                return Err(IssuanceError::Replay("second init event".into()));
            }
            state.apply(&event)?;
        }
        if state.rings.is_empty() {
            return Err(IssuanceError::Replay("log has no epoch".into()));
        }
        Ok(state)
    }

    /// Starts recording committed events for [`IssuerState::take_events`].
    /// A freshly created issuer journals from its `Init` event onward.
    pub fn enable_journal(&mut self) {
        self.journal.get_or_insert_with(Vec::new);
    }

    /// Stops recording events, for in-memory use where nothing is persisted.
    pub fn disable_journal(&mut self) {
        self.journal = None;
    }

    /// Drains events committed since the last call.
    pub fn take_events(&mut self) -> Vec<IssuerEvent> {
        self.journal.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn issuer_id(&self) -> &str {
        &self.config.issuer_id
    }

    pub fn params(&self) -> &GroupParams {
        &self.config.params
    }

    pub fn config(&self) -> &IssuerConfig {
        &self.config
    }

    pub fn public_key(&self) -> &GroupElement {
        self.signing_keypair.public()
    }

    pub fn current_epoch(&self) -> u64 {
        self.current_epoch
    }

    /// Number of events applied so far, including `Init`.
    pub fn applied_events(&self) -> u64 {
        self.applied
    }

    fn root_digest(&self, root_id: &str) -> Digest32 {
        let mut h = Sha256::new();
        h.update(self.dedup_salt);
        h.update(root_id.as_bytes());
        h.finalize().into()
    }

    /// Randomness for the next event, derived from the seed and the event
    /// counter so that replay reproduces it.
    fn op_rng(&self, purpose: &[u8]) -> ChaCha20Rng {
        let mut h = Sha256::new();
        h.update(self.rng_seed);
        h.update(self.applied.to_be_bytes());
        h.update(purpose);
        ChaCha20Rng::from_seed(h.finalize().into())
    }

    fn current_ring(&self) -> &EpochRing {
        &self.rings[&self.current_epoch]
    }

    /// Admits one person and appends their key to the least-full cohort.
    pub fn enroll(&mut self, req: &EnrollmentRequest) -> Result<Enrolled, IssuanceError> {
        let params = self.config.params.clone();
        if !params.is_member(req.public_key.value()) {
            return Err(CryptoError::NotInGroup.into());
        }
        let digest = self.root_digest(&req.root_id);
        let mut ticket_used = None;
        if let Some(ticket) = req.reenroll_ticket {
            match self.reenroll_tickets.get(&ticket) {
                Some(bound) if *bound == digest => ticket_used = Some(ticket),
                _ => return Err(IssuanceError::InvalidTicket),
            }
        } else if self.config.enforce_limit && self.dedup_set.contains(&digest) {
            return Err(IssuanceError::DuplicateEnrollment);
        }
        if self.current_ring().contains(&req.public_key) {
            return Err(IssuanceError::DuplicateKey);
        }
        if self.recovery_bindings.contains_key(&req.recovery_hash) {
            return Err(IssuanceError::DuplicateRecoveryCode);
        }
        self.commit(IssuerEvent::Admitted {
            digest: hex::encode(digest),
            ticket: ticket_used.map(hex::encode),
        })?;
        self.commit(IssuerEvent::KeyAdded {
            key: params.element_hex(&req.public_key),
            recovery_hash: hex::encode(req.recovery_hash),
        })?;
        let (cohort_index, position) = self
            .current_ring()
            .locate(&req.public_key)
            .expect("key was just added");
        Ok(Enrolled {
            epoch: self.current_epoch,
            cohort_index,
            position,
        })
    }

    /// Revokes the credential bound to `recovery_code` and returns a
    /// one-time ticket that lets the same person enroll again this epoch.
    ///
    /// The holder re-presents their root identifier so the ticket can be
    /// bound to them; a person may revoke at most once per epoch.
    pub fn revoke(&mut self, recovery_code: &[u8], root_id: &str) -> Result<Ticket, IssuanceError> {
        let rh = recovery_hash(root_id, recovery_code);
        if !self.recovery_bindings.contains_key(&rh) {
            return Err(IssuanceError::UnknownRecoveryCode);
        }
        let digest = self.root_digest(root_id);
        if self.config.enforce_limit && !self.dedup_set.contains(&digest) {
            return Err(IssuanceError::UnknownRecoveryCode);
        }
        if self.revoked_once_set.contains(&digest) {
            return Err(IssuanceError::AlreadyRevokedThisEpoch);
        }
        let mut ticket = [0u8; 16];
        self.op_rng(b"ticket").fill_bytes(&mut ticket);
        self.commit(IssuerEvent::Revoked {
            recovery_hash: hex::encode(rh),
        })?;
        self.commit(IssuerEvent::TicketIssued {
            digest: hex::encode(digest),
            ticket: hex::encode(ticket),
        })?;
        Ok(ticket)
    }

    /// Starts a new validity epoch. Every holder must enroll again; all
    /// per-epoch sets are cleared and earlier rings stay readable.
    pub fn advance_epoch(&mut self) -> Result<u64, IssuanceError> {
        let epoch = self.current_epoch + 1;
        self.commit(IssuerEvent::EpochAdvanced { epoch })?;
        Ok(epoch)
    }

    pub fn publish_ring(&self, epoch: u64) -> Result<EpochRing, IssuanceError> {
        self.rings
            .get(&epoch)
            .cloned()
            .ok_or(IssuanceError::UnknownEpoch(epoch))
    }

    pub fn current_ring_snapshot(&self) -> EpochRing {
        self.current_ring().clone()
    }

    fn commit(&mut self, event: IssuerEvent) -> Result<(), IssuanceError> {
        self.apply(&event)?;
        if let Some(journal) = self.journal.as_mut() {
            journal.push(event);
        }
        Ok(())
    }

    fn apply(&mut self, event: &IssuerEvent) -> Result<(), IssuanceError> {
        let params = self.config.params.clone();
        let bad = |what: &str| IssuanceError::Replay(format!("bad {what}"));
        match event {
            IssuerEvent::Init { .. } => return Err(bad("init placement")),
            IssuerEvent::Admitted { digest, ticket } => {
                let digest: Digest32 = hex_array(digest).ok_or_else(|| bad("digest"))?;
                if let Some(ticket) = ticket {
                    let ticket: Ticket = hex_array(ticket).ok_or_else(|| bad("ticket"))?;
                    if self.reenroll_tickets.remove(&ticket) != Some(digest) {
                        return Err(bad("ticket redemption"));
                    }
                }
                self.dedup_set.insert(digest);
            }
            IssuerEvent::KeyAdded { key, recovery_hash } => {
                let key = params.element_from_hex(key).map_err(|_| bad("key"))?;
                let rh: Digest32 = hex_array(recovery_hash).ok_or_else(|| bad("recovery hash"))?;
                let cohort_size = self.config.cohort_size;
                let ring = self.rings.get_mut(&self.current_epoch).ok_or_else(|| bad("epoch"))?;
                let slot = ring
                    .cohorts
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.len() < cohort_size)
                    .min_by_key(|(i, c)| (c.len(), *i))
                    .map(|(i, _)| i);
                match slot {
                    Some(i) => ring.cohorts[i].push(key.clone()),
                    None => ring.cohorts.push(vec![key.clone()]),
                }
                self.recovery_bindings.insert(rh, key);
                self.resign_current()?;
            }
            IssuerEvent::Revoked { recovery_hash } => {
                let rh: Digest32 = hex_array(recovery_hash).ok_or_else(|| bad("recovery hash"))?;
                let key = self.recovery_bindings.remove(&rh).ok_or_else(|| bad("revocation"))?;
                let ring = self.rings.get_mut(&self.current_epoch).ok_or_else(|| bad("epoch"))?;
                for cohort in &mut ring.cohorts {
                    cohort.retain(|y| *y != key);
                }
                self.resign_current()?;
            }
            IssuerEvent::TicketIssued { digest, ticket } => {
                let digest: Digest32 = hex_array(digest).ok_or_else(|| bad("digest"))?;
                let ticket: Ticket = hex_array(ticket).ok_or_else(|| bad("ticket"))?;
                self.revoked_once_set.insert(digest);
                self.reenroll_tickets.insert(ticket, digest);
            }
            IssuerEvent::EpochAdvanced { epoch } => {
                if !self.rings.is_empty() && *epoch != self.current_epoch + 1 {
                    return Err(bad("epoch sequence"));
                }
                self.current_epoch = *epoch;
                self.dedup_set.clear();
                self.revoked_once_set.clear();
                self.recovery_bindings.clear();
                self.reenroll_tickets.clear();
                let sig = self.sign_snapshot(*epoch, &[])?;
                self.rings.insert(
                    *epoch,
                    EpochRing {
                        issuer_id: self.config.issuer_id.clone(),
                        epoch: *epoch,
                        cohorts: Vec::new(),
                        snapshot_sig: sig,
                    },
                );
            }
        }
        self.applied += 1;
        Ok(())
    }

    fn sign_snapshot(&self, epoch: u64, cohorts: &[Vec<GroupElement>]) -> Result<SchnorrSignature, IssuanceError> {
        let params = &self.config.params;
        let msg = ring_message(params, &self.config.issuer_id, epoch, cohorts);
        let mut rng = self.op_rng(b"snapshot");
        Ok(schnorr_sign(
            params,
            &params.generator(),
            self.signing_keypair.secret(),
            &msg,
            &mut rng,
        )?)
    }

    fn resign_current(&mut self) -> Result<(), IssuanceError> {
        let epoch = self.current_epoch;
        let cohorts = self.rings[&epoch].cohorts.clone();
        let sig = self.sign_snapshot(epoch, &cohorts)?;
        self.rings.get_mut(&epoch).unwrap().snapshot_sig = sig;
        Ok(())
    }

    /// Digests currently in the per-epoch dedup set. Exposed for audits.
    pub fn dedup_digests(&self) -> impl Iterator<Item = &Digest32> {
        self.dedup_set.iter()
    }

    pub fn revoked_digests(&self) -> impl Iterator<Item = &Digest32> {
        self.revoked_once_set.iter()
    }

    pub fn bound_keys(&self) -> impl Iterator<Item = (&Digest32, &GroupElement)> {
        self.recovery_bindings.iter()
    }

    pub fn outstanding_tickets(&self) -> usize {
        self.reenroll_tickets.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn issuer(id: &str) -> (IssuerState, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut cfg = IssuerConfig::new(id, GroupParams::test256());
        cfg.cohort_size = 3;
        (IssuerState::new(cfg, &mut rng).unwrap(), rng)
    }

    fn request(params: &GroupParams, root: &str, rng: &mut ChaCha20Rng) -> (EnrollmentRequest, KeyPair, Vec<u8>) {
        let kp = KeyPair::generate(params, rng);
        let code = format!("recovery-{root}-{}", rng.next_u64()).into_bytes();
        let req = EnrollmentRequest {
            root_id: root.into(),
            public_key: kp.public().clone(),
            recovery_hash: recovery_hash(root, &code),
            reenroll_ticket: None,
        };
        (req, kp, code)
    }

    #[test]
    fn fresh_enrollment_grows_ring() {
        let (mut st, mut rng) = issuer("i1");
        let params = st.params().clone();
        let (req, kp, _) = request(&params, "alice-ssn-hash", &mut rng);
        let got = st.enroll(&req).unwrap();
        assert_eq!(got, Enrolled { epoch: 0, cohort_index: 0, position: 0 });
        let ring = st.publish_ring(0).unwrap();
        assert_eq!(ring.len(), 1);
        assert!(ring.contains(kp.public()));
        assert!(verify_ring(&params, st.public_key(), &ring));
    }

    #[test]
    fn second_enrollment_same_person_rejected() {
        let (mut st, mut rng) = issuer("i1");
        let params = st.params().clone();
        st.enroll(&request(&params, "alice", &mut rng).0).unwrap();
        assert_eq!(
            st.enroll(&request(&params, "alice", &mut rng).0),
            Err(IssuanceError::DuplicateEnrollment)
        );
        assert_eq!(st.publish_ring(0).unwrap().len(), 1);
    }

    #[test]
    fn distinct_issuers_each_accept() {
        let (mut a, mut rng) = issuer("issuer-a");
        let (mut b, _) = issuer("issuer-b");
        let params = a.params().clone();
        a.enroll(&request(&params, "alice", &mut rng).0).unwrap();
        b.enroll(&request(&params, "alice", &mut rng).0).unwrap();
    }

    #[test]
    fn duplicate_key_and_recovery_code_rejected() {
        let (mut st, mut rng) = issuer("i1");
        let params = st.params().clone();
        let (req, _, _) = request(&params, "alice", &mut rng);
        st.enroll(&req).unwrap();
        let mut same_key = req.clone();
        same_key.root_id = "bob".into();
        same_key.recovery_hash = recovery_hash("alice", b"other");
        assert_eq!(st.enroll(&same_key), Err(IssuanceError::DuplicateKey));
        let (mut same_code, _, _) = request(&params, "carol", &mut rng);
        same_code.recovery_hash = req.recovery_hash;
        assert_eq!(st.enroll(&same_code), Err(IssuanceError::DuplicateRecoveryCode));
    }

    #[test]
    fn least_full_cohort_placement() {
        let (mut st, mut rng) = issuer("i1");
        let params = st.params().clone();
        let mut placed = Vec::new();
        for i in 0..7 {
            placed.push(st.enroll(&request(&params, &format!("p{i}"), &mut rng).0).unwrap());
        }
        let cohorts: Vec<_> = placed.iter().map(|e| (e.cohort_index, e.position)).collect();
        assert_eq!(cohorts, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0)]);
        // Two more go to the emptiest cohort.
        let e = st.enroll(&request(&params, "p7", &mut rng).0).unwrap();
        assert_eq!((e.cohort_index, e.position), (2, 1));
        assert!(st.publish_ring(0).unwrap().cohorts.iter().all(|c| c.len() <= 3));
    }

    #[test]
    fn revocation_flow() {
        let (mut st, mut rng) = issuer("i1");
        let params = st.params().clone();
        let (req, kp, code) = request(&params, "alice", &mut rng);
        st.enroll(&req).unwrap();

        assert_eq!(st.revoke(b"not-a-code", "alice"), Err(IssuanceError::UnknownRecoveryCode));
        let ticket = st.revoke(&code, "alice").unwrap();
        assert!(!st.publish_ring(0).unwrap().contains(kp.public()));
        assert!(verify_ring(&params, st.public_key(), &st.publish_ring(0).unwrap()));

        // Without the ticket the person is still a duplicate.
        let (mut again, kp2, code2) = request(&params, "alice", &mut rng);
        assert_eq!(st.enroll(&again), Err(IssuanceError::DuplicateEnrollment));
        // Someone else's ticket use is refused.
        let (mut other, _, _) = request(&params, "mallory", &mut rng);
        other.reenroll_ticket = Some(ticket);
        assert_eq!(st.enroll(&other), Err(IssuanceError::InvalidTicket));
        again.reenroll_ticket = Some(ticket);
        st.enroll(&again).unwrap();
        assert!(st.publish_ring(0).unwrap().contains(kp2.public()));
        // The ticket is single use.
        let (mut third, _, _) = request(&params, "alice", &mut rng);
        third.reenroll_ticket = Some(ticket);
        assert_eq!(st.enroll(&third), Err(IssuanceError::InvalidTicket));
        // Second revocation in the same epoch is refused.
        assert_eq!(st.revoke(&code2, "alice"), Err(IssuanceError::AlreadyRevokedThisEpoch));
    }

    #[test]
    fn recovery_code_only_revokes_under_its_own_root() {
        let (mut st, mut rng) = issuer("i1");
        let params = st.params().clone();
        let (alice, _, alice_code) = request(&params, "alice", &mut rng);
        let (bob, _, _) = request(&params, "bob", &mut rng);
        st.enroll(&alice).unwrap();
        st.enroll(&bob).unwrap();
        // Bob holding Alice's code must not obtain a ticket for himself.
        assert_eq!(st.revoke(&alice_code, "bob"), Err(IssuanceError::UnknownRecoveryCode));
        assert_eq!(st.current_ring_snapshot().len(), 2);
        assert!(st.revoke(&alice_code, "alice").is_ok());
    }

    #[test]
    fn epochs_reset_per_epoch_state() {
        let (mut st, mut rng) = issuer("i1");
        let params = st.params().clone();
        let (mut req, kp, _) = request(&params, "alice", &mut rng);
        st.enroll(&req).unwrap();
        assert_eq!(st.advance_epoch().unwrap(), 1);
        assert!(st.publish_ring(1).unwrap().is_empty());
        assert!(st.publish_ring(0).unwrap().contains(kp.public()));
        // Re-enrollment with the same key is allowed in the new epoch.
        req.recovery_hash = recovery_hash("alice", b"new code");
        assert_eq!(st.enroll(&req).unwrap().epoch, 1);
        assert_eq!(st.publish_ring(2), Err(IssuanceError::UnknownEpoch(2)));
    }

    #[test]
    fn empty_epoch_ring_verifies() {
        let (st, _) = issuer("i1");
        let ring = st.publish_ring(0).unwrap();
        assert!(ring.cohorts.is_empty());
        assert!(verify_ring(st.params(), st.public_key(), &ring));
    }

    #[test]
    fn altered_snapshot_fails_verification() {
        let (mut st, mut rng) = issuer("i1");
        let params = st.params().clone();
        for i in 0..4 {
            st.enroll(&request(&params, &format!("p{i}"), &mut rng).0).unwrap();
        }
        let ring = st.publish_ring(0).unwrap();
        let mut altered = ring.clone();
        altered.cohorts[1][0] = KeyPair::generate(&params, &mut rng).public().clone();
        assert!(!verify_ring(&params, st.public_key(), &altered));
        let mut renumbered = ring.clone();
        renumbered.epoch = 7;
        assert!(!verify_ring(&params, st.public_key(), &renumbered));
        let mut dup = ring;
        dup.cohorts[1][0] = dup.cohorts[0][0].clone();
        assert!(!verify_ring(&params, st.public_key(), &dup));
    }

    #[test]
    fn unlimited_issuer_skips_dedup() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut cfg = IssuerConfig::new("lax", GroupParams::test256());
        cfg.enforce_limit = false;
        let mut st = IssuerState::new(cfg, &mut rng).unwrap();
        let params = st.params().clone();
        for _ in 0..5 {
            st.enroll(&request(&params, "bot-farm", &mut rng).0).unwrap();
        }
        assert_eq!(st.publish_ring(0).unwrap().len(), 5);
    }

    #[test]
    fn replay_reconstructs_state() {
        let (mut st, mut rng) = issuer("i1");
        let params = st.params().clone();
        let mut codes = Vec::new();
        for i in 0..5 {
            let (req, _, code) = request(&params, &format!("p{i}"), &mut rng);
            st.enroll(&req).unwrap();
            codes.push(code);
        }
        st.revoke(&codes[2], "p2").unwrap();
        st.advance_epoch().unwrap();
        st.enroll(&request(&params, "p0", &mut rng).0).unwrap();
        let events = st.take_events();
        assert!(matches!(events[0], IssuerEvent::Init { .. }));
        let replayed = IssuerState::replay(events).unwrap();
        for epoch in 0..=1 {
            assert_eq!(replayed.publish_ring(epoch), st.publish_ring(epoch));
        }
        assert_eq!(replayed.public_key(), st.public_key());
        assert_eq!(replayed.applied_events(), st.applied_events());
    }

    #[test]
    fn replay_rejects_bad_logs() {
        assert!(matches!(IssuerState::replay(vec![]), Err(IssuanceError::Replay(_))));
        let (mut st, _) = issuer("i1");
        let mut events = st.take_events();
        events.push(IssuerEvent::Revoked { recovery_hash: "00".repeat(32) });
        assert!(matches!(IssuerState::replay(events), Err(IssuanceError::Replay(_))));
    }
}
