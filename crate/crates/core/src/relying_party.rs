//! Service-provider side: challenges, presentation verification,
//! per-credential account limits, suspension, and delegation checks.
//!
//! The ledger keys everything on `(issuer_id, tag)`. It never sees a holder
//! public key, only pseudonym tags, counters, and nonces.

use crate::crypto::{context_base, lsag_verify, schnorr_verify, CryptoError, GroupElement, GroupParams};
use crate::encoding::hex_array;
use crate::issuance::{verify_ring, EpochRing};
use crate::wallet::{delegation_message, pseudonym_context, DelegationAttestation, Presentation, PresentationContext};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type Nonce = [u8; 16];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelyingPartyError {
    #[error("issuer {0:?} is not accepted by this service")]
    UnknownIssuer(String),
    #[error("no verified ring is available for issuer {0:?}")]
    MissingRing(String),
    #[error("ring snapshot signature does not verify under the pinned issuer key")]
    BadRingSignature,
    #[error("presentation is for epoch {presented}, current epoch is {current}")]
    StaleEpoch { presented: u64, current: u64 },
    #[error("challenge was not issued by this service or was already used")]
    ReplayedChallenge,
    #[error("presentation proof is invalid")]
    InvalidProof,
    #[error("presentation is for another service or an unknown scope")]
    WrongAudience,
    #[error("credential has reached its account limit")]
    LimitReached,
    #[error("credential is suspended")]
    SuspendedCredential,
    #[error("delegating pseudonym is not registered with this service")]
    UnknownPrincipal,
    #[error("delegating pseudonym is suspended")]
    SuspendedPrincipal,
    #[error("invalid service configuration: {0}")]
    InvalidConfig(String),
    #[error("ledger log cannot be replayed: {0}")]
    Replay(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptedIssuer {
    pub issuer_id: String,
    pub public_key: GroupElement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub service_id: String,
    pub params: GroupParams,
    pub accepted_issuers: Vec<AcceptedIssuer>,
    /// Accounts allowed per credential.
    pub account_limit: u32,
    pub scopes: Vec<String>,
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), RelyingPartyError> {
        let bad = |m: &str| Err(RelyingPartyError::InvalidConfig(m.to_owned()));
        if self.account_limit < 1 {
            return bad("account limit must be at least 1");
        }
        if self.accepted_issuers.is_empty() {
            return bad("at least one issuer must be accepted");
        }
        if self.scopes.is_empty() {
            return bad("at least one scope is required");
        }
        Ok(())
    }

    pub fn issuer(&self, issuer_id: &str) -> Option<&AcceptedIssuer> {
        self.accepted_issuers.iter().find(|i| i.issuer_id == issuer_id)
    }
}

/// What the service expects the presentation to be bound to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expected {
    pub service_id: String,
    pub scope: String,
    pub challenge: Nonce,
}

/// A pseudonym that passed verification, together with the challenge it
/// answered. Registration consumes the challenge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifiedPseudonym {
    pub issuer_id: String,
    pub tag: GroupElement,
    pub challenge: Nonce,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub account_count: u32,
    pub suspended: bool,
}

/// One line of the service's append-only log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LedgerEvent {
    Init { service_id: String, params: String, seed: String },
    ChallengeIssued { nonce: String },
    AccountRegistered {
        issuer_id: String,
        tag: String,
        challenge: String,
        account_id: String,
    },
    Suspended { issuer_id: String, tag: String },
}

#[derive(Debug, Clone)]
pub struct PseudonymLedger {
    service_id: String,
    params: GroupParams,
    seed: [u8; 32],
    applied: u64,
    entries: BTreeMap<(String, GroupElement), LedgerEntry>,
    outstanding: BTreeSet<Nonce>,
    consumed: BTreeSet<Nonce>,
    accounts: u64,
    journal: Option<Vec<LedgerEvent>>,
}

impl PseudonymLedger {
    pub fn new(service_id: &str, params: &GroupParams, seed: [u8; 32]) -> Self {
        Self {
            service_id: service_id.to_owned(),
            params: params.clone(),
            seed,
            applied: 1,
            entries: BTreeMap::new(),
            outstanding: BTreeSet::new(),
            consumed: BTreeSet::new(),
            accounts: 0,
            journal: Some(vec![LedgerEvent::Init {
                service_id: service_id.to_owned(),
                params: params.name().to_owned(),
                seed: hex::encode(seed),
            }]),
        }
    }

    pub fn replay<I: IntoIterator<Item = LedgerEvent>>(events: I) -> Result<Self, RelyingPartyError> {
        let mut events = events.into_iter();
        let Some(LedgerEvent::Init { service_id, params, seed }) = events.next() else {
            return Err(RelyingPartyError::Replay("log does not start with init".into()));
        };
        let params = GroupParams::preset(&params)?;
        let seed = hex_array(&seed).ok_or_else(|| RelyingPartyError::Replay("bad seed".into()))?;
        let mut ledger = Self::new(&service_id, &params, seed);
        ledger.journal = None;
        for event in events {
            ledger.apply(&event)?;
        }
        Ok(ledger)
    }

    pub fn enable_journal(&mut self) {
        self.journal.get_or_insert_with(Vec::new);
    }

    pub fn disable_journal(&mut self) {
        self.journal = None;
    }

    pub fn take_events(&mut self) -> Vec<LedgerEvent> {
        self.journal.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn service_id(&self) -> &str {
        &self.service_id
    }

    pub fn entry(&self, issuer_id: &str, tag: &GroupElement) -> Option<LedgerEntry> {
        self.entries.get(&(issuer_id.to_owned(), tag.clone())).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(String, GroupElement), &LedgerEntry)> {
        self.entries.iter()
    }

    pub fn is_outstanding(&self, nonce: &Nonce) -> bool {
        self.outstanding.contains(nonce)
    }

    pub fn applied_events(&self) -> u64 {
        self.applied
    }

    fn op_rng(&self, purpose: &[u8]) -> ChaCha20Rng {
        let mut h = Sha256::new();
        h.update(self.seed);
        h.update(self.applied.to_be_bytes());
        h.update(purpose);
        ChaCha20Rng::from_seed(h.finalize().into())
    }

    /// Issues a fresh 16-byte challenge and records it as outstanding.
    pub fn issue_challenge(&mut self) -> Nonce {
        let mut rng = self.op_rng(b"challenge");
        let nonce = loop {
            let mut n = [0u8; 16];
            rng.fill_bytes(&mut n);
            if !self.outstanding.contains(&n) && !self.consumed.contains(&n) {
                break n;
            }
        };
        self.commit(LedgerEvent::ChallengeIssued { nonce: hex::encode(nonce) })
            .expect("fresh nonce applies");
        nonce
    }

    /// Marks a pseudonym suspended; unknown pseudonyms get a suspended entry.
    pub fn suspend(&mut self, issuer_id: &str, tag: &GroupElement) {
        self.commit(LedgerEvent::Suspended {
            issuer_id: issuer_id.to_owned(),
            tag: self.params.element_hex(tag),
        })
        .expect("suspension applies");
    }

    fn commit(&mut self, event: LedgerEvent) -> Result<(), RelyingPartyError> {
        self.apply(&event)?;
        if let Some(j) = self.journal.as_mut() {
            j.push(event);
        }
        Ok(())
    }

    fn apply(&mut self, event: &LedgerEvent) -> Result<(), RelyingPartyError> {
        let bad = |m: &str| RelyingPartyError::Replay(format!("bad {m}"));
        match event {
            LedgerEvent::Init { .. } => return Err(bad("init placement")),
            LedgerEvent::ChallengeIssued { nonce } => {
                let nonce: Nonce = hex_array(nonce).ok_or_else(|| bad("nonce"))?;
                if self.consumed.contains(&nonce) || !self.outstanding.insert(nonce) {
                    return Err(bad("reused nonce"));
                }
            }
            LedgerEvent::AccountRegistered { issuer_id, tag, challenge, .. } => {
                let tag = self.params.element_from_hex(tag).map_err(|_| bad("tag"))?;
                let nonce: Nonce = hex_array(challenge).ok_or_else(|| bad("challenge"))?;
                if !self.outstanding.remove(&nonce) {
                    return Err(bad("challenge redemption"));
                }
                self.consumed.insert(nonce);
                self.entries.entry((issuer_id.clone(), tag)).or_default().account_count += 1;
                self.accounts += 1;
            }
            LedgerEvent::Suspended { issuer_id, tag } => {
                let tag = self.params.element_from_hex(tag).map_err(|_| bad("tag"))?;
                self.entries.entry((issuer_id.clone(), tag)).or_default().suspended = true;
            }
        }
        self.applied += 1;
        Ok(())
    }
}

/// Verifies a presentation against the service's verified ring snapshots
/// and returns only the pseudonym.
pub fn verify_presentation(
    config: &ServiceConfig,
    rings: &BTreeMap<String, EpochRing>,
    ledger: &PseudonymLedger,
    pres: &Presentation,
    expected: &Expected,
) -> Result<VerifiedPseudonym, RelyingPartyError> {
    let params = &config.params;
    let issuer = config
        .issuer(&pres.issuer_id)
        .ok_or_else(|| RelyingPartyError::UnknownIssuer(pres.issuer_id.clone()))?;
    let ring = rings
        .get(&pres.issuer_id)
        .ok_or_else(|| RelyingPartyError::MissingRing(pres.issuer_id.clone()))?;
    if ring.issuer_id != issuer.issuer_id || !verify_ring(params, &issuer.public_key, ring) {
        return Err(RelyingPartyError::BadRingSignature);
    }
    if pres.epoch != ring.epoch {
        return Err(RelyingPartyError::StaleEpoch {
            presented: pres.epoch,
            current: ring.epoch,
        });
    }
    if expected.service_id != config.service_id || !config.scopes.contains(&expected.scope) {
        return Err(RelyingPartyError::WrongAudience);
    }
    if !ledger.is_outstanding(&expected.challenge) {
        return Err(RelyingPartyError::ReplayedChallenge);
    }
    let cohort = ring.cohort(pres.cohort_index).ok_or(RelyingPartyError::InvalidProof)?;
    let ctx = PresentationContext {
        issuer_id: pres.issuer_id.clone(),
        service_id: expected.service_id.clone(),
        scope: expected.scope.clone(),
        challenge: expected.challenge,
    };
    let outcome = lsag_verify(params, cohort, &ctx.ctx_bytes(), &ctx.message(), &pres.signature)
        .map_err(|_| RelyingPartyError::InvalidProof)?;
    if !outcome.valid {
        return Err(RelyingPartyError::InvalidProof);
    }
    Ok(VerifiedPseudonym {
        issuer_id: pres.issuer_id.clone(),
        tag: outcome.tag,
        challenge: expected.challenge,
    })
}

/// Opens an account for a verified pseudonym if it is below its limit.
/// The challenge check, limit check, and increment happen in one step.
pub fn register_account(
    config: &ServiceConfig,
    ledger: &mut PseudonymLedger,
    verified: &VerifiedPseudonym,
) -> Result<String, RelyingPartyError> {
    if !ledger.is_outstanding(&verified.challenge) {
        return Err(RelyingPartyError::ReplayedChallenge);
    }
    let entry = ledger.entry(&verified.issuer_id, &verified.tag).unwrap_or_default();
    if entry.suspended {
        return Err(RelyingPartyError::SuspendedCredential);
    }
    if entry.account_count >= config.account_limit {
        return Err(RelyingPartyError::LimitReached);
    }
    let mut id = [0u8; 8];
    ledger.op_rng(b"account").fill_bytes(&mut id);
    let account_id = format!("acct-{}", hex::encode(id));
    ledger.commit(LedgerEvent::AccountRegistered {
        issuer_id: verified.issuer_id.clone(),
        tag: config.params.element_hex(&verified.tag),
        challenge: hex::encode(verified.challenge),
        account_id: account_id.clone(),
    })?;
    Ok(account_id)
}

pub fn suspend(ledger: &mut PseudonymLedger, issuer_id: &str, tag: &GroupElement) {
    ledger.suspend(issuer_id, tag);
}

/// Checks that an agent's attestation was signed by a registered,
/// unsuspended pseudonym and has not expired at `now`.
pub fn check_delegation(
    config: &ServiceConfig,
    ledger: &PseudonymLedger,
    att: &DelegationAttestation,
    account_scope: &str,
    now: u64,
) -> Result<bool, RelyingPartyError> {
    if config.issuer(&att.issuer_id).is_none() {
        return Err(RelyingPartyError::UnknownIssuer(att.issuer_id.clone()));
    }
    let entry = ledger
        .entry(&att.issuer_id, &att.tag)
        .ok_or(RelyingPartyError::UnknownPrincipal)?;
    if entry.suspended {
        return Err(RelyingPartyError::SuspendedPrincipal);
    }
    if entry.account_count == 0 {
        return Err(RelyingPartyError::UnknownPrincipal);
    }
    if att.expiry < now {
        return Ok(false);
    }
    let params = &config.params;
    let h = context_base(params, &pseudonym_context(&att.issuer_id, &config.service_id, account_scope))?;
    let msg = delegation_message(params, &att.agent_pub, &att.scope, att.expiry);
    Ok(schnorr_verify(params, &h, &att.tag, &msg, &att.signature))
}
