//! Relying-party node: challenge issuance, registration, suspension and
//! delegation checks over a [`PseudonymLedger`] backed by a log.
//!
//! Ring snapshots are public issuer output and are held in memory only;
//! they are re-fetched or re-installed after a restart, so the persisted
//! state never contains an enrolled key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use phc_core::eventlog::{read_events, EventLog};
use phc_core::issuance::{verify_ring, EpochRing};
use phc_core::relying_party::{
    check_delegation, register_account, verify_presentation, AcceptedIssuer, Expected, LedgerEvent, Nonce,
    PseudonymLedger, RelyingPartyError, ServiceConfig,
};
use phc_core::wallet::{DelegationAttestation, Presentation};
use phc_core::wire::{element_from_hex, Wire};
use phc_core::GroupParams;
use serde::{Deserialize, Serialize};

use crate::error::{codes, ApiError, NodeError};
use crate::protocol::*;
use crate::{decode_hex_array, open_body};

pub const SERVICE_SETUP: &str = "service.json";
pub const SERVICE_LOG: &str = "ledger.log";
pub const SETUP_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssuerPin {
    pub issuer_id: String,
    /// The issuer's snapshot-signing key, pinned at setup.
    pub public_key: String,
    /// Base URL used to fetch ring snapshots, if the service pulls them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

/// Static service configuration, stored as `service.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSetup {
    pub version: u64,
    pub service_id: String,
    pub params: String,
    pub account_limit: u32,
    pub scopes: Vec<String>,
    pub accepted_issuers: Vec<IssuerPin>,
}

impl ServiceSetup {
    pub fn config(&self) -> Result<ServiceConfig, NodeError> {
        if self.version != SETUP_VERSION {
            return Err(NodeError::InvalidSetup(format!("unsupported setup version {}", self.version)));
        }
        let params = GroupParams::preset(&self.params)?;
        let mut accepted = Vec::new();
        for pin in &self.accepted_issuers {
            if accepted.iter().any(|a: &AcceptedIssuer| a.issuer_id == pin.issuer_id) {
                return Err(NodeError::InvalidSetup(format!("issuer {} listed twice", pin.issuer_id)));
            }
            accepted.push(AcceptedIssuer {
                issuer_id: pin.issuer_id.clone(),
                public_key: element_from_hex(&params, &pin.public_key, "issuer key")?,
            });
        }
        let config = ServiceConfig {
            service_id: self.service_id.clone(),
            params,
            accepted_issuers: accepted,
            account_limit: self.account_limit,
            scopes: self.scopes.clone(),
        };
        config.validate()?;
        if config.service_id.is_empty() {
            return Err(NodeError::InvalidSetup("service id must be nonempty".into()));
        }
        Ok(config)
    }

    pub fn load(dir: &Path) -> Result<Self, NodeError> {
        let path = dir.join(SERVICE_SETUP);
        if !path.exists() {
            return Err(NodeError::NotInitialized(dir.display().to_string()));
        }
        let text = std::fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| NodeError::InvalidSetup(e.to_string()))
    }
}

struct Inner {
    ledger: PseudonymLedger,
    rings: BTreeMap<String, EpochRing>,
    log: Option<EventLog>,
    broken: bool,
}

pub struct ServiceNode {
    setup: ServiceSetup,
    config: ServiceConfig,
    inner: RwLock<Inner>,
}

impl ServiceNode {
    pub fn in_memory(setup: ServiceSetup, seed: [u8; 32]) -> Result<Self, NodeError> {
        let config = setup.config()?;
        let mut ledger = PseudonymLedger::new(&config.service_id, &config.params, seed);
        ledger.disable_journal();
        Ok(Self::from_parts(setup, config, ledger, None))
    }

    /// Initializes `dir` with the setup file and a fresh ledger log.
    pub fn create(dir: &Path, setup: ServiceSetup, seed: [u8; 32]) -> Result<Self, NodeError> {
        let config = setup.config()?;
        if dir.join(SERVICE_SETUP).exists() || log_path(dir).exists() {
            return Err(NodeError::AlreadyInitialized(dir.display().to_string()));
        }
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(&setup).expect("setup serializes");
        crate::store::write_atomic(&dir.join(SERVICE_SETUP), text.as_bytes())?;
        let mut ledger = PseudonymLedger::new(&config.service_id, &config.params, seed);
        let mut log = EventLog::open(log_path(dir))?;
        log.append_all(&ledger.take_events())?;
        Ok(Self::from_parts(setup, config, ledger, Some(log)))
    }

    pub fn open(dir: &Path) -> Result<Self, NodeError> {
        let setup = ServiceSetup::load(dir)?;
        let config = setup.config()?;
        let events: Vec<LedgerEvent> = read_events(log_path(dir))?;
        if events.is_empty() {
            return Err(NodeError::NotInitialized(dir.display().to_string()));
        }
        let mut ledger = PseudonymLedger::replay(events)?;
        if ledger.service_id() != config.service_id {
            return Err(NodeError::InvalidSetup("ledger log belongs to another service".into()));
        }
        ledger.enable_journal();
        let log = EventLog::open(log_path(dir))?;
        Ok(Self::from_parts(setup, config, ledger, Some(log)))
    }

    fn from_parts(setup: ServiceSetup, config: ServiceConfig, ledger: PseudonymLedger, log: Option<EventLog>) -> Self {
        Self {
            setup,
            config,
            inner: RwLock::new(Inner {
                ledger,
                rings: BTreeMap::new(),
                log,
                broken: false,
            }),
        }
    }

    pub fn setup(&self) -> &ServiceSetup {
        &self.setup
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// Ring epoch currently held for an issuer.
    pub fn ring_epoch(&self, issuer_id: &str) -> Option<u64> {
        self.read().rings.get(issuer_id).map(|r| r.epoch)
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn handle(&self, method: &str, path: &str, body: &[u8]) -> Reply {
        let result = match (method, path) {
            ("GET", paths::CHALLENGE) => self.challenge(),
            ("POST", paths::REGISTER) => self.register(body),
            ("POST", paths::SUSPEND) => self.suspend(body),
            ("POST", paths::DELEGATION_VERIFY) => self.delegation_verify(body),
            ("POST", paths::INSTALL_RING) => self.install_ring_body(body),
            ("GET", paths::SERVICE_INFO) => Ok(self.info()),
            (_, p) if is_route(p) => Err(ApiError::new(codes::METHOD_NOT_ALLOWED, format!("{method} {p}"))),
            (_, p) => Err(ApiError::new(codes::NOT_FOUND, format!("no route {p}"))),
        };
        result.unwrap_or_else(|e| e.reply())
    }

    fn mutate<T>(&self, f: impl FnOnce(&mut PseudonymLedger) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let mut guard = self.write();
        let inner = &mut *guard;
        if inner.broken {
            return Err(ApiError::internal("event log write failed earlier; restart the node"));
        }
        let out = f(&mut inner.ledger);
        let events = inner.ledger.take_events();
        if let Some(log) = inner.log.as_mut() {
            if let Err(e) = log.append_all(&events) {
                inner.broken = true;
                tracing::error!(error = %e, "ledger log append failed");
                return Err(ApiError::internal("event log write failed"));
            }
        }
        out
    }

    fn challenge(&self) -> Result<Reply, ApiError> {
        let nonce = self.mutate(|l| Ok(l.issue_challenge()))?;
        Ok(Reply::ok(
            kinds::CHALLENGE,
            &ChallengeBody {
                service_id: self.config.service_id.clone(),
                nonce: hex::encode(nonce),
                scopes: self.config.scopes.clone(),
            },
        ))
    }

    fn register(&self, body: &[u8]) -> Result<Reply, ApiError> {
        let req: RegistrationBody = open_body(body, kinds::REGISTRATION)?;
        let params = &self.config.params;
        let challenge: Nonce = decode_hex_array(&req.challenge, "challenge")?;
        let pres = Presentation::from_doc(&req.presentation, params)?;
        let expected = Expected {
            service_id: req.service_id,
            scope: req.scope,
            challenge,
        };
        // Verification runs under the shared lock; the limit check and
        // increment run under the exclusive one.
        let verified = {
            let inner = self.read();
            verify_presentation(&self.config, &inner.rings, &inner.ledger, &pres, &expected)?
        };
        let account_id = self.mutate(|l| Ok(register_account(&self.config, l, &verified)?))?;
        Ok(Reply::ok(
            kinds::ACCOUNT,
            &AccountBody {
                account_id,
                issuer_id: verified.issuer_id,
                tag: params.element_hex(&verified.tag),
            },
        ))
    }

    fn suspend(&self, body: &[u8]) -> Result<Reply, ApiError> {
        let req: SuspensionBody = open_body(body, kinds::SUSPENSION)?;
        if self.config.issuer(&req.issuer_id).is_none() {
            return Err(RelyingPartyError::UnknownIssuer(req.issuer_id).into());
        }
        let tag = element_from_hex(&self.config.params, &req.tag, "tag")?;
        self.mutate(|l| {
            l.suspend(&req.issuer_id, &tag);
            Ok(())
        })?;
        Ok(Reply::ok(
            kinds::SUSPENDED,
            &SuspensionBody {
                issuer_id: req.issuer_id,
                tag: self.config.params.element_hex(&tag),
            },
        ))
    }

    fn delegation_verify(&self, body: &[u8]) -> Result<Reply, ApiError> {
        let req: DelegationCheckBody = open_body(body, kinds::DELEGATION_CHECK)?;
        let att = DelegationAttestation::from_doc(&req.attestation, &self.config.params)?;
        let inner = self.read();
        let valid = check_delegation(&self.config, &inner.ledger, &att, &req.scope, req.now)?;
        Ok(Reply::ok(kinds::DELEGATION_STATUS, &DelegationStatusBody { valid }))
    }

    fn install_ring_body(&self, body: &[u8]) -> Result<Reply, ApiError> {
        let doc: RingDoc = open_body(body, kinds::RING)?;
        let ring = EpochRing::from_doc(&doc, &self.config.params)?;
        let installed = self.install_ring(ring)?;
        Ok(Reply::ok(kinds::RING_INSTALLED, &installed))
    }

    /// Verifies a snapshot against the pinned issuer key and makes it the
    /// current ring for that issuer. Older epochs are refused.
    pub fn install_ring(&self, ring: EpochRing) -> Result<RingInstalledBody, ApiError> {
        let issuer = self
            .config
            .issuer(&ring.issuer_id)
            .ok_or_else(|| RelyingPartyError::UnknownIssuer(ring.issuer_id.clone()))?;
        if !verify_ring(&self.config.params, &issuer.public_key, &ring) {
            return Err(RelyingPartyError::BadRingSignature.into());
        }
        let mut inner = self.write();
        if let Some(held) = inner.rings.get(&ring.issuer_id) {
            if held.epoch > ring.epoch {
                return Err(RelyingPartyError::StaleEpoch {
                    presented: ring.epoch,
                    current: held.epoch,
                }
                .into());
            }
        }
        let installed = RingInstalledBody {
            issuer_id: ring.issuer_id.clone(),
            epoch: ring.epoch,
            size: ring.len(),
        };
        inner.rings.insert(ring.issuer_id.clone(), ring);
        Ok(installed)
    }

    /// Whether `ring` differs from the snapshot held for its issuer.
    pub fn ring_is_news(&self, ring: &EpochRing) -> bool {
        self.read().rings.get(&ring.issuer_id) != Some(ring)
    }

    fn info(&self) -> Reply {
        let params = &self.config.params;
        Reply::ok(
            kinds::SERVICE_INFO,
            &ServiceInfoBody {
                service_id: self.config.service_id.clone(),
                params: params.name().to_owned(),
                account_limit: self.config.account_limit,
                scopes: self.config.scopes.clone(),
                accepted_issuers: self
                    .config
                    .accepted_issuers
                    .iter()
                    .map(|a| AcceptedIssuerBody {
                        issuer_id: a.issuer_id.clone(),
                        public_key: params.element_hex(&a.public_key),
                    })
                    .collect(),
            },
        )
    }
}

fn is_route(path: &str) -> bool {
    [
        paths::CHALLENGE,
        paths::REGISTER,
        paths::SUSPEND,
        paths::DELEGATION_VERIFY,
        paths::INSTALL_RING,
        paths::SERVICE_INFO,
    ]
    .contains(&path)
}

pub fn log_path(dir: &Path) -> PathBuf {
    dir.join(SERVICE_LOG)
}
