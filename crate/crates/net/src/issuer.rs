//! Issuer node: request dispatch over an [`IssuerState`] backed by a log.

use std::path::{Path, PathBuf};
use std::sync::RwLock;

use phc_core::eventlog::{read_events, EventLog};
use phc_core::issuance::{EnrollmentRequest, IssuerEvent, IssuerState};
use phc_core::wire::Wire;

use crate::error::{codes, ApiError, NodeError};
use crate::protocol::*;
use crate::{decode_hex, open_body};

pub const ISSUER_LOG: &str = "issuer.log";

struct Inner {
    state: IssuerState,
    log: Option<EventLog>,
    /// Set when a write to the log failed; the node then refuses mutations.
    broken: bool,
}

pub struct IssuerNode {
    inner: RwLock<Inner>,
}

impl IssuerNode {
    /// A node with no persistence.
    pub fn in_memory(mut state: IssuerState) -> Self {
        state.disable_journal();
        Self::from_parts(state, None)
    }

    /// Initializes `dir` with a fresh issuer's log.
    pub fn create(dir: &Path, mut state: IssuerState) -> Result<Self, NodeError> {
        let path = log_path(dir);
        if path.exists() {
            return Err(NodeError::AlreadyInitialized(dir.display().to_string()));
        }
        std::fs::create_dir_all(dir)?;
        state.enable_journal();
        let mut log = EventLog::open(&path)?;
        log.append_all(&state.take_events())?;
        Ok(Self::from_parts(state, Some(log)))
    }

    /// Rebuilds the issuer by replaying its log.
    pub fn open(dir: &Path) -> Result<Self, NodeError> {
        let path = log_path(dir);
        if !path.exists() {
            return Err(NodeError::NotInitialized(dir.display().to_string()));
        }
        let events: Vec<IssuerEvent> = read_events(&path)?;
        if events.is_empty() {
            return Err(NodeError::NotInitialized(dir.display().to_string()));
        }
        let mut state = IssuerState::replay(events)?;
        state.enable_journal();
        let log = EventLog::open(&path)?;
        Ok(Self::from_parts(state, Some(log)))
    }

    fn from_parts(state: IssuerState, log: Option<EventLog>) -> Self {
        Self {
            inner: RwLock::new(Inner {
                state,
                log,
                broken: false,
            }),
        }
    }

    pub fn issuer_id(&self) -> String {
        self.read().state.issuer_id().to_owned()
    }

    pub fn current_epoch(&self) -> u64 {
        self.read().state.current_epoch()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Serves one request.
    pub fn handle(&self, method: &str, path: &str, body: &[u8]) -> Reply {
        let result = match (method, path) {
            ("POST", paths::ENROLL) => self.enroll(body),
            ("POST", paths::REVOKE) => self.revoke(body),
            ("POST", paths::ADVANCE_EPOCH) => self.advance_epoch(),
            ("GET", paths::ISSUER_KEY) => Ok(self.issuer_key()),
            ("GET", p) if p.starts_with(paths::RING_PREFIX) => self.ring(&p[paths::RING_PREFIX.len()..]),
            (_, p) if is_route(p) => Err(ApiError::new(codes::METHOD_NOT_ALLOWED, format!("{method} {p}"))),
            (_, p) => Err(ApiError::new(codes::NOT_FOUND, format!("no route {p}"))),
        };
        result.unwrap_or_else(|e| e.reply())
    }

    /// Runs a mutation and persists the events it produced before replying.
    fn mutate<T>(&self, f: impl FnOnce(&mut IssuerState) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let mut guard = self.write();
        let inner = &mut *guard;
        if inner.broken {
            return Err(ApiError::internal("event log write failed earlier; restart the node"));
        }
        let out = f(&mut inner.state);
        let events = inner.state.take_events();
        if let Some(log) = inner.log.as_mut() {
            if let Err(e) = log.append_all(&events) {
                inner.broken = true;
                tracing::error!(error = %e, "issuer log append failed");
                return Err(ApiError::internal("event log write failed"));
            }
        }
        out
    }

    fn enroll(&self, body: &[u8]) -> Result<Reply, ApiError> {
        let doc: EnrollmentRequestDoc = open_body(body, kinds::ENROLLMENT_REQUEST)?;
        let params = self.read().state.params().clone();
        let req = EnrollmentRequest::from_doc(&doc, &params)?;
        let (issuer_id, enrolled) = self.mutate(|s| Ok((s.issuer_id().to_owned(), s.enroll(&req)?)))?;
        Ok(Reply::ok(
            kinds::ENROLLED,
            &EnrolledBody {
                issuer_id,
                epoch: enrolled.epoch,
                cohort_index: enrolled.cohort_index,
                position: enrolled.position,
            },
        ))
    }

    fn revoke(&self, body: &[u8]) -> Result<Reply, ApiError> {
        let req: RevocationRequestBody = open_body(body, kinds::REVOCATION_REQUEST)?;
        let code = decode_hex(&req.recovery_code, "recovery code")?;
        let ticket = self.mutate(|s| Ok(s.revoke(&code, &req.root_id)?))?;
        Ok(Reply::ok(
            kinds::REVOCATION,
            &RevocationBody {
                ticket: hex::encode(ticket),
            },
        ))
    }

    fn advance_epoch(&self) -> Result<Reply, ApiError> {
        let epoch = self.mutate(|s| Ok(s.advance_epoch()?))?;
        Ok(Reply::ok(kinds::EPOCH, &EpochBody { epoch }))
    }

    fn issuer_key(&self) -> Reply {
        let inner = self.read();
        let s = &inner.state;
        let config = s.config();
        Reply::ok(
            kinds::ISSUER_KEY,
            &IssuerKeyBody {
                issuer_id: config.issuer_id.clone(),
                params: config.params.name().to_owned(),
                public_key: config.params.element_hex(s.public_key()),
                cohort_size: config.cohort_size,
                enforce_limit: config.enforce_limit,
                evidence_label: config.evidence_label.clone(),
                current_epoch: s.current_epoch(),
            },
        )
    }

    fn ring(&self, which: &str) -> Result<Reply, ApiError> {
        let inner = self.read();
        let s = &inner.state;
        let ring = if which == "current" {
            s.current_ring_snapshot()
        } else {
            let epoch = parse_epoch(which)?;
            s.publish_ring(epoch)?
        };
        Ok(Reply::ok(kinds::RING, &ring.to_doc(s.params())))
    }
}

fn parse_epoch(text: &str) -> Result<u64, ApiError> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ApiError::malformed(format!("epoch {text:?} is not a decimal integer or \"current\"")));
    }
    text.parse()
        .map_err(|_| ApiError::malformed(format!("epoch {text:?} is out of range")))
}

fn is_route(path: &str) -> bool {
    [paths::ENROLL, paths::REVOKE, paths::ADVANCE_EPOCH, paths::ISSUER_KEY].contains(&path)
        || path.starts_with(paths::RING_PREFIX)
}

pub fn log_path(dir: &Path) -> PathBuf {
    dir.join(ISSUER_LOG)
}
