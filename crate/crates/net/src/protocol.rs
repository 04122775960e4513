//! Endpoint paths, envelope kinds and body documents.
//!
//! Every request and response body is a [`WireEnvelope`]; the structs here
//! are the `body` payloads. Integers and byte strings travel as lowercase hex.

use phc_core::wire::{DelegationDoc, PresentationDoc, WireEnvelope};
use serde::{Deserialize, Serialize};

pub use phc_core::wire::{EnrollmentRequestDoc, RingDoc};

pub mod paths {
    pub const ENROLL: &str = "/enroll";
    pub const REVOKE: &str = "/revoke";
    /// Followed by a decimal epoch or `current`.
    pub const RING_PREFIX: &str = "/ring/";
    pub const ADVANCE_EPOCH: &str = "/admin/advance-epoch";
    pub const ISSUER_KEY: &str = "/issuer-key";

    pub const CHALLENGE: &str = "/challenge";
    pub const REGISTER: &str = "/register";
    pub const SUSPEND: &str = "/suspend";
    pub const DELEGATION_VERIFY: &str = "/delegation/verify";
    pub const INSTALL_RING: &str = "/admin/ring";
    pub const SERVICE_INFO: &str = "/service-info";
}

pub mod kinds {
    pub const ENROLLMENT_REQUEST: &str = "enrollment-request";
    pub const ENROLLED: &str = "enrolled";
    pub const REVOCATION_REQUEST: &str = "revocation-request";
    pub const REVOCATION: &str = "revocation";
    pub const RING: &str = "ring";
    pub const EPOCH: &str = "epoch";
    pub const ISSUER_KEY: &str = "issuer-key";

    pub const CHALLENGE: &str = "challenge";
    pub const REGISTRATION: &str = "registration";
    pub const ACCOUNT: &str = "account";
    pub const SUSPENSION: &str = "suspension";
    pub const SUSPENDED: &str = "suspended";
    pub const DELEGATION_CHECK: &str = "delegation-check";
    pub const DELEGATION_STATUS: &str = "delegation-status";
    pub const RING_INSTALLED: &str = "ring-installed";
    pub const SERVICE_INFO: &str = "service-info";

    pub const ERROR: &str = "error";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnrolledBody {
    pub issuer_id: String,
    pub epoch: u64,
    pub cohort_index: usize,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevocationRequestBody {
    pub recovery_code: String,
    pub root_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevocationBody {
    pub ticket: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochBody {
    pub epoch: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssuerKeyBody {
    pub issuer_id: String,
    pub params: String,
    pub public_key: String,
    pub cohort_size: usize,
    pub enforce_limit: bool,
    pub evidence_label: String,
    pub current_epoch: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChallengeBody {
    pub service_id: String,
    pub nonce: String,
    pub scopes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistrationBody {
    pub service_id: String,
    pub scope: String,
    pub challenge: String,
    pub presentation: PresentationDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccountBody {
    pub account_id: String,
    pub issuer_id: String,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuspensionBody {
    pub issuer_id: String,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelegationCheckBody {
    pub attestation: DelegationDoc,
    /// Scope of the principal's account.
    pub scope: String,
    /// Caller's clock, in the same units as the attestation expiry.
    pub now: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelegationStatusBody {
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingInstalledBody {
    pub issuer_id: String,
    pub epoch: u64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptedIssuerBody {
    pub issuer_id: String,
    pub public_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceInfoBody {
    pub service_id: String,
    pub params: String,
    pub account_limit: u32,
    pub scopes: Vec<String>,
    pub accepted_issuers: Vec<AcceptedIssuerBody>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// An HTTP response produced by a node: status plus serialized envelope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub status: u16,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn ok<T: Serialize>(kind: &str, body: &T) -> Self {
        Self {
            status: 200,
            body: envelope_bytes(kind, body),
        }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn envelope(&self) -> Option<WireEnvelope> {
        serde_json::from_slice(&self.body).ok()
    }

    /// Error code if this is an error reply.
    pub fn error_code(&self) -> Option<String> {
        let env = self.envelope()?;
        if env.kind != kinds::ERROR {
            return None;
        }
        env.open::<ErrorBody>(kinds::ERROR).ok().map(|e| e.code)
    }
}

pub fn envelope_bytes<T: Serialize>(kind: &str, body: &T) -> Vec<u8> {
    serde_json::to_vec(&WireEnvelope::new(kind, body)).expect("envelopes serialize")
}
