use phc_core::eventlog::LogError;
use phc_core::issuance::IssuanceError;
use phc_core::relying_party::RelyingPartyError;
use phc_core::wallet::WalletError;
use phc_core::wire::WireError;
use phc_core::CryptoError;
use thiserror::Error;

use crate::protocol::{envelope_bytes, kinds, ErrorBody, Reply};

/// Machine-readable error codes and their HTTP statuses.
pub mod codes {
    pub const DUPLICATE_ENROLLMENT: &str = "duplicate-enrollment";
    pub const DUPLICATE_KEY: &str = "duplicate-key";
    pub const DUPLICATE_RECOVERY_CODE: &str = "duplicate-recovery-code";
    pub const INVALID_TICKET: &str = "invalid-ticket";
    pub const UNKNOWN_RECOVERY_CODE: &str = "unknown-recovery-code";
    pub const ALREADY_REVOKED_THIS_EPOCH: &str = "already-revoked-this-epoch";
    pub const UNKNOWN_EPOCH: &str = "unknown-epoch";
    pub const MALFORMED: &str = "malformed";
    pub const UNSUPPORTED_VERSION: &str = "unsupported-version";
    pub const PARAMS_MISMATCH: &str = "params-mismatch";
    pub const UNKNOWN_ISSUER: &str = "unknown-issuer";
    pub const MISSING_RING: &str = "missing-ring";
    pub const BAD_RING_SIGNATURE: &str = "bad-ring-signature";
    pub const STALE_EPOCH: &str = "stale-epoch";
    pub const REPLAYED_CHALLENGE: &str = "replayed-challenge";
    pub const INVALID_PROOF: &str = "invalid-proof";
    pub const WRONG_AUDIENCE: &str = "wrong-audience";
    pub const LIMIT_REACHED: &str = "limit-reached";
    pub const SUSPENDED_CREDENTIAL: &str = "suspended-credential";
    pub const UNKNOWN_PRINCIPAL: &str = "unknown-principal";
    pub const SUSPENDED_PRINCIPAL: &str = "suspended-principal";
    pub const NOT_FOUND: &str = "not-found";
    pub const METHOD_NOT_ALLOWED: &str = "method-not-allowed";
    pub const INTERNAL: &str = "internal";

    /// Every code with its status, in the order documented in protocol.md.
    pub const ALL: &[(&str, u16)] = &[
        (DUPLICATE_ENROLLMENT, 409),
        (DUPLICATE_KEY, 409),
        (DUPLICATE_RECOVERY_CODE, 409),
        (INVALID_TICKET, 403),
        (UNKNOWN_RECOVERY_CODE, 404),
        (ALREADY_REVOKED_THIS_EPOCH, 409),
        (UNKNOWN_EPOCH, 404),
        (MALFORMED, 400),
        (UNSUPPORTED_VERSION, 400),
        (PARAMS_MISMATCH, 400),
        (UNKNOWN_ISSUER, 403),
        (MISSING_RING, 503),
        (BAD_RING_SIGNATURE, 400),
        (STALE_EPOCH, 409),
        (REPLAYED_CHALLENGE, 409),
        (INVALID_PROOF, 401),
        (WRONG_AUDIENCE, 400),
        (LIMIT_REACHED, 403),
        (SUSPENDED_CREDENTIAL, 403),
        (UNKNOWN_PRINCIPAL, 404),
        (SUSPENDED_PRINCIPAL, 403),
        (NOT_FOUND, 404),
        (METHOD_NOT_ALLOWED, 405),
        (INTERNAL, 500),
    ];

    pub fn status(code: &str) -> u16 {
        ALL.iter().find(|(c, _)| *c == code).map(|(_, s)| *s).unwrap_or(500)
    }
}

/// An error as returned to a client.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(codes::MALFORMED, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(codes::INTERNAL, message)
    }

    pub fn status(&self) -> u16 {
        codes::status(self.code)
    }

    pub fn reply(&self) -> Reply {
        Reply {
            status: self.status(),
            body: envelope_bytes(
                kinds::ERROR,
                &ErrorBody {
                    code: self.code.to_owned(),
                    message: self.message.clone(),
                },
            ),
        }
    }
}

impl From<WireError> for ApiError {
    fn from(e: WireError) -> Self {
        let code = match e {
            WireError::Malformed(_) => codes::MALFORMED,
            WireError::UnsupportedVersion(_) => codes::UNSUPPORTED_VERSION,
            WireError::ParamsMismatch { .. } => codes::PARAMS_MISMATCH,
        };
        Self::new(code, e.to_string())
    }
}

impl From<CryptoError> for ApiError {
    fn from(e: CryptoError) -> Self {
        Self::malformed(e.to_string())
    }
}

impl From<IssuanceError> for ApiError {
    fn from(e: IssuanceError) -> Self {
        let code = match &e {
            IssuanceError::DuplicateEnrollment => codes::DUPLICATE_ENROLLMENT,
            IssuanceError::DuplicateKey => codes::DUPLICATE_KEY,
            IssuanceError::DuplicateRecoveryCode => codes::DUPLICATE_RECOVERY_CODE,
            IssuanceError::InvalidTicket => codes::INVALID_TICKET,
            IssuanceError::UnknownRecoveryCode => codes::UNKNOWN_RECOVERY_CODE,
            IssuanceError::AlreadyRevokedThisEpoch => codes::ALREADY_REVOKED_THIS_EPOCH,
            IssuanceError::UnknownEpoch(_) => codes::UNKNOWN_EPOCH,
            IssuanceError::Crypto(_) => codes::MALFORMED,
            IssuanceError::InvalidConfig(_) | IssuanceError::Replay(_) => codes::INTERNAL,
        };
        Self::new(code, e.to_string())
    }
}

impl From<RelyingPartyError> for ApiError {
    fn from(e: RelyingPartyError) -> Self {
        let code = match &e {
            RelyingPartyError::UnknownIssuer(_) => codes::UNKNOWN_ISSUER,
            RelyingPartyError::MissingRing(_) => codes::MISSING_RING,
            RelyingPartyError::BadRingSignature => codes::BAD_RING_SIGNATURE,
            RelyingPartyError::StaleEpoch { .. } => codes::STALE_EPOCH,
            RelyingPartyError::ReplayedChallenge => codes::REPLAYED_CHALLENGE,
            RelyingPartyError::InvalidProof => codes::INVALID_PROOF,
            RelyingPartyError::WrongAudience => codes::WRONG_AUDIENCE,
            RelyingPartyError::LimitReached => codes::LIMIT_REACHED,
            RelyingPartyError::SuspendedCredential => codes::SUSPENDED_CREDENTIAL,
            RelyingPartyError::UnknownPrincipal => codes::UNKNOWN_PRINCIPAL,
            RelyingPartyError::SuspendedPrincipal => codes::SUSPENDED_PRINCIPAL,
            RelyingPartyError::Crypto(_) => codes::MALFORMED,
            RelyingPartyError::InvalidConfig(_) | RelyingPartyError::Replay(_) => codes::INTERNAL,
        };
        Self::new(code, e.to_string())
    }
}

/// Failures opening, creating or persisting a node.
#[derive(Debug, Error)]
pub enum NodeError {
    #[error("data directory {0} is already initialized")]
    AlreadyInitialized(String),
    #[error("data directory {0} is not initialized")]
    NotInitialized(String),
    #[error("invalid setup: {0}")]
    InvalidSetup(String),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Issuance(#[from] IssuanceError),
    #[error(transparent)]
    RelyingParty(#[from] RelyingPartyError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures seen by a client.
#[derive(Debug, Error)]
pub enum ClientError {
    #[error("{status} {code}: {message}")]
    Api { status: u16, code: String, message: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Malformed(String),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Wallet(#[from] WalletError),
}

impl ClientError {
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            _ => None,
        }
    }
}
