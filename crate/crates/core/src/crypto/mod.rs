//! Group arithmetic, hashing, and the two signature schemes the protocol is
//! built on: a linkable ring signature for presentations and a Schnorr
//! signature over a caller-chosen base for snapshots and delegation.

mod fixed_base;
mod group;
mod hash;
mod lsag;
mod mont;
mod primes;
mod schnorr;

pub use fixed_base::FixedBaseTable;
pub use group::{GroupElement, GroupParams, KeyPair, Scalar, PRESETS};
pub use hash::{hash_to_group, hash_to_scalar, square_to_group, DOMAIN_CHAIN, DOMAIN_CTX, DOMAIN_SCHNORR};
pub(crate) use lsag::{sign_with_base, verify_with_base};
pub use lsag::{
    context_base, lsag_sign, lsag_verify, lsag_verify_traced, tags_link, RingSignature,
    Verification, VerifyStep,
};
pub use primes::is_probable_prime;
pub use schnorr::{schnorr_sign, schnorr_verify, SchnorrSignature};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("bit length {0} is not supported (must be even and at least 16)")]
    InvalidBitLength(u64),
    #[error("no safe prime found within {attempts} candidates")]
    GenerationTimeout { attempts: u64 },
    #[error("invalid group parameters: {0}")]
    InvalidParams(String),
    #[error("unknown parameter preset {0:?}")]
    UnknownPreset(String),
    #[error("secret exponent must be nonzero")]
    ZeroSecret,
    #[error("value is not an element of the prime-order subgroup")]
    NotInGroup,
    #[error("scalar is not reduced modulo the group order")]
    ScalarOutOfRange,
    #[error("hash-to-group exhausted its retry budget")]
    HashToGroupExhausted,
    #[error("ring is empty")]
    EmptyRing,
    #[error("ring contains a duplicate member")]
    DuplicateRingMember,
    #[error("signer index {index} out of range for ring of {len}")]
    InvalidIndex { index: usize, len: usize },
    #[error("secret key does not match the ring member at the signer index")]
    KeyMismatch,
    #[error("malformed signature: {0}")]
    MalformedSignature(String),
}
