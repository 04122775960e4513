use super::{CryptoError, GroupElement, GroupParams, Scalar};
use crate::encoding::Encoder;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

/// Domain prefix for the context base `h`.
pub const DOMAIN_CTX: &[u8] = b"PHC/ctx";
/// Domain prefix for ring-signature chain challenges.
pub const DOMAIN_CHAIN: &[u8] = b"PHC/chain";
/// Domain prefix for Schnorr challenges.
pub const DOMAIN_SCHNORR: &[u8] = b"PHC/schnorr";

const MAX_GROUP_RETRIES: u32 = 256;

fn transcript(domain: &[u8], parts: &[&[u8]]) -> Encoder {
    assert!(!domain.is_empty(), "hash domain must be nonempty");
    let mut enc = Encoder::new();
    enc.bytes(domain).count(parts.len());
    for part in parts {
        enc.bytes(part);
    }
    enc
}

/// SHA-256 of the canonical transcript, read big-endian and reduced mod `q`.
pub fn hash_to_scalar(domain: &[u8], parts: &[&[u8]], params: &GroupParams) -> Scalar {
    let digest = Sha256::digest(transcript(domain, parts).as_slice());
    params.scalar(BigUint::from_bytes_be(&digest))
}

/// Hashes onto the order-`q` subgroup by squaring a digest-derived residue.
///
/// The digest covers the transcript followed by a 4-byte retry counter; the
/// counter increments while the square lands on 0 or 1.
pub fn hash_to_group(
    domain: &[u8],
    parts: &[&[u8]],
    params: &GroupParams,
) -> Result<GroupElement, CryptoError> {
    let base = transcript(domain, parts).finish();
    for counter in 0..MAX_GROUP_RETRIES {
        let mut hasher = Sha256::new();
        hasher.update(&base);
        hasher.update(counter.to_be_bytes());
        let u = BigUint::from_bytes_be(&hasher.finalize()) % params.p();
        if let Some(h) = square_to_group(&u, params) {
            return Ok(h);
        }
    }
    Err(CryptoError::HashToGroupExhausted)
}

/// `u^2 mod p`, or `None` when the square is 0 or 1.
pub fn square_to_group(u: &BigUint, params: &GroupParams) -> Option<GroupElement> {
    let h = u * u % params.p();
    if h.is_zero() || h.is_one() {
        None
    } else {
        Some(params.trusted_element(h))
    }
}
