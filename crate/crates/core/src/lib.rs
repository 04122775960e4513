//! Personhood credentials: one-per-person enrollment, unlinkable
//! service-scoped pseudonyms, relying-party rate limits and suspension,
//! delegation to agents, and a deterministic ecosystem simulator.

pub mod crypto;
pub mod encoding;
pub mod eventlog;
pub mod issuance;
pub mod relying_party;
pub mod sim;
pub mod wallet;
pub mod wire;

pub use crypto::{
    CryptoError, GroupElement, GroupParams, KeyPair, RingSignature, Scalar, SchnorrSignature,
};
