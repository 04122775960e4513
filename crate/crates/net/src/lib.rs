//! Networked hosting for issuers and relying parties.
//!
//! [`IssuerNode`] and [`ServiceNode`] turn requests into replies
//! synchronously and persist every state change to an append-only log
//! before answering. [`server`] exposes them over HTTP and [`client`]
//! talks to them.

pub mod client;
pub mod error;
pub mod issuer;
pub mod protocol;
pub mod server;
pub mod service;
pub mod store;

pub use client::{IssuerClient, ServiceClient};
pub use error::{codes, ApiError, ClientError, NodeError};
pub use issuer::IssuerNode;
pub use protocol::Reply;
pub use service::{IssuerPin, ServiceNode, ServiceSetup};

use phc_core::encoding::hex_array;
use phc_core::wire::WireEnvelope;
use serde::de::DeserializeOwned;

pub const ENV_BIND_ADDR: &str = "PHC_BIND_ADDR";
pub const ENV_DATA_DIR: &str = "PHC_DATA_DIR";
pub const ENV_PARAMS: &str = "PHC_PARAMS";
pub const DEFAULT_BIND_ADDR: &str = "127.0.0.1:7300";

pub(crate) fn open_body<T: DeserializeOwned>(body: &[u8], kind: &str) -> Result<T, ApiError> {
    let env: WireEnvelope =
        serde_json::from_slice(body).map_err(|e| ApiError::malformed(format!("envelope: {e}")))?;
    Ok(env.open(kind)?)
}

pub(crate) fn decode_hex(s: &str, what: &str) -> Result<Vec<u8>, ApiError> {
    if s.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(ApiError::malformed(format!("{what} must be lowercase hex")));
    }
    hex::decode(s).map_err(|_| ApiError::malformed(format!("{what} is not hex")))
}

pub(crate) fn decode_hex_array<const N: usize>(s: &str, what: &str) -> Result<[u8; N], ApiError> {
    hex_array(s).ok_or_else(|| ApiError::malformed(format!("{what} must be {} lowercase hex digits", 2 * N)))
}
