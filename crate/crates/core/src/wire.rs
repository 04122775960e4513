//! JSON representations of protocol objects.
//!
//! Integers travel as lowercase fixed-width hex. Decoding validates every
//! field against the group parameters before anything reaches domain code.

use crate::crypto::{GroupElement, GroupParams, RingSignature, SchnorrSignature};
use crate::encoding::hex_array;
use crate::issuance::{EnrollmentRequest, EpochRing};
use crate::wallet::{DelegationAttestation, Presentation};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const WIRE_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("malformed {0}")]
    Malformed(String),
    #[error("unsupported wire version {0}")]
    UnsupportedVersion(u64),
    #[error("parameter set {found:?} does not match {expected:?}")]
    ParamsMismatch { expected: String, found: String },
}

fn malformed(what: &str) -> WireError {
    WireError::Malformed(what.to_owned())
}

/// Versioned wrapper around every request and response body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEnvelope {
    pub version: u64,
    pub kind: String,
    pub body: serde_json::Value,
}

impl WireEnvelope {
    pub fn new<T: Serialize>(kind: &str, body: &T) -> Self {
        Self {
            version: WIRE_VERSION as u64,
            kind: kind.to_owned(),
            body: serde_json::to_value(body).expect("wire bodies serialize"),
        }
    }

    /// Checks the version and kind, then decodes the body.
    pub fn open<T: for<'de> Deserialize<'de>>(self, kind: &str) -> Result<T, WireError> {
        if self.version != WIRE_VERSION as u64 {
            return Err(WireError::UnsupportedVersion(self.version));
        }
        if self.kind != kind {
            return Err(WireError::Malformed(format!("expected {kind}, got {}", self.kind)));
        }
        serde_json::from_value(self.body).map_err(|e| WireError::Malformed(e.to_string()))
    }
}

/// Conversion between a domain object and its JSON document.
pub trait Wire: Sized {
    type Doc: Serialize + for<'de> Deserialize<'de>;

    fn to_doc(&self, params: &GroupParams) -> Self::Doc;
    fn from_doc(doc: &Self::Doc, params: &GroupParams) -> Result<Self, WireError>;

    fn to_json(&self, params: &GroupParams) -> serde_json::Value {
        serde_json::to_value(self.to_doc(params)).expect("wire documents serialize")
    }

    fn from_json(value: serde_json::Value, params: &GroupParams) -> Result<Self, WireError> {
        let doc: Self::Doc = serde_json::from_value(value).map_err(|e| WireError::Malformed(e.to_string()))?;
        Self::from_doc(&doc, params)
    }
}

pub fn element_from_hex(params: &GroupParams, s: &str, what: &str) -> Result<GroupElement, WireError> {
    params.element_from_hex(s).map_err(|_| malformed(what))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchnorrDoc {
    pub c: String,
    pub s: String,
}

impl Wire for SchnorrSignature {
    type Doc = SchnorrDoc;

    fn to_doc(&self, params: &GroupParams) -> SchnorrDoc {
        SchnorrDoc {
            c: params.scalar_hex(&self.c),
            s: params.scalar_hex(&self.s),
        }
    }

    fn from_doc(doc: &SchnorrDoc, params: &GroupParams) -> Result<Self, WireError> {
        SchnorrSignature::from_hex(params, &doc.c, &doc.s).map_err(|_| malformed("schnorr signature"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingDoc {
    pub issuer_id: String,
    pub params: String,
    pub epoch: u64,
    pub cohorts: Vec<Vec<String>>,
    pub snapshot_sig: SchnorrDoc,
}

fn check_params(params: &GroupParams, found: &str) -> Result<(), WireError> {
    if params.name() != found {
        return Err(WireError::ParamsMismatch {
            expected: params.name().to_owned(),
            found: found.to_owned(),
        });
    }
    Ok(())
}

impl Wire for EpochRing {
    type Doc = RingDoc;

    fn to_doc(&self, params: &GroupParams) -> RingDoc {
        RingDoc {
            issuer_id: self.issuer_id.clone(),
            params: params.name().to_owned(),
            epoch: self.epoch,
            cohorts: self
                .cohorts
                .iter()
                .map(|c| c.iter().map(|y| params.element_hex(y)).collect())
                .collect(),
            snapshot_sig: self.snapshot_sig.to_doc(params),
        }
    }

    fn from_doc(doc: &RingDoc, params: &GroupParams) -> Result<Self, WireError> {
        check_params(params, &doc.params)?;
        Ok(EpochRing {
            issuer_id: doc.issuer_id.clone(),
            epoch: doc.epoch,
            cohorts: doc
                .cohorts
                .iter()
                .map(|c| c.iter().map(|y| element_from_hex(params, y, "ring member")).collect())
                .collect::<Result<_, _>>()?,
            snapshot_sig: SchnorrSignature::from_doc(&doc.snapshot_sig, params)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingSignatureDoc {
    pub c1: String,
    pub s: Vec<String>,
    pub tag: String,
}

impl Wire for RingSignature {
    type Doc = RingSignatureDoc;

    fn to_doc(&self, params: &GroupParams) -> RingSignatureDoc {
        RingSignatureDoc {
            c1: params.scalar_hex(self.chain_seed()),
            s: self.responses().iter().map(|s| params.scalar_hex(s)).collect(),
            tag: params.element_hex(self.tag()),
        }
    }

    fn from_doc(doc: &RingSignatureDoc, params: &GroupParams) -> Result<Self, WireError> {
        RingSignature::from_hex_parts(params, &doc.c1, &doc.s, &doc.tag).map_err(|e| WireError::Malformed(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationDoc {
    pub issuer_id: String,
    pub epoch: u64,
    pub cohort_index: usize,
    pub signature: RingSignatureDoc,
}

impl Wire for Presentation {
    type Doc = PresentationDoc;

    fn to_doc(&self, params: &GroupParams) -> PresentationDoc {
        PresentationDoc {
            issuer_id: self.issuer_id.clone(),
            epoch: self.epoch,
            cohort_index: self.cohort_index,
            signature: self.signature.to_doc(params),
        }
    }

    fn from_doc(doc: &PresentationDoc, params: &GroupParams) -> Result<Self, WireError> {
        Ok(Presentation {
            issuer_id: doc.issuer_id.clone(),
            epoch: doc.epoch,
            cohort_index: doc.cohort_index,
            signature: RingSignature::from_doc(&doc.signature, params)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelegationDoc {
    pub issuer_id: String,
    pub tag: String,
    pub agent_pub: String,
    pub scope: String,
    pub expiry: u64,
    pub signature: SchnorrDoc,
}

impl Wire for DelegationAttestation {
    type Doc = DelegationDoc;

    fn to_doc(&self, params: &GroupParams) -> DelegationDoc {
        DelegationDoc {
            issuer_id: self.issuer_id.clone(),
            tag: params.element_hex(&self.tag),
            agent_pub: params.element_hex(&self.agent_pub),
            scope: self.scope.clone(),
            expiry: self.expiry,
            signature: self.signature.to_doc(params),
        }
    }

    fn from_doc(doc: &DelegationDoc, params: &GroupParams) -> Result<Self, WireError> {
        Ok(DelegationAttestation {
            issuer_id: doc.issuer_id.clone(),
            tag: element_from_hex(params, &doc.tag, "tag")?,
            agent_pub: element_from_hex(params, &doc.agent_pub, "agent key")?,
            scope: doc.scope.clone(),
            expiry: doc.expiry,
            signature: SchnorrSignature::from_doc(&doc.signature, params)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrollmentRequestDoc {
    pub root_id: String,
    pub public_key: String,
    pub recovery_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reenroll_ticket: Option<String>,
}

impl Wire for EnrollmentRequest {
    type Doc = EnrollmentRequestDoc;

    fn to_doc(&self, params: &GroupParams) -> EnrollmentRequestDoc {
        EnrollmentRequestDoc {
            root_id: self.root_id.clone(),
            public_key: params.element_hex(&self.public_key),
            recovery_hash: hex::encode(self.recovery_hash),
            reenroll_ticket: self.reenroll_ticket.map(hex::encode),
        }
    }

    fn from_doc(doc: &EnrollmentRequestDoc, params: &GroupParams) -> Result<Self, WireError> {
        Ok(EnrollmentRequest {
            root_id: doc.root_id.clone(),
            public_key: element_from_hex(params, &doc.public_key, "public key")?,
            recovery_hash: hex_array(&doc.recovery_hash).ok_or_else(|| malformed("recovery hash"))?,
            reenroll_ticket: doc
                .reenroll_ticket
                .as_deref()
                .map(|t| hex_array(t).ok_or_else(|| malformed("ticket")))
                .transpose()?,
        })
    }
}
