//! Holder-side custody: identities, credentials, presentations, and
//! delegation attestations.

use crate::crypto::{
    context_base, lsag_sign, schnorr_sign, sign_with_base, CryptoError, GroupElement, GroupParams, KeyPair,
    RingSignature, SchnorrSignature,
};
use crate::encoding::Encoder;
use crate::issuance::{recovery_hash, Digest32, EpochRing};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const CREDENTIAL_FILE_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum WalletError {
    #[error("credential is for epoch {credential} but the ring is for epoch {ring}")]
    StaleRing { credential: u64, ring: u64 },
    #[error("credential key is not in the ring")]
    KeyNotInRing,
    #[error("ring belongs to issuer {ring:?}, credential to {credential:?}")]
    IssuerMismatch { credential: String, ring: String },
    #[error("malformed credential file: {0}")]
    MalformedFile(String),
    #[error("unsupported credential file version {0}")]
    UnsupportedVersion(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A freshly generated keypair and recovery code, before enrollment.
pub fn create_identity<R: RngCore + CryptoRng + ?Sized>(params: &GroupParams, rng: &mut R) -> (KeyPair, [u8; 16]) {
    let keypair = KeyPair::generate(params, rng);
    let mut code = [0u8; 16];
    rng.fill_bytes(&mut code);
    (keypair, code)
}

/// An enrolled credential as held on the holder's device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credential {
    pub issuer_id: String,
    pub params: GroupParams,
    pub epoch: u64,
    pub keypair: KeyPair,
    pub cohort_index: usize,
    pub position: usize,
    pub recovery_code: Vec<u8>,
}

impl Credential {
    /// Recovery commitment as sent at enrollment under `root_id`.
    pub fn recovery_hash(&self, root_id: &str) -> Digest32 {
        recovery_hash(root_id, &self.recovery_code)
    }

    /// Pseudonym this credential presents under a given context.
    pub fn tag_for(&self, ctx: &PresentationContext) -> Result<GroupElement, CryptoError> {
        let h = context_base(&self.params, &ctx.ctx_bytes())?;
        Ok(self
            .params
            .element(self.params.pow(h.value(), self.keypair.secret()))
            .expect("nonzero power of a subgroup member"))
    }
}

/// Where and for what a presentation is made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresentationContext {
    pub issuer_id: String,
    pub service_id: String,
    pub scope: String,
    pub challenge: [u8; 16],
}

impl PresentationContext {
    /// Tag context: issuer, service, and scope. The epoch and challenge are
    /// left out so the pseudonym is stable for this service.
    pub fn ctx_bytes(&self) -> Vec<u8> {
        pseudonym_context(&self.issuer_id, &self.service_id, &self.scope)
    }

    /// Signed message, binding the service's fresh challenge.
    pub fn message(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.str(&self.service_id).str(&self.scope).bytes(&self.challenge);
        enc.finish()
    }
}

pub fn pseudonym_context(issuer_id: &str, service_id: &str, scope: &str) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.str(issuer_id).str(service_id).str(scope);
    enc.finish()
}

/// What a relying party receives: the issuer, epoch, cohort, and a ring
/// signature whose tag is the holder's pseudonym.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub issuer_id: String,
    pub epoch: u64,
    pub cohort_index: usize,
    pub signature: RingSignature,
}

impl Presentation {
    pub fn tag(&self) -> &GroupElement {
        self.signature.tag()
    }
}

/// The holder's cohort and their index in it, re-locating the key when
/// revocations have shifted positions since enrollment.
fn signing_cohort<'r>(cred: &Credential, ring: &'r EpochRing) -> Result<(usize, &'r [GroupElement], usize), WalletError> {
    if ring.issuer_id != cred.issuer_id {
        return Err(WalletError::IssuerMismatch {
            credential: cred.issuer_id.clone(),
            ring: ring.issuer_id.clone(),
        });
    }
    if ring.epoch != cred.epoch {
        return Err(WalletError::StaleRing {
            credential: cred.epoch,
            ring: ring.epoch,
        });
    }
    let me = cred.keypair.public();
    if let Some(cohort) = ring.cohort(cred.cohort_index) {
        if cohort.get(cred.position) == Some(me) {
            return Ok((cred.cohort_index, cohort, cred.position));
        }
        if let Some(pos) = cohort.iter().position(|y| y == me) {
            return Ok((cred.cohort_index, cohort, pos));
        }
    }
    let (ci, pos) = ring.locate(me).ok_or(WalletError::KeyNotInRing)?;
    Ok((ci, ring.cohort(ci).unwrap(), pos))
}

pub fn create_presentation<R: RngCore + CryptoRng + ?Sized>(
    cred: &Credential,
    ring: &EpochRing,
    ctx: &PresentationContext,
    rng: &mut R,
) -> Result<Presentation, WalletError> {
    let (cohort_index, cohort, position) = signing_cohort(cred, ring)?;
    let signature = lsag_sign(
        &cred.params,
        cohort,
        position,
        cred.keypair.secret(),
        &ctx.ctx_bytes(),
        &ctx.message(),
        rng,
    )?;
    Ok(Presentation {
        issuer_id: cred.issuer_id.clone(),
        epoch: cred.epoch,
        cohort_index,
        signature,
    })
}

/// Presentation whose tag base is supplied directly. Only the linkage
/// experiment uses this, to model broken pseudonym derivations.
pub(crate) fn create_presentation_with_base<R: RngCore + CryptoRng + ?Sized>(
    cred: &Credential,
    ring: &EpochRing,
    base: &GroupElement,
    message: &[u8],
    rng: &mut R,
) -> Result<Presentation, WalletError> {
    let (cohort_index, cohort, position) = signing_cohort(cred, ring)?;
    let signature = sign_with_base(&cred.params, cohort, position, cred.keypair.secret(), base, message, rng)?;
    Ok(Presentation {
        issuer_id: cred.issuer_id.clone(),
        epoch: cred.epoch,
        cohort_index,
        signature,
    })
}

/// A principal's signed statement that `agent_pub` may act for their
/// pseudonym within `scope` until `expiry`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegationAttestation {
    pub issuer_id: String,
    pub tag: GroupElement,
    pub agent_pub: GroupElement,
    pub scope: String,
    pub expiry: u64,
    pub signature: SchnorrSignature,
}

pub fn delegation_message(params: &GroupParams, agent_pub: &GroupElement, scope: &str, expiry: u64) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.bytes(&params.element_bytes(agent_pub)).str(scope).u64(expiry);
    enc.finish()
}

/// Signs a delegation with base `h = hash_to_group(ctx)` and public key
/// equal to the holder's pseudonym, proving control of the pseudonym
/// without revealing the credential.
pub fn create_delegation<R: RngCore + CryptoRng + ?Sized>(
    cred: &Credential,
    ctx: &PresentationContext,
    agent_pub: &GroupElement,
    scope: &str,
    expiry: u64,
    rng: &mut R,
) -> Result<DelegationAttestation, WalletError> {
    let params = &cred.params;
    if !params.is_member(agent_pub.value()) {
        return Err(CryptoError::NotInGroup.into());
    }
    let h = context_base(params, &ctx.ctx_bytes())?;
    let tag = cred.tag_for(ctx)?;
    let msg = delegation_message(params, agent_pub, scope, expiry);
    let signature = schnorr_sign(params, &h, cred.keypair.secret(), &msg, rng)?;
    Ok(DelegationAttestation {
        issuer_id: ctx.issuer_id.clone(),
        tag,
        agent_pub: agent_pub.clone(),
        scope: scope.to_owned(),
        expiry,
        signature,
    })
}

/// On-disk credential layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialFile {
    pub version: u64,
    pub issuer_id: String,
    pub params: String,
    pub epoch: u64,
    pub cohort: usize,
    pub position: usize,
    pub x_hex: String,
    pub y_hex: String,
    pub recovery_code_hex: String,
}

impl Credential {
    pub fn to_file(&self) -> CredentialFile {
        CredentialFile {
            version: CREDENTIAL_FILE_VERSION,
            issuer_id: self.issuer_id.clone(),
            params: self.params.name().to_owned(),
            epoch: self.epoch,
            cohort: self.cohort_index,
            position: self.position,
            x_hex: self.params.scalar_hex(self.keypair.secret()),
            y_hex: self.params.element_hex(self.keypair.public()),
            recovery_code_hex: hex::encode(&self.recovery_code),
        }
    }

    pub fn from_file(file: &CredentialFile) -> Result<Self, WalletError> {
        let bad = |m: &str| WalletError::MalformedFile(m.to_owned());
        if file.version != CREDENTIAL_FILE_VERSION {
            return Err(WalletError::UnsupportedVersion(file.version.to_string()));
        }
        let params = GroupParams::preset(&file.params).map_err(|_| bad("unknown params"))?;
        let secret = params.scalar_from_hex(&file.x_hex).map_err(|_| bad("x_hex"))?;
        let keypair = KeyPair::from_secret(&params, secret).map_err(|_| bad("x_hex"))?;
        if params.element_hex(keypair.public()) != file.y_hex {
            return Err(bad("y_hex does not match x_hex"));
        }
        Ok(Credential {
            issuer_id: file.issuer_id.clone(),
            params,
            epoch: file.epoch,
            keypair,
            cohort_index: file.cohort,
            position: file.position,
            recovery_code: hex::decode(&file.recovery_code_hex).map_err(|_| bad("recovery_code_hex"))?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("credential serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, WalletError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| WalletError::MalformedFile(e.to_string()))?;
        match value.get("version") {
            Some(v) if v.as_u64() == Some(CREDENTIAL_FILE_VERSION) => {}
            Some(v) => {
                let shown = v.as_str().map(str::to_owned).unwrap_or_else(|| v.to_string());
                return Err(WalletError::UnsupportedVersion(shown));
            }
            None => return Err(WalletError::MalformedFile("missing version".into())),
        }
        let file: CredentialFile =
            serde_json::from_value(value).map_err(|e| WalletError::MalformedFile(e.to_string()))?;
        Self::from_file(&file)
    }
}

/// Writes the credential as JSON. The file holds the secret key; keep it
/// readable by the holder only.
pub fn save_credential(cred: &Credential, path: &Path) -> Result<(), WalletError> {
    std::fs::write(path, cred.to_json())?;
    Ok(())
}

pub fn load_credential(path: &Path) -> Result<Credential, WalletError> {
    Credential::from_json(&std::fs::read_to_string(path)?)
}
