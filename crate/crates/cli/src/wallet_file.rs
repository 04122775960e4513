//! On-disk wallet: one holder, one key per issuer.

use std::path::Path;

use phc_core::wallet::{create_identity, Credential};
use phc_core::{GroupElement, GroupParams, KeyPair};
use rand::rngs::OsRng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const WALLET_VERSION: u64 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalletFile {
    pub version: u64,
    pub root_id: String,
    pub params: String,
    pub issuers: Vec<IssuerEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssuerEntry {
    pub issuer_id: String,
    pub issuer_url: String,
    /// Ring-signing key pinned on first contact.
    pub issuer_key: String,
    pub x_hex: String,
    pub y_hex: String,
    pub recovery_code_hex: String,
    /// Re-enrollment ticket from a revocation, spent by the next enroll.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticket: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enrollment: Option<Enrollment>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Enrollment {
    pub epoch: u64,
    pub cohort_index: usize,
    pub position: usize,
}

impl WalletFile {
    pub fn new(root_id: &str, params: &GroupParams) -> Self {
        Self {
            version: WALLET_VERSION,
            root_id: root_id.into(),
            params: params.name().into(),
            issuers: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Wallet(format!("{}: {e}", path.display())))?;
        if file.version != WALLET_VERSION {
            return Err(CliError::Wallet(format!("unsupported wallet version {}", file.version)));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("wallet serializes");
        text.push('\n');
        phc_net::store::write_atomic(path, text.as_bytes()).map_err(|e| CliError::io(path, e))?;
        restrict(path)
    }

    pub fn params(&self) -> Result<GroupParams, CliError> {
        Ok(GroupParams::preset(&self.params)?)
    }

    pub fn entry(&self, issuer_id: &str) -> Option<&IssuerEntry> {
        self.issuers.iter().find(|e| e.issuer_id == issuer_id)
    }

    pub fn entry_mut(&mut self, issuer_id: &str) -> Option<&mut IssuerEntry> {
        self.issuers.iter_mut().find(|e| e.issuer_id == issuer_id)
    }

    /// Picks the entry for `issuer`, or the only one when not given.
    pub fn select(&self, issuer: Option<&str>) -> Result<&IssuerEntry, CliError> {
        match issuer {
            Some(id) => self
                .entry(id)
                .ok_or_else(|| CliError::Wallet(format!("no key for issuer {id}"))),
            None => match self.issuers.as_slice() {
                [one] => Ok(one),
                [] => Err(CliError::Wallet("wallet has not enrolled anywhere".into())),
                _ => Err(CliError::Usage("wallet holds several issuers; pass --issuer".into())),
            },
        }
    }
}

impl IssuerEntry {
    pub fn fresh(issuer_id: &str, issuer_url: &str, issuer_key: &str, params: &GroupParams) -> Self {
        let mut entry = Self {
            issuer_id: issuer_id.into(),
            issuer_url: issuer_url.into(),
            issuer_key: issuer_key.into(),
            x_hex: String::new(),
            y_hex: String::new(),
            recovery_code_hex: String::new(),
            ticket: None,
            enrollment: None,
        };
        entry.rotate(params);
        entry
    }

    /// New key and recovery code; any enrollment is dropped.
    pub fn rotate(&mut self, params: &GroupParams) {
        let (keypair, code) = create_identity(params, &mut OsRng);
        self.x_hex = params.scalar_hex(keypair.secret());
        self.y_hex = params.element_hex(keypair.public());
        self.recovery_code_hex = hex::encode(code);
        self.enrollment = None;
    }

    pub fn keypair(&self, params: &GroupParams) -> Result<KeyPair, CliError> {
        let secret = params
            .scalar_from_hex(&self.x_hex)
            .map_err(|e| CliError::Wallet(format!("secret key: {e}")))?;
        let keypair = KeyPair::from_secret(params, secret).map_err(|e| CliError::Wallet(e.to_string()))?;
        if params.element_hex(keypair.public()) != self.y_hex {
            return Err(CliError::Wallet("public key does not match secret key".into()));
        }
        Ok(keypair)
    }

    pub fn recovery_code(&self) -> Result<Vec<u8>, CliError> {
        hex::decode(&self.recovery_code_hex).map_err(|e| CliError::Wallet(format!("recovery code: {e}")))
    }

    pub fn pinned_key(&self, params: &GroupParams) -> Result<GroupElement, CliError> {
        params
            .element_from_hex(&self.issuer_key)
            .map_err(|e| CliError::Wallet(format!("pinned issuer key: {e}")))
    }

    pub fn credential(&self, params: &GroupParams) -> Result<Credential, CliError> {
        let enrollment = self
            .enrollment
            .ok_or_else(|| CliError::Wallet(format!("not enrolled at issuer {}", self.issuer_id)))?;
        Ok(Credential {
            issuer_id: self.issuer_id.clone(),
            params: params.clone(),
            epoch: enrollment.epoch,
            keypair: self.keypair(params)?,
            cohort_index: enrollment.cohort_index,
            position: enrollment.position,
            recovery_code: self.recovery_code()?,
        })
    }
}

#[cfg(unix)]
fn restrict(path: &Path) -> Result<(), CliError> {
    use std::os::unix::fs::PermissionsExt;
    std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o600)).map_err(|e| CliError::io(path, e))
}

#[cfg(not(unix))]
fn restrict(_path: &Path) -> Result<(), CliError> {
    Ok(())
}
