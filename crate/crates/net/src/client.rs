//! Blocking HTTP clients for issuer and service nodes.

use std::time::Duration;

use phc_core::encoding::hex_array;
use phc_core::issuance::{verify_ring, EnrollmentRequest, EpochRing, Ticket};
use phc_core::relying_party::Nonce;
use phc_core::wallet::{DelegationAttestation, Presentation};
use phc_core::wire::{element_from_hex, Wire, WireEnvelope};
use phc_core::{GroupElement, GroupParams};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::ClientError;
use crate::protocol::*;

struct Http {
    base: String,
    client: reqwest::blocking::Client,
}

impl Http {
    fn new(base: &str) -> Result<Self, ClientError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self {
            base: base.trim_end_matches('/').to_owned(),
            client,
        })
    }

    fn get<T: DeserializeOwned>(&self, path: &str, kind: &str) -> Result<T, ClientError> {
        let resp = self.client.get(format!("{}{path}", self.base)).send();
        self.finish(resp, kind)
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, req_kind: &str, body: &B, kind: &str) -> Result<T, ClientError> {
        let resp = self
            .client
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(envelope_bytes(req_kind, body))
            .send();
        self.finish(resp, kind)
    }

    fn finish<T: DeserializeOwned>(
        &self,
        resp: reqwest::Result<reqwest::blocking::Response>,
        kind: &str,
    ) -> Result<T, ClientError> {
        let resp = resp.map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let bytes = resp.bytes().map_err(|e| ClientError::Transport(e.to_string()))?;
        let env: WireEnvelope = serde_json::from_slice(&bytes)
            .map_err(|e| ClientError::Malformed(format!("status {status}: {e}")))?;
        if env.kind == kinds::ERROR {
            let err: ErrorBody = env.open(kinds::ERROR)?;
            return Err(ClientError::Api {
                status,
                code: err.code,
                message: err.message,
            });
        }
        Ok(env.open(kind)?)
    }
}

pub struct IssuerClient {
    http: Http,
    params: GroupParams,
}

impl IssuerClient {
    /// Connects and learns the parameter set from `/issuer-key`.
    pub fn connect(base: &str) -> Result<Self, ClientError> {
        let http = Http::new(base)?;
        let key: IssuerKeyBody = http.get(paths::ISSUER_KEY, kinds::ISSUER_KEY)?;
        let params = GroupParams::preset(&key.params).map_err(|e| ClientError::Malformed(e.to_string()))?;
        Ok(Self { http, params })
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    pub fn issuer_key(&self) -> Result<IssuerKeyBody, ClientError> {
        self.http.get(paths::ISSUER_KEY, kinds::ISSUER_KEY)
    }

    /// The issuer's snapshot-signing key.
    pub fn public_key(&self) -> Result<GroupElement, ClientError> {
        let key = self.issuer_key()?;
        Ok(element_from_hex(&self.params, &key.public_key, "issuer key")?)
    }

    pub fn enroll(&self, req: &EnrollmentRequest) -> Result<EnrolledBody, ClientError> {
        self.http.post(paths::ENROLL, kinds::ENROLLMENT_REQUEST, &req.to_doc(&self.params), kinds::ENROLLED)
    }

    pub fn revoke(&self, recovery_code: &[u8], root_id: &str) -> Result<Ticket, ClientError> {
        let body = RevocationRequestBody {
            recovery_code: hex::encode(recovery_code),
            root_id: root_id.to_owned(),
        };
        let out: RevocationBody = self.http.post(paths::REVOKE, kinds::REVOCATION_REQUEST, &body, kinds::REVOCATION)?;
        hex_array(&out.ticket).ok_or_else(|| ClientError::Malformed("ticket".into()))
    }

    /// Ring for `epoch`, or the current one, checked against `issuer_key`.
    pub fn ring(&self, epoch: Option<u64>, issuer_key: &GroupElement) -> Result<EpochRing, ClientError> {
        let which = epoch.map(|e| e.to_string()).unwrap_or_else(|| "current".into());
        let doc: RingDoc = self.http.get(&format!("{}{which}", paths::RING_PREFIX), kinds::RING)?;
        let ring = EpochRing::from_doc(&doc, &self.params)?;
        if !verify_ring(&self.params, issuer_key, &ring) {
            return Err(ClientError::Malformed("ring snapshot signature does not verify".into()));
        }
        Ok(ring)
    }

    pub fn advance_epoch(&self) -> Result<u64, ClientError> {
        let out: EpochBody = self
            .http
            .post(paths::ADVANCE_EPOCH, kinds::EPOCH, &serde_json::json!({}), kinds::EPOCH)?;
        Ok(out.epoch)
    }
}

pub struct ServiceClient {
    http: Http,
    params: GroupParams,
    info: ServiceInfoBody,
}

impl ServiceClient {
    pub fn connect(base: &str) -> Result<Self, ClientError> {
        let http = Http::new(base)?;
        let info: ServiceInfoBody = http.get(paths::SERVICE_INFO, kinds::SERVICE_INFO)?;
        let params = GroupParams::preset(&info.params).map_err(|e| ClientError::Malformed(e.to_string()))?;
        Ok(Self { http, params, info })
    }

    pub fn info(&self) -> &ServiceInfoBody {
        &self.info
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    pub fn challenge(&self) -> Result<Nonce, ClientError> {
        let out: ChallengeBody = self.http.get(paths::CHALLENGE, kinds::CHALLENGE)?;
        hex_array(&out.nonce).ok_or_else(|| ClientError::Malformed("nonce".into()))
    }

    pub fn register(&self, pres: &Presentation, scope: &str, challenge: &Nonce) -> Result<AccountBody, ClientError> {
        let body = RegistrationBody {
            service_id: self.info.service_id.clone(),
            scope: scope.to_owned(),
            challenge: hex::encode(challenge),
            presentation: pres.to_doc(&self.params),
        };
        self.http.post(paths::REGISTER, kinds::REGISTRATION, &body, kinds::ACCOUNT)
    }

    pub fn suspend(&self, issuer_id: &str, tag: &GroupElement) -> Result<SuspensionBody, ClientError> {
        let body = SuspensionBody {
            issuer_id: issuer_id.to_owned(),
            tag: self.params.element_hex(tag),
        };
        self.http.post(paths::SUSPEND, kinds::SUSPENSION, &body, kinds::SUSPENDED)
    }

    pub fn verify_delegation(&self, att: &DelegationAttestation, scope: &str, now: u64) -> Result<bool, ClientError> {
        let body = DelegationCheckBody {
            attestation: att.to_doc(&self.params),
            scope: scope.to_owned(),
            now,
        };
        let out: DelegationStatusBody =
            self.http
                .post(paths::DELEGATION_VERIFY, kinds::DELEGATION_CHECK, &body, kinds::DELEGATION_STATUS)?;
        Ok(out.valid)
    }

    pub fn install_ring(&self, ring: &EpochRing) -> Result<RingInstalledBody, ClientError> {
        self.http
            .post(paths::INSTALL_RING, kinds::RING, &ring.to_doc(&self.params), kinds::RING_INSTALLED)
    }
}
