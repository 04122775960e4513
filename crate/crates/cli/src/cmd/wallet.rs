use phc_core::encoding::hex_array;
use phc_core::issuance::{recovery_hash, EnrollmentRequest};
use phc_core::wallet::{create_delegation, create_presentation, PresentationContext};
use phc_core::wire::Wire;
use phc_net::{IssuerClient, ServiceClient};
use rand::rngs::OsRng;
use serde_json::json;

use super::{Ctx, Outcome};
use crate::args::WalletCmd;
use crate::error::CliError;
use crate::wallet_file::{Enrollment, IssuerEntry, WalletFile};

pub fn run(ctx: &Ctx, cmd: WalletCmd) -> Result<Outcome, CliError> {
    match cmd {
        WalletCmd::New { wallet, root_id } => {
            let path = ctx.settings.wallet(wallet.wallet.as_deref())?;
            if path.exists() {
                return Err(CliError::Invalid(format!("{} already exists", path.display())));
            }
            let params = phc_core::GroupParams::preset(&ctx.params_name())?;
            WalletFile::new(&root_id, &params).save(&path)?;
            Ok(Outcome::new(
                &json!({ "wallet": path, "root_id": root_id, "params": params.name() }),
                format!("wallet created at {}", path.display()),
            ))
        }
        WalletCmd::Enroll { wallet, issuer_url } => {
            let path = ctx.settings.wallet(wallet.wallet.as_deref())?;
            let url = ctx.settings.issuer_url(issuer_url.as_deref())?;
            let mut file = WalletFile::load(&path)?;
            let params = file.params()?;
            let client = IssuerClient::connect(&url)?;
            let info = client.issuer_key()?;
            if info.params != params.name() {
                return Err(CliError::Invalid(format!(
                    "issuer uses {} but the wallet uses {}",
                    info.params,
                    params.name()
                )));
            }
            let mut entry = match file.entry(&info.issuer_id) {
                Some(e) if e.issuer_key != info.public_key => {
                    return Err(CliError::Wallet(format!(
                        "issuer {} presents a different key than the one pinned",
                        info.issuer_id
                    )))
                }
                Some(e) => e.clone(),
                None => IssuerEntry::fresh(&info.issuer_id, &url, &info.public_key, &params),
            };
            entry.issuer_url = url;
            let ticket = entry
                .ticket
                .as_deref()
                .map(|t| hex_array::<16>(t).ok_or_else(|| CliError::Wallet("stored ticket is not 16 hex bytes".into())))
                .transpose()?;
            let request = EnrollmentRequest {
                root_id: file.root_id.clone(),
                public_key: entry.keypair(&params)?.public().clone(),
                recovery_hash: recovery_hash(&file.root_id, &entry.recovery_code()?),
                reenroll_ticket: ticket,
            };
            let enrolled = client.enroll(&request)?;
            entry.ticket = None;
            entry.enrollment = Some(Enrollment {
                epoch: enrolled.epoch,
                cohort_index: enrolled.cohort_index,
                position: enrolled.position,
            });
            match file.entry_mut(&info.issuer_id) {
                Some(slot) => *slot = entry,
                None => file.issuers.push(entry),
            }
            file.save(&path)?;
            Ok(Outcome::new(
                &enrolled,
                format!("enrolled at {} for epoch {}", enrolled.issuer_id, enrolled.epoch),
            ))
        }
        WalletCmd::Present {
            wallet,
            service_url,
            scope,
            issuer,
        } => {
            let path = ctx.settings.wallet(wallet.wallet.as_deref())?;
            let url = ctx.settings.service_url(service_url.as_deref())?;
            let file = WalletFile::load(&path)?;
            let params = file.params()?;
            let service = ServiceClient::connect(&url)?;
            let info = service.info().clone();
            let entry = presenting_entry(&file, &info, issuer.as_deref())?;
            let cred = entry.credential(&params)?;
            let scope = scope_or_first(scope, &info.scopes)?;
            let issuer_client = IssuerClient::connect(&entry.issuer_url)?;
            let ring = issuer_client.ring(None, &entry.pinned_key(&params)?)?;
            let challenge = service.challenge()?;
            let pctx = PresentationContext {
                issuer_id: cred.issuer_id.clone(),
                service_id: info.service_id.clone(),
                scope: scope.clone(),
                challenge,
            };
            let presentation = create_presentation(&cred, &ring, &pctx, &mut OsRng)?;
            let account = service.register(&presentation, &scope, &challenge)?;
            Ok(Outcome::new(
                &json!({
                    "service_id": info.service_id,
                    "scope": scope,
                    "account_id": account.account_id,
                    "issuer_id": account.issuer_id,
                    "tag": account.tag,
                }),
                format!("account {} opened at {}", account.account_id, info.service_id),
            ))
        }
        WalletCmd::Delegate {
            wallet,
            service_url,
            agent_pub,
            scope,
            expiry,
            account_scope,
            issuer,
        } => {
            let path = ctx.settings.wallet(wallet.wallet.as_deref())?;
            let url = ctx.settings.service_url(service_url.as_deref())?;
            let file = WalletFile::load(&path)?;
            let params = file.params()?;
            let info = ServiceClient::connect(&url)?.info().clone();
            let entry = presenting_entry(&file, &info, issuer.as_deref())?;
            let cred = entry.credential(&params)?;
            let agent = params
                .element_from_hex(&agent_pub)
                .map_err(|e| CliError::Invalid(format!("--agent-pub: {e}")))?;
            let pctx = PresentationContext {
                issuer_id: cred.issuer_id.clone(),
                service_id: info.service_id.clone(),
                scope: scope_or_first(account_scope, &info.scopes)?,
                challenge: [0; 16],
            };
            let att = create_delegation(&cred, &pctx, &agent, &scope, expiry, &mut OsRng)?;
            Ok(Outcome::new(
                &att.to_doc(&params),
                format!("agent may act with scope {scope} at {} until {expiry}", info.service_id),
            ))
        }
        WalletCmd::Revoke { wallet, issuer } => {
            let path = ctx.settings.wallet(wallet.wallet.as_deref())?;
            let mut file = WalletFile::load(&path)?;
            let params = file.params()?;
            let entry = file.select(issuer.as_deref())?.clone();
            let ticket = IssuerClient::connect(&entry.issuer_url)?.revoke(&entry.recovery_code()?, &file.root_id)?;
            let slot = file.entry_mut(&entry.issuer_id).expect("entry selected above");
            slot.ticket = Some(hex::encode(ticket));
            slot.rotate(&params);
            let new_key = slot.y_hex.clone();
            file.save(&path)?;
            Ok(Outcome::new(
                &json!({ "issuer_id": entry.issuer_id, "ticket": hex::encode(ticket), "new_public_key": new_key }),
                "credential revoked; the next enroll uses a fresh key and the stored ticket",
            ))
        }
    }
}

/// The enrolled entry to present from: `--issuer`, else the first the service accepts.
fn presenting_entry<'a>(
    file: &'a WalletFile,
    info: &phc_net::protocol::ServiceInfoBody,
    issuer: Option<&str>,
) -> Result<&'a IssuerEntry, CliError> {
    let accepted = |id: &str| info.accepted_issuers.iter().any(|a| a.issuer_id == id);
    if let Some(id) = issuer {
        let entry = file.select(Some(id))?;
        if !accepted(id) {
            return Err(CliError::Wallet(format!("{} does not accept issuer {id}", info.service_id)));
        }
        return Ok(entry);
    }
    file.issuers
        .iter()
        .find(|e| e.enrollment.is_some() && accepted(&e.issuer_id))
        .ok_or_else(|| CliError::Wallet(format!("no credential accepted by {}", info.service_id)))
}

fn scope_or_first(scope: Option<String>, scopes: &[String]) -> Result<String, CliError> {
    match scope {
        Some(s) => Ok(s),
        None => scopes
            .first()
            .cloned()
            .ok_or_else(|| CliError::Internal("service lists no scopes".into())),
    }
}
