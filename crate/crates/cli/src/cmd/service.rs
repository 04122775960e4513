use phc_net::{IssuerClient, IssuerPin, ServiceClient, ServiceNode, ServiceSetup};
use rand::rngs::OsRng;
use rand::RngCore;
use serde_json::json;

use super::{ensure_dir, serve, service_app, Ctx, Outcome};
use crate::args::ServiceCmd;
use crate::error::CliError;

pub fn run(ctx: &Ctx, cmd: ServiceCmd) -> Result<Outcome, CliError> {
    match cmd {
        ServiceCmd::Init {
            dir,
            id,
            issuer_urls,
            issuer_keys,
            k,
            scopes,
        } => {
            let params = ctx.params_name();
            let mut pins = Vec::new();
            for url in issuer_urls {
                let key = IssuerClient::connect(&url)?.issuer_key()?;
                if key.params != params {
                    return Err(CliError::Invalid(format!(
                        "issuer {} uses {} but the service uses {params}",
                        key.issuer_id, key.params
                    )));
                }
                pins.push(IssuerPin {
                    issuer_id: key.issuer_id,
                    public_key: key.public_key,
                    url: Some(url),
                });
            }
            for spec in issuer_keys {
                let (issuer_id, public_key) = spec
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("--issuer-key expects ID=HEX, got {spec}")))?;
                pins.push(IssuerPin {
                    issuer_id: issuer_id.into(),
                    public_key: public_key.into(),
                    url: None,
                });
            }
            let setup = ServiceSetup {
                version: phc_net::service::SETUP_VERSION,
                service_id: id.clone(),
                params,
                account_limit: k,
                scopes,
                accepted_issuers: pins,
            };
            let mut seed = [0u8; 32];
            OsRng.fill_bytes(&mut seed);
            ensure_dir(&dir.data_dir)?;
            let node = ServiceNode::create(&dir.data_dir, setup, seed)?;
            Ok(Outcome::new(
                node.setup(),
                format!("service {id} created in {}", dir.data_dir.display()),
            ))
        }
        ServiceCmd::Serve { dir, bind } => {
            let node = ServiceNode::open(&dir.data_dir)?;
            let extra = json!({ "service_id": node.setup().service_id });
            serve(service_app(node), &bind, extra)
        }
        ServiceCmd::Suspend { url, issuer, tag } => {
            let url = ctx.settings.service_url(url.as_deref())?;
            let client = ServiceClient::connect(&url)?;
            let tag = client
                .params()
                .element_from_hex(&tag)
                .map_err(|e| CliError::Invalid(format!("--tag: {e}")))?;
            let body = client.suspend(&issuer, &tag)?;
            Ok(Outcome::new(&body, format!("pseudonym suspended at {}", client.info().service_id)))
        }
    }
}
