use phc_core::issuance::{IssuerConfig, IssuerState};
use phc_core::wire::Wire;
use phc_core::GroupParams;
use phc_net::protocol::{kinds, paths, EpochBody};
use phc_net::{IssuerClient, IssuerNode};
use rand::rngs::OsRng;
use serde_json::json;

use super::{ensure_dir, issuer_app, reply_body, serve, Ctx, Outcome};
use crate::args::{IssuerCmd, NodeTarget};
use crate::error::CliError;

pub fn run(ctx: &Ctx, cmd: IssuerCmd) -> Result<Outcome, CliError> {
    match cmd {
        IssuerCmd::Init {
            dir,
            id,
            cohort_size,
            no_limit,
            evidence_label,
        } => {
            let params = GroupParams::preset(&ctx.params_name())?;
            let mut config = IssuerConfig::new(&id, params.clone());
            config.cohort_size = cohort_size;
            config.enforce_limit = !no_limit;
            config.evidence_label = evidence_label;
            let state = IssuerState::new(config, &mut OsRng).map_err(|e| CliError::Invalid(e.to_string()))?;
            let public_key = params.element_hex(state.public_key());
            ensure_dir(&dir.data_dir)?;
            let node = IssuerNode::create(&dir.data_dir, state)?;
            Ok(Outcome::new(
                &json!({
                    "issuer_id": node.issuer_id(),
                    "params": params.name(),
                    "public_key": public_key,
                    "cohort_size": cohort_size,
                    "enforce_limit": !no_limit,
                    "data_dir": dir.data_dir,
                }),
                format!("issuer {id} created in {}", dir.data_dir.display()),
            ))
        }
        IssuerCmd::Serve { dir, bind } => {
            let node = IssuerNode::open(&dir.data_dir)?;
            let extra = json!({ "issuer_id": node.issuer_id(), "epoch": node.current_epoch() });
            serve(issuer_app(node), &bind, extra)
        }
        IssuerCmd::AdvanceEpoch { target } => {
            let epoch = match target_of(target)? {
                Target::Url(url) => IssuerClient::connect(&url)?.advance_epoch()?,
                Target::Dir(node) => {
                    let body = reply_body(node.handle("POST", paths::ADVANCE_EPOCH, b""), kinds::EPOCH)?;
                    serde_json::from_value::<EpochBody>(body)
                        .map_err(|e| CliError::Internal(e.to_string()))?
                        .epoch
                }
            };
            Ok(Outcome::new(&EpochBody { epoch }, format!("current epoch is now {epoch}")))
        }
        IssuerCmd::ShowRing { target, epoch } => {
            let doc = match target_of(target)? {
                Target::Url(url) => {
                    let client = IssuerClient::connect(&url)?;
                    let key = client.public_key()?;
                    let ring = client.ring(epoch, &key)?;
                    ring.to_json(client.params())
                }
                Target::Dir(node) => {
                    let which = epoch.map_or_else(|| "current".to_owned(), |e| e.to_string());
                    reply_body(node.handle("GET", &format!("{}{which}", paths::RING_PREFIX), b""), kinds::RING)?
                }
            };
            let members: usize = doc["cohorts"].as_array().map_or(0, |c| {
                c.iter().map(|m| m.as_array().map_or(0, Vec::len)).sum()
            });
            Ok(Outcome {
                summary: format!("epoch {} ring with {members} keys", doc["epoch"]),
                json: doc,
            })
        }
    }
}

enum Target {
    Url(String),
    Dir(Box<IssuerNode>),
}

/// A data directory must not be in use by a running `issuer serve`.
fn target_of(target: NodeTarget) -> Result<Target, CliError> {
    match (target.url, target.data_dir) {
        (Some(url), _) => Ok(Target::Url(url)),
        (None, Some(dir)) => Ok(Target::Dir(Box::new(IssuerNode::open(&dir)?))),
        (None, None) => Err(CliError::Usage("one of --url or --data-dir is required".into())),
    }
}
