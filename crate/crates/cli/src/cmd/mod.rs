pub mod issuer;
pub mod params;
pub mod service;
pub mod sim;
pub mod wallet;

use std::path::Path;
use std::sync::Arc;

use phc_core::wire::WireEnvelope;
use phc_net::protocol::{kinds, ErrorBody};
use phc_net::server::{spawn, App, ServeOptions};
use phc_net::Reply;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::settings::Settings;

/// What a command prints: JSON on stdout, a sentence on stderr.
pub struct Outcome {
    pub json: Value,
    pub summary: String,
}

impl Outcome {
    pub fn new<T: Serialize>(value: &T, summary: impl Into<String>) -> Self {
        Self {
            json: serde_json::to_value(value).expect("command output serializes"),
            summary: summary.into(),
        }
    }
}

pub struct Ctx {
    pub settings: Settings,
    pub params_flag: Option<String>,
}

impl Ctx {
    pub fn params_name(&self) -> String {
        self.settings.params(self.params_flag.as_deref())
    }
}

/// Body of a local node reply, or the API error it carries.
pub fn reply_body(reply: Reply, kind: &str) -> Result<Value, CliError> {
    let env: WireEnvelope =
        serde_json::from_slice(&reply.body).map_err(|e| CliError::Internal(format!("node reply: {e}")))?;
    if !reply.is_success() {
        let err: ErrorBody = env.open(kinds::ERROR).map_err(|e| CliError::Internal(e.to_string()))?;
        return Err(CliError::Api {
            status: reply.status,
            code: err.code,
            message: err.message,
        });
    }
    env.open(kind).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Serves until ctrl-c. The listening line is the command's only stdout.
pub fn serve(app: App, bind: &str, extra: Value) -> Result<Outcome, CliError> {
    let handle = spawn(app, bind, ServeOptions { stop_on_ctrl_c: true }).map_err(|e| CliError::io(bind, e))?;
    let mut line = json!({ "listening": handle.url() });
    if let (Value::Object(line), Value::Object(extra)) = (&mut line, extra) {
        line.extend(extra);
    }
    println!("{line}");
    eprintln!("listening on {}; ctrl-c to stop", handle.url());
    handle.wait().map_err(|e| CliError::Internal(e.to_string()))?;
    eprintln!("stopped");
    Ok(Outcome {
        json: Value::Null,
        summary: String::new(),
    })
}

pub fn issuer_app(node: phc_net::IssuerNode) -> App {
    App::Issuer(Arc::new(node))
}

pub fn service_app(node: phc_net::ServiceNode) -> App {
    App::Service(Arc::new(node))
}
