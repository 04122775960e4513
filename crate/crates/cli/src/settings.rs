//! Optional defaults file, `~/.phc/config.json` unless `--config` says otherwise.
//! Command-line flags and environment variables take precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub params: Option<String>,
    pub issuer_url: Option<String>,
    pub service_url: Option<String>,
    pub wallet: Option<PathBuf>,
}

pub fn default_path() -> Option<PathBuf> {
    std::env::var_os("HOME").map(|h| Path::new(&h).join(".phc").join("config.json"))
}

impl Settings {
    /// An explicit path must exist; the default path may be absent.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let (path, required) = match explicit {
            Some(p) => (p.to_path_buf(), true),
            None => match default_path() {
                Some(p) => (p, false),
                None => return Ok(Self::default()),
            },
        };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(CliError::io(&path, e)),
        };
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn params(&self, flag: Option<&str>) -> String {
        flag.map(str::to_owned)
            .or_else(|| self.params.clone())
            .unwrap_or_else(|| "test-256".into())
    }

    pub fn issuer_url(&self, flag: Option<&str>) -> Result<String, CliError> {
        pick(flag, &self.issuer_url, "--issuer-url")
    }

    pub fn service_url(&self, flag: Option<&str>) -> Result<String, CliError> {
        pick(flag, &self.service_url, "--service-url")
    }

    pub fn wallet(&self, flag: Option<&Path>) -> Result<PathBuf, CliError> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.wallet.clone())
            .ok_or_else(|| CliError::Usage("--wallet is required (or set \"wallet\" in the config file)".into()))
    }
}

fn pick(flag: Option<&str>, fallback: &Option<String>, name: &str) -> Result<String, CliError> {
    flag.map(str::to_owned)
        .or_else(|| fallback.clone())
        .ok_or_else(|| CliError::Usage(format!("{name} is required (or set it in the config file)")))
}
