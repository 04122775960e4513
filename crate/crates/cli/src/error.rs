use phc_core::crypto::CryptoError;
use phc_core::sim::SimError;
use phc_core::wallet::WalletError;
use phc_core::wire::WireError;
use phc_net::{codes, ClientError, NodeError};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INVALID: i32 = 4;
pub const EXIT_TRANSPORT: i32 = 5;
pub const EXIT_WALLET: i32 = 6;
pub const EXIT_SIM: i32 = 7;
pub const EXIT_NODE: i32 = 8;
/// API error codes map to `EXIT_API_BASE + index` in the frozen code table.
pub const EXIT_API_BASE: i32 = 10;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("wallet: {0}")]
    Wallet(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error("{code} (HTTP {status}): {message}")]
    Api { status: u16, code: String, message: String },
    #[error("cannot reach server: {0}")]
    Transport(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Wallet(_) => EXIT_WALLET,
            CliError::Sim(_) => EXIT_SIM,
            CliError::Node(NodeError::Io(_)) => EXIT_IO,
            CliError::Node(_) => EXIT_NODE,
            CliError::Api { code, .. } => api_exit_code(code),
            CliError::Transport(_) => EXIT_TRANSPORT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    /// Machine-readable code for the stderr error line.
    pub fn code(&self) -> &str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } | CliError::Node(NodeError::Io(_)) => "io",
            CliError::Invalid(_) => "invalid-input",
            CliError::Wallet(_) => "wallet",
            CliError::Sim(_) => "sim",
            CliError::Node(_) => "node",
            CliError::Api { code, .. } => code,
            CliError::Transport(_) => "transport",
            CliError::Internal(_) => "internal",
        }
    }
}

pub fn api_exit_code(code: &str) -> i32 {
    codes::ALL
        .iter()
        .position(|(c, _)| *c == code)
        .map_or(EXIT_INTERNAL, |i| EXIT_API_BASE + i as i32)
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Api { status, code, message } => CliError::Api { status, code, message },
            ClientError::Transport(m) => CliError::Transport(m),
            ClientError::Malformed(m) => CliError::Internal(format!("unexpected response: {m}")),
            ClientError::Wire(w) => CliError::Internal(format!("unexpected response: {w}")),
            ClientError::Wallet(w) => w.into(),
        }
    }
}

impl From<WalletError> for CliError {
    fn from(e: WalletError) -> Self {
        CliError::Wallet(e.to_string())
    }
}

impl From<CryptoError> for CliError {
    fn from(e: CryptoError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<WireError> for CliError {
    fn from(e: WireError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<phc_net::ApiError> for CliError {
    fn from(e: phc_net::ApiError) -> Self {
        CliError::Api {
            status: e.status(),
            code: e.code.to_owned(),
            message: e.message,
        }
    }
}

/// Exit-code table appended to `phc --help`.
pub fn exit_code_help() -> String {
    let mut out = String::from(
        "Output:\n  Results are JSON on stdout. Errors are one JSON line on stderr.\n\n\
         Exit codes:\n\
         \x20 0   success\n\
         \x20 1   internal error\n\
         \x20 2   usage error\n\
         \x20 3   file or directory I/O error\n\
         \x20 4   invalid input (config, parameters, hex, JSON)\n\
         \x20 5   server unreachable\n\
         \x20 6   wallet error (no credential, stale ring, key not in ring)\n\
         \x20 7   simulation error\n\
         \x20 8   node data directory error (not initialized, corrupt log)\n",
    );
    for (i, (code, status)) in codes::ALL.iter().enumerate() {
        out.push_str(&format!("  {:<3} {code} (HTTP {status})\n", EXIT_API_BASE + i as i32));
    }
    out
}
