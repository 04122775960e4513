use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "phc",
    version,
    about = "Personhood credentials: run issuers and services, hold credentials, simulate ecosystems"
)]
pub struct Cli {
    /// Defaults file (JSON with params, issuer_url, service_url, wallet)
    #[arg(long, global = true, env = "PHC_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Parameter preset: test-256 or modp-2048
    #[arg(long, global = true, env = "PHC_PARAMS", value_name = "NAME")]
    pub params: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect or generate group parameters
    #[command(subcommand)]
    Params(ParamsCmd),
    /// Run and administer an issuer node
    #[command(subcommand)]
    Issuer(IssuerCmd),
    /// Hold keys and credentials for one person
    #[command(subcommand)]
    Wallet(WalletCmd),
    /// Run and administer a relying-party service node
    #[command(subcommand)]
    Service(ServiceCmd),
    /// Run ecosystem simulations
    #[command(subcommand)]
    Sim(SimCmd),
}

#[derive(Debug, Subcommand)]
pub enum ParamsCmd {
    /// Print a preset (default: the selected --params)
    Show {
        name: Option<String>,
    },
    /// Generate a fresh safe-prime group
    Generate {
        #[arg(long)]
        bits: u64,
        /// Deterministic generation from this seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct DataDir {
    /// Node data directory
    #[arg(long, env = "PHC_DATA_DIR", value_name = "DIR")]
    pub data_dir: PathBuf,
}

/// Talk to a running node over HTTP, or operate on its stopped data directory.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct NodeTarget {
    /// Running issuer
    #[arg(long, value_name = "URL")]
    pub url: Option<String>,
    /// Stopped issuer's data directory
    #[arg(long, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum IssuerCmd {
    /// Create a new issuer in an empty data directory
    Init {
        #[command(flatten)]
        dir: DataDir,
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 64)]
        cohort_size: usize,
        /// Skip the one-credential-per-person check
        #[arg(long)]
        no_limit: bool,
        #[arg(long, default_value = "government-id")]
        evidence_label: String,
    },
    /// Serve the issuer API until interrupted
    Serve {
        #[command(flatten)]
        dir: DataDir,
        #[arg(long, env = "PHC_BIND_ADDR", default_value = phc_net::DEFAULT_BIND_ADDR)]
        bind: String,
    },
    /// Close the current epoch and open the next
    AdvanceEpoch {
        #[command(flatten)]
        target: NodeTarget,
    },
    /// Print a signed ring snapshot
    ShowRing {
        #[command(flatten)]
        target: NodeTarget,
        /// Epoch number (default: current)
        #[arg(long)]
        epoch: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct WalletPath {
    /// Wallet file
    #[arg(long, value_name = "FILE")]
    pub wallet: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum WalletCmd {
    /// Create an empty wallet file
    New {
        #[command(flatten)]
        wallet: WalletPath,
        /// Identifier from the out-of-band root-of-trust check
        #[arg(long)]
        root_id: String,
    },
    /// Enroll at an issuer (spends a stored re-enrollment ticket if any)
    Enroll {
        #[command(flatten)]
        wallet: WalletPath,
        #[arg(long, value_name = "URL")]
        issuer_url: Option<String>,
    },
    /// Open an account at a service
    Present {
        #[command(flatten)]
        wallet: WalletPath,
        #[arg(long, value_name = "URL")]
        service_url: Option<String>,
        /// Account scope (default: the service's first scope)
        #[arg(long)]
        scope: Option<String>,
        /// Issuer to present from when the wallet holds several
        #[arg(long)]
        issuer: Option<String>,
    },
    /// Sign a delegation attestation for an agent key
    Delegate {
        #[command(flatten)]
        wallet: WalletPath,
        #[arg(long, value_name = "URL")]
        service_url: Option<String>,
        /// Agent public key, hex
        #[arg(long, value_name = "HEX")]
        agent_pub: String,
        /// Action scope granted to the agent
        #[arg(long, default_value = "post")]
        scope: String,
        /// Last valid time unit
        #[arg(long)]
        expiry: u64,
        /// Account scope of the principal (default: the service's first scope)
        #[arg(long)]
        account_scope: Option<String>,
        #[arg(long)]
        issuer: Option<String>,
    },
    /// Revoke the credential and keep a ticket for re-enrollment
    Revoke {
        #[command(flatten)]
        wallet: WalletPath,
        #[arg(long)]
        issuer: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ServiceCmd {
    /// Create a new service in an empty data directory
    Init {
        #[command(flatten)]
        dir: DataDir,
        #[arg(long)]
        id: String,
        /// Accept this issuer, pinning its key and following its rings
        #[arg(long = "issuer-url", value_name = "URL")]
        issuer_urls: Vec<String>,
        /// Accept an issuer by key only: ID=HEX; rings are pushed to /admin/ring
        #[arg(long = "issuer-key", value_name = "ID=HEX")]
        issuer_keys: Vec<String>,
        /// Accounts allowed per pseudonym
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// Account scope (repeatable)
        #[arg(long = "scope", default_value = "account-registration")]
        scopes: Vec<String>,
    },
    /// Serve the service API until interrupted
    Serve {
        #[command(flatten)]
        dir: DataDir,
        #[arg(long, env = "PHC_BIND_ADDR", default_value = phc_net::DEFAULT_BIND_ADDR)]
        bind: String,
    },
    /// Suspend a pseudonym at a running service
    Suspend {
        #[arg(long, value_name = "URL")]
        url: Option<String>,
        #[arg(long)]
        issuer: String,
        /// Pseudonym tag, hex
        #[arg(long, value_name = "HEX")]
        tag: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimCmd {
    /// Run a scenario and print its metrics
    Run {
        /// Scenario config (JSON), e.g. scenarios/bounded.json
        #[arg(value_name = "FILE")]
        file: PathBuf,
        /// Overrides the seed in the config; required so runs are reproducible
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "run", value_parser = ["run", "sockpuppet", "bot-suspension", "delegation", "linkage"])]
        scenario: String,
        /// Also write the per-step series as CSV
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        /// Also write the metrics JSON to a file
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Summarize a metrics file written by `sim run --out`
    Report {
        #[arg(long, value_name = "FILE")]
        metrics: PathBuf,
    },
}
