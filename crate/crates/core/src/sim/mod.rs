//! Deterministic multi-agent simulation of a credential ecosystem, driven
//! by the real issuance, wallet and relying-party code.

pub mod config;
mod engine;
pub mod linkage;
pub mod metrics;

use thiserror::Error;

use crate::crypto::CryptoError;
use crate::issuance::IssuanceError;
use crate::relying_party::RelyingPartyError;
use crate::wallet::WalletError;

pub use config::{
    AttackerSpec, DelegationSpec, Horizon, IssuerSpec, Regime, ServiceSpec, SimConfig, Strategy, SuspensionPolicy,
};
pub use linkage::{linkage_experiment, Build, LinkageConfig, LinkageReport, TrialOutcome};
pub use metrics::{AttackerMetrics, DelegationMetrics, Metrics, SeriesPoint, ServiceMetrics, SockpuppetMetrics};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("parameters {0} are too small for this experiment")]
    ToyParamsRejected(String),
    #[error("simulation invariant broken: {0}")]
    Invariant(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Issuance(#[from] IssuanceError),
    #[error(transparent)]
    RelyingParty(#[from] RelyingPartyError),
    #[error(transparent)]
    Wallet(#[from] WalletError),
}

pub fn run(config: &SimConfig) -> Result<Metrics, SimError> {
    engine::World::new(config)?.run("run")
}

/// Attacker voice among verified accounts, with PHC-gated signup and
/// with ungated signup where each attacker runs `bot_multiplier` accounts
/// per service.
pub fn scenario_sockpuppet(config: &SimConfig) -> Result<Metrics, SimError> {
    let mut metrics = engine::World::new(config)?.run("sockpuppet")?;
    let posts_per_account = config.horizon.epochs * config.horizon.steps;
    let mut attacker_posts = 0u64;
    let mut all_posts = 0u64;
    for _ in &config.services {
        let bots = config.n_attackers as u64 * config.bot_multiplier;
        attacker_posts += bots * posts_per_account;
        all_posts += (bots + config.n_people as u64) * posts_per_account;
    }
    metrics.sockpuppet = Some(SockpuppetMetrics {
        gated_share: metrics.influence_share,
        ungated_share: if all_posts == 0 { 0.0 } else { attacker_posts as f64 / all_posts as f64 },
        max_accepted_issuers: config.services.iter().map(|s| s.accepted_issuers.len()).max().unwrap_or(0),
        max_k: config.services.iter().map(|s| s.k).max().unwrap_or(0),
    });
    Ok(metrics)
}

/// Repeated abuse under suspension: the attacker series shows whether
/// abusive accounts keep appearing or level off.
pub fn scenario_bot_suspension(config: &SimConfig) -> Result<Metrics, SimError> {
    engine::World::new(config)?.run("bot-suspension")
}

/// Agents acting for principals; a caught agent suspends its principal.
pub fn scenario_delegation(config: &SimConfig) -> Result<Metrics, SimError> {
    let mut metrics = engine::World::new(config)?.run("delegation")?;
    metrics.delegation.get_or_insert_with(DelegationMetrics::default);
    Ok(metrics)
}

/// Runs the scenario named in a report or on the command line.
pub fn run_named(scenario: &str, config: &SimConfig) -> Result<Metrics, SimError> {
    match scenario {
        "run" => run(config),
        "sockpuppet" => scenario_sockpuppet(config),
        "bot-suspension" => scenario_bot_suspension(config),
        "delegation" => scenario_delegation(config),
        other => Err(SimError::InvalidConfig(format!("unknown scenario {other}"))),
    }
}
