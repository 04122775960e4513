use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::config::Regime;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ServiceMetrics {
    pub service_id: String,
    pub accepted_issuers: usize,
    pub k: u32,
    /// Number of agents (people and attackers) holding each account count.
    pub accounts_per_agent: BTreeMap<u32, u64>,
    pub honest_accounts: u64,
    pub attacker_accounts_total: u64,
    pub attacker_accounts_live: u64,
    /// Largest number of accounts one attacker ever opened here.
    pub max_accounts_per_attacker: u64,
    /// Largest number of simultaneously open accounts one attacker held.
    pub max_live_accounts_per_attacker: u64,
    pub suspended_pseudonyms: u64,
    pub abusive_actions: u64,
    pub caught_actions: u64,
    pub honest_posts: u64,
    pub attacker_posts: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackerMetrics {
    pub enrollment_attempts: u64,
    pub failed_root_checks: u64,
    pub duplicate_rejections: u64,
    pub credentials_obtained: u64,
    pub credentials_purchased: u64,
    pub revocations: u64,
    pub revocations_refused: u64,
    pub replay_attempts: u64,
    pub replay_rejected: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DelegationMetrics {
    pub delegations_issued: u64,
    pub delegations_invalidated: u64,
    /// Delegations of principals with no abusive agent that stopped verifying.
    pub innocent_delegations_invalidated: u64,
    pub abusive_agents: u64,
    pub abusive_agents_caught: u64,
    /// Abusive actions carried out under a valid attestation.
    pub delegation_abuse_count: u64,
    /// Principals whose suspension left some of their delegations valid.
    pub incomplete_cascades: u64,
    pub unverified_agents: u64,
    pub verified_agent_actions: u64,
    pub unverified_agent_actions: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SockpuppetMetrics {
    pub gated_share: f64,
    pub ungated_share: f64,
    pub max_accepted_issuers: usize,
    pub max_k: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub epoch: u64,
    pub step: u64,
    pub service_id: String,
    pub attacker_live: u64,
    pub attacker_cumulative: u64,
    pub honest_live: u64,
    pub abusive_actions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: String,
    pub seed: u64,
    pub regime: Regime,
    pub n_people: usize,
    pub n_attackers: usize,
    pub services: Vec<ServiceMetrics>,
    pub attacker: AttackerMetrics,
    /// Attacker share of all posts made by verified accounts.
    pub influence_share: f64,
    pub false_suspensions: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sockpuppet: Option<SockpuppetMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delegation: Option<DelegationMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linkage_accuracy: Option<f64>,
    pub series: Vec<SeriesPoint>,
}

impl Metrics {
    pub fn service(&self, id: &str) -> Option<&ServiceMetrics> {
        self.services.iter().find(|s| s.service_id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn series_csv(&self) -> String {
        let mut out = String::from("epoch,step,service,attacker_live,attacker_cumulative,honest_live,abusive_actions\n");
        for p in &self.series {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.epoch, p.step, p.service_id, p.attacker_live, p.attacker_cumulative, p.honest_live, p.abusive_actions
            );
        }
        out
    }
}
