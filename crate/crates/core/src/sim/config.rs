use serde::{Deserialize, Serialize};

use super::SimError;
use crate::crypto::GroupParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Unlimited,
    SingleIssuer,
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuspensionPolicy {
    /// A caught action suspends the pseudonym, closing all its accounts and
    /// blocking new ones.
    SuspendCredential,
    /// A caught action closes only the offending account.
    BanAccount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Enroll at every issuer the targeted services accept.
    MultiIssuer,
    /// Revoke a suspended credential and enroll a fresh key with the ticket.
    RevocationChurn,
    /// Enroll a fresh key at each epoch rollover.
    RekeyOnRollover,
    /// Buy credentials from people willing to sell them.
    CredentialPurchase,
    /// Resubmit an already used challenge and presentation.
    ChallengeReplay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssuerSpec {
    pub id: String,
    #[serde(default = "yes")]
    pub credential_limit_enforced: bool,
    #[serde(default = "default_params")]
    pub params: String,
    #[serde(default = "default_cohort")]
    pub cohort_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSpec {
    pub id: String,
    pub accepted_issuers: Vec<String>,
    #[serde(default = "one")]
    pub k: u32,
    #[serde(default = "default_policy")]
    pub suspension_policy: SuspensionPolicy,
    #[serde(default)]
    pub catch_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub epochs: u64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerSpec {
    #[serde(default)]
    pub strategies: Vec<Strategy>,
    /// Enrollment attempts per attacker per epoch.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Chance that one enrollment attempt passes the root-of-trust check.
    #[serde(default = "one_f")]
    pub enrollment_success: f64,
    /// Credentials offered for sale across the whole population.
    #[serde(default)]
    pub market_supply: usize,
}

impl Default for AttackerSpec {
    fn default() -> Self {
        Self {
            strategies: vec![Strategy::MultiIssuer],
            budget: default_budget(),
            enrollment_success: 1.0,
            market_supply: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelegationSpec {
    /// Honest people who delegate to agents.
    #[serde(default)]
    pub principals: usize,
    #[serde(default)]
    pub agents_per_principal: usize,
    /// Principals with exactly one abusive agent.
    #[serde(default)]
    pub abusive_principals: usize,
    /// Agents acting without any attestation.
    #[serde(default)]
    pub unverified_agents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_people: usize,
    pub n_attackers: usize,
    pub issuers: Vec<IssuerSpec>,
    pub services: Vec<ServiceSpec>,
    pub regime: Regime,
    pub horizon: Horizon,
    #[serde(default)]
    pub attacker: AttackerSpec,
    #[serde(default)]
    pub delegation: DelegationSpec,
    /// Accounts each attacker runs per service when nothing gates signup.
    #[serde(default = "default_bots")]
    pub bot_multiplier: u64,
}

fn yes() -> bool {
    true
}
fn one() -> u32 {
    1
}
fn one_f() -> f64 {
    1.0
}
fn default_params() -> String {
    "test-256".into()
}
fn default_cohort() -> usize {
    16
}
fn default_policy() -> SuspensionPolicy {
    SuspensionPolicy::SuspendCredential
}
fn default_budget() -> u64 {
    8
}
fn default_bots() -> u64 {
    20
}

fn probability(name: &str, p: f64) -> Result<(), SimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::InvalidConfig(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let config: SimConfig = serde_json::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.issuers.is_empty() {
            return bad("at least one issuer is required".into());
        }
        if self.services.is_empty() {
            return bad("at least one service is required".into());
        }
        if self.horizon.epochs == 0 || self.horizon.steps == 0 {
            return bad("horizon needs at least one epoch and one step".into());
        }
        let first = &self.issuers[0].params;
        for (i, issuer) in self.issuers.iter().enumerate() {
            if self.issuers[..i].iter().any(|o| o.id == issuer.id) {
                return bad(format!("duplicate issuer id {}", issuer.id));
            }
            if &issuer.params != first {
                return bad("all issuers must share one parameter preset".into());
            }
            if issuer.cohort_size == 0 {
                return bad(format!("issuer {} has cohort size 0", issuer.id));
            }
        }
        let params = GroupParams::preset(first)?;
        if params.bits() < 256 {
            return Err(SimError::ToyParamsRejected(params.name().to_owned()));
        }
        for (i, service) in self.services.iter().enumerate() {
            if self.services[..i].iter().any(|o| o.id == service.id) {
                return bad(format!("duplicate service id {}", service.id));
            }
            if service.k == 0 {
                return bad(format!("service {} has k = 0", service.id));
            }
            if service.accepted_issuers.is_empty() {
                return bad(format!("service {} accepts no issuer", service.id));
            }
            for id in &service.accepted_issuers {
                if !self.issuers.iter().any(|i| &i.id == id) {
                    return bad(format!("service {} accepts unknown issuer {id}", service.id));
                }
            }
            probability("catch_probability", service.catch_probability)?;
        }
        probability("enrollment_success", self.attacker.enrollment_success)?;

        let unenforced = self.issuers.iter().any(|i| !i.credential_limit_enforced);
        match self.regime {
            Regime::Unlimited if !unenforced => {
                return bad("regime unlimited needs an issuer without limit enforcement".into())
            }
            Regime::SingleIssuer | Regime::Bounded if unenforced => {
                return bad("only the unlimited regime may disable limit enforcement".into())
            }
            Regime::SingleIssuer if self.issuers.len() != 1 => {
                return bad("regime single-issuer needs exactly one issuer".into())
            }
            Regime::Bounded if self.issuers.len() < 2 => return bad("regime bounded needs several issuers".into()),
            _ => {}
        }
        if self.attacker.market_supply > self.n_people {
            return bad("market supply exceeds the population".into());
        }
        let d = &self.delegation;
        if d.principals + self.attacker.market_supply > self.n_people {
            return bad("delegating principals and sellers must be distinct people".into());
        }
        if d.abusive_principals > d.principals {
            return bad("more abusive principals than principals".into());
        }
        if d.abusive_principals > 0 && d.agents_per_principal == 0 {
            return bad("abusive principals need at least one agent".into());
        }
        Ok(())
    }

    pub fn uses(&self, strategy: Strategy) -> bool {
        self.attacker.strategies.contains(&strategy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bounded() -> SimConfig {
        SimConfig {
            seed: 1,
            n_people: 10,
            n_attackers: 1,
            issuers: ["a", "b", "c"]
                .iter()
                .map(|id| IssuerSpec {
                    id: id.to_string(),
                    credential_limit_enforced: true,
                    params: "test-256".into(),
                    cohort_size: 4,
                })
                .collect(),
            services: vec![ServiceSpec {
                id: "forum".into(),
                accepted_issuers: vec!["a".into(), "b".into(), "c".into()],
                k: 1,
                suspension_policy: SuspensionPolicy::SuspendCredential,
                catch_probability: 0.0,
            }],
            regime: Regime::Bounded,
            horizon: Horizon { epochs: 1, steps: 2 },
            attacker: AttackerSpec::default(),
            delegation: DelegationSpec::default(),
            bot_multiplier: 20,
        }
    }

    #[test]
    fn regime_invariants() {
        let ok = bounded();
        assert!(ok.validate().is_ok());

        let mut single = bounded();
        single.regime = Regime::SingleIssuer;
        assert!(single.validate().is_err());
        single.issuers.truncate(1);
        single.services[0].accepted_issuers.truncate(1);
        assert!(single.validate().is_ok());

        let mut unlimited = bounded();
        unlimited.regime = Regime::Unlimited;
        assert!(unlimited.validate().is_err());
        unlimited.issuers[2].credential_limit_enforced = false;
        assert!(unlimited.validate().is_ok());
        let mut mixed = unlimited.clone();
        mixed.regime = Regime::Bounded;
        assert!(mixed.validate().is_err());
    }

    #[test]
    fn toy_params_rejected() {
        let mut c = bounded();
        for i in &mut c.issuers {
            i.params = "toy-23".into();
        }
        assert!(matches!(c.validate(), Err(SimError::ToyParamsRejected(_))));
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let c = bounded();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(SimConfig::from_json(&text).unwrap(), c);
        let minimal = r#"{"seed":3,"n_people":5,"n_attackers":0,"regime":"single-issuer",
            "issuers":[{"id":"i"}],"services":[{"id":"s","accepted_issuers":["i"]}],
            "horizon":{"epochs":1,"steps":1}}"#;
        let m = SimConfig::from_json(minimal).unwrap();
        assert_eq!(m.issuers[0].cohort_size, 16);
        assert_eq!(m.services[0].k, 1);
        assert!(SimConfig::from_json(r#"{"seed":1}"#).is_err());
    }

    #[test]
    fn bad_probability_rejected() {
        let mut c = bounded();
        c.services[0].catch_probability = 1.5;
        assert!(c.validate().is_err());
    }
}
