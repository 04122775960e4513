use phc_core::sim::{
    linkage_experiment, run, scenario_bot_suspension, scenario_delegation, scenario_sockpuppet, AttackerSpec, Build,
    DelegationSpec, Horizon, IssuerSpec, LinkageConfig, Regime, ServiceSpec, SimConfig, Strategy, SuspensionPolicy,
};

fn issuers(ids: &[&str], enforced: bool) -> Vec<IssuerSpec> {
    ids.iter()
        .map(|id| IssuerSpec {
            id: id.to_string(),
            credential_limit_enforced: enforced,
            params: "test-256".into(),
            cohort_size: 8,
        })
        .collect()
}

fn service(id: &str, accepted: &[&str], k: u32, catch: f64) -> ServiceSpec {
    ServiceSpec {
        id: id.into(),
        accepted_issuers: accepted.iter().map(|s| s.to_string()).collect(),
        k,
        suspension_policy: SuspensionPolicy::SuspendCredential,
        catch_probability: catch,
    }
}

fn bounded(seed: u64) -> SimConfig {
    SimConfig {
        seed,
        n_people: 12,
        n_attackers: 2,
        issuers: issuers(&["gov", "bank", "web"], true),
        services: vec![service("forum", &["gov", "bank", "web"], 1, 0.0)],
        regime: Regime::Bounded,
        horizon: Horizon { epochs: 2, steps: 3 },
        attacker: AttackerSpec {
            strategies: vec![Strategy::MultiIssuer, Strategy::ChallengeReplay],
            budget: 6,
            enrollment_success: 1.0,
            market_supply: 0,
        },
        delegation: DelegationSpec::default(),
        bot_multiplier: 10,
    }
}

#[test]
fn bounded_regime_caps_attacker_at_m_times_k() {
    for seed in 0..3 {
        let m = run(&bounded(seed)).unwrap();
        let forum = m.service("forum").unwrap();
        assert_eq!(forum.max_accounts_per_attacker, 3, "seed {seed}");
        assert_eq!(forum.honest_accounts, 12);
        assert!(m.attacker.duplicate_rejections > 0);
        assert_eq!(m.attacker.replay_attempts, m.attacker.replay_rejected);
        let agents: u64 = forum.accounts_per_agent.values().sum();
        assert_eq!(agents, 14);
    }
}

#[test]
fn single_issuer_caps_at_one() {
    let mut c = bounded(4);
    c.regime = Regime::SingleIssuer;
    c.issuers.truncate(1);
    c.services[0].accepted_issuers.truncate(1);
    let m = run(&c).unwrap();
    assert_eq!(m.service("forum").unwrap().max_accounts_per_attacker, 1);
}

#[test]
fn k_three_scales_the_cap() {
    let mut c = bounded(5);
    c.services[0].k = 3;
    let m = run(&c).unwrap();
    assert_eq!(m.service("forum").unwrap().max_accounts_per_attacker, 9);
}

#[test]
fn unlimited_regime_follows_budget() {
    let mut c = bounded(6);
    c.regime = Regime::Unlimited;
    c.issuers = issuers(&["mill"], false);
    c.services = vec![service("forum", &["mill"], 1, 0.0)];
    c.horizon = Horizon { epochs: 1, steps: 1 };
    c.attacker.budget = 40;
    c.attacker.enrollment_success = 0.5;
    let m = run(&c).unwrap();
    let got = m.service("forum").unwrap().attacker_accounts_total as f64;
    let expected = 2.0 * 40.0 * 0.5;
    assert!((got - expected).abs() <= 0.35 * expected, "got {got}, expected about {expected}");
}

#[test]
fn identical_seed_identical_report() {
    let mut c = bounded(9);
    c.services[0].catch_probability = 0.3;
    c.attacker.strategies.push(Strategy::RevocationChurn);
    let a = run(&c).unwrap();
    let b = run(&c).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.series_csv(), b.series_csv());
    let other = run(&c.clone().with_seed(10)).unwrap();
    assert_ne!(a.to_json(), other.to_json());
}

#[test]
fn immediate_suspension_allows_one_account() {
    let mut c = bounded(11);
    c.regime = Regime::SingleIssuer;
    c.issuers.truncate(1);
    c.n_attackers = 1;
    c.services = vec![service("board", &["gov"], 1, 1.0)];
    c.horizon = Horizon { epochs: 3, steps: 4 };
    let m = scenario_bot_suspension(&c).unwrap();
    let board = m.service("board").unwrap();
    assert_eq!(board.attacker_accounts_total, 1);
    assert_eq!(board.attacker_accounts_live, 0);
    assert_eq!(m.false_suspensions, 0);
}

#[test]
fn revocation_churn_adds_at_most_one_per_epoch() {
    let mut c = bounded(12);
    c.regime = Regime::SingleIssuer;
    c.issuers.truncate(1);
    c.n_attackers = 1;
    c.services = vec![service("board", &["gov"], 1, 1.0)];
    c.horizon = Horizon { epochs: 3, steps: 4 };
    c.attacker.strategies = vec![Strategy::RevocationChurn];
    let m = scenario_bot_suspension(&c).unwrap();
    let board = m.service("board").unwrap();
    assert_eq!(board.attacker_accounts_total, 1 + 3);
    assert_eq!(m.attacker.revocations, 3);
    assert!(m.attacker.revocations_refused > 0);
    assert_eq!(m.false_suspensions, 0);
}

/// A fresh key at each rollover is a new pseudonym, so suspension does not
/// follow it into the next epoch. Known limit, pinned here.
#[test]
fn rekey_on_rollover_returns_once_per_epoch() {
    let mut c = bounded(13);
    c.regime = Regime::SingleIssuer;
    c.issuers.truncate(1);
    c.n_attackers = 1;
    c.services = vec![service("board", &["gov"], 1, 1.0)];
    c.horizon = Horizon { epochs: 3, steps: 4 };
    c.attacker.strategies = vec![Strategy::RekeyOnRollover];
    let m = scenario_bot_suspension(&c).unwrap();
    let board = m.service("board").unwrap();
    assert_eq!(board.attacker_accounts_total, 3);
    assert_eq!(m.false_suspensions, 0);

    c.attacker.strategies.push(Strategy::RevocationChurn);
    let m = scenario_bot_suspension(&c).unwrap();
    assert_eq!(m.service("board").unwrap().attacker_accounts_total, 3 + 3);
}

#[test]
fn sockpuppet_shares() {
    let c = bounded(13);
    let m = scenario_sockpuppet(&c).unwrap();
    let s = m.sockpuppet.unwrap();
    let gated_bound = 6.0 / (12.0 + 6.0);
    assert!(s.gated_share <= gated_bound + 1e-12);
    assert!((s.ungated_share - 20.0 / 32.0).abs() < 1e-12);

    let mut none = bounded(13);
    none.n_attackers = 0;
    let m = scenario_sockpuppet(&none).unwrap();
    assert_eq!(m.sockpuppet.unwrap().gated_share, 0.0);
    assert_eq!(m.influence_share, 0.0);
}

#[test]
fn delegation_cascade() {
    let mut c = bounded(14);
    c.n_attackers = 0;
    c.services[0].catch_probability = 1.0;
    c.delegation = DelegationSpec {
        principals: 4,
        agents_per_principal: 5,
        abusive_principals: 1,
        unverified_agents: 3,
    };
    let m = scenario_delegation(&c).unwrap();
    let d = m.delegation.unwrap();
    assert_eq!(d.delegations_issued, 20);
    assert_eq!(d.delegations_invalidated, 5);
    assert_eq!(d.innocent_delegations_invalidated, 0);
    assert_eq!(d.incomplete_cascades, 0);
    assert_eq!(d.abusive_agents_caught, 1);
    assert_eq!(d.unverified_agents, 3);
    assert_eq!(m.false_suspensions, 0);

    let mut none = bounded(14);
    none.n_attackers = 0;
    let d = scenario_delegation(&none).unwrap().delegation.unwrap();
    assert_eq!(d, Default::default());
}

#[test]
fn purchased_credentials_count_for_the_buyer() {
    let mut c = bounded(15);
    c.attacker.strategies.push(Strategy::CredentialPurchase);
    c.attacker.market_supply = 2;
    let m = run(&c).unwrap();
    assert_eq!(m.attacker.credentials_purchased, 2);
    let forum = m.service("forum").unwrap();
    assert_eq!(forum.honest_accounts, 10);
    assert_eq!(forum.attacker_accounts_total, 2 * 3 + 2);
}

#[test]
fn linkage_mutants_are_caught() {
    let base = LinkageConfig {
        seed: 3,
        params: "test-256".into(),
        n_people: 100,
        trials: 30,
        cohort_size: 16,
        build: Build::Correct,
    };
    let correct = linkage_experiment(&base).unwrap();
    let cohorts = correct.trials[0].cohort_sizes.len() as f64;
    assert!(correct.accuracy < 3.0 * cohorts / 100.0, "{}", correct.accuracy);
    for build in [Build::SharedCtx, Build::TagReuse] {
        let report = linkage_experiment(&LinkageConfig { build, ..base.clone() }).unwrap();
        assert!(report.accuracy > 0.9, "{build:?} {}", report.accuracy);
    }
}
