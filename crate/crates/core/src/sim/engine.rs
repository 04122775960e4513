use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeMap;

use super::config::{SimConfig, Strategy, SuspensionPolicy};
use super::metrics::{AttackerMetrics, DelegationMetrics, Metrics, SeriesPoint, ServiceMetrics};
use super::SimError;
use crate::crypto::{GroupElement, GroupParams, KeyPair};
use crate::issuance::{recovery_hash, EnrollmentRequest, EpochRing, IssuanceError, IssuerConfig, IssuerState, Ticket};
use crate::relying_party::{
    check_delegation, register_account, suspend, verify_presentation, AcceptedIssuer, Expected, PseudonymLedger,
    RelyingPartyError, ServiceConfig,
};
use crate::wallet::{create_delegation, create_identity, create_presentation, Credential, DelegationAttestation, PresentationContext};

pub(crate) const SCOPE: &str = "account-registration";
const DELEGATION_SCOPE: &str = "post";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Honest,
    Seller,
    Attacker,
}

struct Holding {
    root: String,
    issuer: usize,
    keypair: KeyPair,
    code: [u8; 16],
    cred: Option<Credential>,
    /// Held at an issuer that does not enforce limits; replaced each epoch.
    disposable: bool,
    purchased: bool,
}

struct Agent {
    role: Role,
    holdings: Vec<usize>,
    abusive_principal: bool,
}

struct Account {
    agent: usize,
    live: bool,
}

struct Delegation {
    principal: usize,
    service: usize,
    attestation: DelegationAttestation,
    abusive: bool,
}

struct Service {
    config: ServiceConfig,
    policy: SuspensionPolicy,
    catch_probability: f64,
    issuer_index: Vec<usize>,
    ledger: PseudonymLedger,
    accounts: Vec<Account>,
    by_pseudonym: BTreeMap<(usize, GroupElement), Vec<usize>>,
    metrics: ServiceMetrics,
    opened_per_agent: BTreeMap<usize, u64>,
}

impl Service {
    fn accepts(&self, issuer: usize) -> bool {
        self.issuer_index.contains(&issuer)
    }

    fn live_per_agent(&self, agent: usize) -> u64 {
        self.accounts.iter().filter(|a| a.agent == agent && a.live).count() as u64
    }
}

pub(crate) struct World<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha20Rng,
    params: GroupParams,
    issuers: Vec<IssuerState>,
    rings: BTreeMap<String, EpochRing>,
    dirty: Vec<bool>,
    services: Vec<Service>,
    agents: Vec<Agent>,
    holdings: Vec<Holding>,
    delegations: Vec<Delegation>,
    principals: Vec<usize>,
    attacker: AttackerMetrics,
    delegation: DelegationMetrics,
    series: Vec<SeriesPoint>,
    epoch: u64,
}

impl<'a> World<'a> {
    pub(crate) fn new(cfg: &'a SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        let params = GroupParams::preset(&cfg.issuers[0].params)?;

        let mut issuers = Vec::with_capacity(cfg.issuers.len());
        for spec in &cfg.issuers {
            let mut ic = IssuerConfig::new(spec.id.clone(), params.clone());
            ic.cohort_size = spec.cohort_size;
            ic.enforce_limit = spec.credential_limit_enforced;
            let mut state = IssuerState::new(ic, &mut rng)?;
            state.disable_journal();
            issuers.push(state);
        }

        let mut services = Vec::with_capacity(cfg.services.len());
        for spec in &cfg.services {
            let issuer_index: Vec<usize> = spec
                .accepted_issuers
                .iter()
                .map(|id| cfg.issuers.iter().position(|i| &i.id == id).expect("validated"))
                .collect();
            let config = ServiceConfig {
                service_id: spec.id.clone(),
                params: params.clone(),
                accepted_issuers: issuer_index
                    .iter()
                    .map(|&i| AcceptedIssuer {
                        issuer_id: issuers[i].issuer_id().to_owned(),
                        public_key: issuers[i].public_key().clone(),
                    })
                    .collect(),
                account_limit: spec.k,
                scopes: vec![SCOPE.into()],
            };
            let mut seed = [0u8; 32];
            rng.fill_bytes(&mut seed);
            let mut ledger = PseudonymLedger::new(&spec.id, &params, seed);
            ledger.disable_journal();
            services.push(Service {
                metrics: ServiceMetrics {
                    service_id: spec.id.clone(),
                    accepted_issuers: issuer_index.len(),
                    k: spec.k,
                    ..Default::default()
                },
                config,
                policy: spec.suspension_policy,
                catch_probability: spec.catch_probability,
                issuer_index,
                ledger,
                accounts: Vec::new(),
                by_pseudonym: BTreeMap::new(),
                opened_per_agent: BTreeMap::new(),
            });
        }

        let mut world = Self {
            cfg,
            rng,
            params,
            rings: BTreeMap::new(),
            dirty: vec![true; issuers.len()],
            issuers,
            services,
            agents: Vec::new(),
            holdings: Vec::new(),
            delegations: Vec::new(),
            principals: Vec::new(),
            attacker: AttackerMetrics::default(),
            delegation: DelegationMetrics::default(),
            series: Vec::new(),
            epoch: 0,
        };
        world.populate();
        Ok(world)
    }

    fn populate(&mut self) {
        let cfg = self.cfg;
        // Honest people spread over the issuers that some service accepts.
        let usable: Vec<usize> = (0..self.issuers.len())
            .filter(|&i| self.services.iter().any(|s| s.accepts(i)))
            .collect();
        for p in 0..cfg.n_people {
            let issuer = usable[p % usable.len()];
            let h = self.new_holding(format!("person-{p:05}"), issuer, false);
            self.agents.push(Agent {
                role: Role::Honest,
                holdings: vec![h],
                abusive_principal: false,
            });
        }
        let mut people: Vec<usize> = (0..cfg.n_people).collect();
        people.shuffle(&mut self.rng);
        let mut people = people.into_iter();
        if cfg.uses(Strategy::CredentialPurchase) {
            for p in people.by_ref().take(cfg.attacker.market_supply) {
                self.agents[p].role = Role::Seller;
            }
        }
        let d = &cfg.delegation;
        let principals: Vec<usize> = people.take(d.principals).collect();
        for (i, &p) in principals.iter().enumerate() {
            self.agents[p].abusive_principal = i < d.abusive_principals;
        }
        self.delegation.unverified_agents = d.unverified_agents as u64;
        self.principals = principals;

        for _ in 0..cfg.n_attackers {
            self.agents.push(Agent {
                role: Role::Attacker,
                holdings: Vec::new(),
                abusive_principal: false,
            });
        }
    }

    fn new_holding(&mut self, root: String, issuer: usize, disposable: bool) -> usize {
        let (keypair, code) = create_identity(&self.params, &mut self.rng);
        self.holdings.push(Holding {
            root,
            issuer,
            keypair,
            code,
            cred: None,
            disposable,
            purchased: false,
        });
        self.holdings.len() - 1
    }

    fn rekey(&mut self, h: usize) {
        let (keypair, code) = create_identity(&self.params, &mut self.rng);
        let holding = &mut self.holdings[h];
        holding.keypair = keypair;
        holding.code = code;
        holding.cred = None;
    }

    /// Returns `Ok(false)` when the issuer refuses a second enrollment.
    fn enroll(&mut self, h: usize, ticket: Option<Ticket>) -> Result<bool, SimError> {
        let holding = &self.holdings[h];
        let req = EnrollmentRequest {
            root_id: holding.root.clone(),
            public_key: holding.keypair.public().clone(),
            recovery_hash: recovery_hash(&holding.root, &holding.code),
            reenroll_ticket: ticket,
        };
        let issuer = holding.issuer;
        match self.issuers[issuer].enroll(&req) {
            Ok(placed) => {
                let holding = &mut self.holdings[h];
                holding.cred = Some(Credential {
                    issuer_id: self.issuers[issuer].issuer_id().to_owned(),
                    params: self.params.clone(),
                    epoch: placed.epoch,
                    keypair: holding.keypair.clone(),
                    cohort_index: placed.cohort_index,
                    position: placed.position,
                    recovery_code: holding.code.to_vec(),
                });
                self.dirty[issuer] = true;
                Ok(true)
            }
            Err(IssuanceError::DuplicateEnrollment) => Ok(false),
            Err(e) => Err(e.into()),
        }
    }

    fn refresh_rings(&mut self) {
        for (i, issuer) in self.issuers.iter().enumerate() {
            if self.dirty[i] {
                self.rings.insert(issuer.issuer_id().to_owned(), issuer.current_ring_snapshot());
                self.dirty[i] = false;
            }
        }
    }

    fn is_attacker(&self, agent: usize) -> bool {
        self.agents[agent].role == Role::Attacker
    }

    /// One presentation and registration attempt.
    fn register(&mut self, s: usize, agent: usize, h: usize) -> Result<Result<(), RelyingPartyError>, SimError> {
        self.refresh_rings();
        let cred = self.holdings[h].cred.clone().expect("registering requires a credential");
        let service = &mut self.services[s];
        let challenge = service.ledger.issue_challenge();
        let ctx = PresentationContext {
            issuer_id: cred.issuer_id.clone(),
            service_id: service.config.service_id.clone(),
            scope: SCOPE.into(),
            challenge,
        };
        let ring = &self.rings[&cred.issuer_id];
        let pres = create_presentation(&cred, ring, &ctx, &mut self.rng)?;
        let expected = Expected {
            service_id: ctx.service_id.clone(),
            scope: ctx.scope.clone(),
            challenge,
        };
        let verified = match verify_presentation(&service.config, &self.rings, &service.ledger, &pres, &expected) {
            Ok(v) => v,
            Err(e) => return Ok(Err(e)),
        };
        if let Err(e) = register_account(&service.config, &mut service.ledger, &verified) {
            return Ok(Err(e));
        }
        let index = service.accounts.len();
        service.accounts.push(Account { agent, live: true });
        service
            .by_pseudonym
            .entry((self.holdings[h].issuer, verified.tag))
            .or_default()
            .push(index);
        *service.opened_per_agent.entry(agent).or_default() += 1;
        let attacker = self.agents[agent].role == Role::Attacker;
        if attacker {
            service.metrics.attacker_accounts_total += 1;
            let live = service.live_per_agent(agent);
            service.metrics.max_live_accounts_per_attacker = service.metrics.max_live_accounts_per_attacker.max(live);
            if self.cfg.uses(Strategy::ChallengeReplay) {
                self.attacker.replay_attempts += 1;
                let replayed = verify_presentation(&service.config, &self.rings, &service.ledger, &pres, &expected)
                    .and_then(|v| register_account(&service.config, &mut service.ledger, &v));
                match replayed {
                    Err(RelyingPartyError::ReplayedChallenge) => self.attacker.replay_rejected += 1,
                    Err(_) => {}
                    Ok(_) => {
                        return Err(SimError::Invariant("a replayed challenge opened an account".into()));
                    }
                }
            }
        } else {
            service.metrics.honest_accounts += 1;
        }
        Ok(Ok(()))
    }

    /// Opens accounts for one holding at every service that accepts it,
    /// up to what the service allows.
    fn register_holding(&mut self, agent: usize, h: usize, max_per_service: Option<u32>) -> Result<(), SimError> {
        if self.holdings[h].cred.is_none() {
            return Ok(());
        }
        for s in 0..self.services.len() {
            if !self.services[s].accepts(self.holdings[h].issuer) {
                continue;
            }
            let mut opened = 0;
            while max_per_service.is_none_or(|m| opened < m) {
                match self.register(s, agent, h)? {
                    Ok(()) => opened += 1,
                    Err(RelyingPartyError::LimitReached | RelyingPartyError::SuspendedCredential) => break,
                    Err(e) => return Err(SimError::Invariant(format!("unexpected rejection: {e}"))),
                }
            }
        }
        Ok(())
    }

    fn attempt(&mut self) -> bool {
        self.attacker.enrollment_attempts += 1;
        let ok = self.rng.gen_bool(self.cfg.attacker.enrollment_success);
        if !ok {
            self.attacker.failed_root_checks += 1;
        }
        ok
    }

    fn target_issuers(&self) -> Vec<usize> {
        let accepted: Vec<usize> = (0..self.issuers.len())
            .filter(|&i| self.services.iter().any(|s| s.accepts(i)))
            .collect();
        if self.cfg.uses(Strategy::MultiIssuer) {
            accepted
        } else {
            accepted.into_iter().take(1).collect()
        }
    }

    fn attacker_enrollment(&mut self, agent: usize, index: usize) -> Result<(), SimError> {
        let budget = self.cfg.attacker.budget;
        let root = format!("attacker-{index:04}");
        let targets = self.target_issuers();
        let mut spent = 0u64;

        // Drop last epoch's disposable credentials.
        let holdings = std::mem::take(&mut self.agents[agent].holdings);
        let mut kept = Vec::new();
        for h in holdings {
            if !self.holdings[h].disposable {
                kept.push(h);
            }
        }
        self.agents[agent].holdings = kept;

        // One long-lived credential per enforcing target issuer.
        for &issuer in &targets {
            if !self.issuers[issuer].config().enforce_limit {
                continue;
            }
            let existing = self.agents[agent]
                .holdings
                .iter()
                .copied()
                .find(|&h| self.holdings[h].issuer == issuer && !self.holdings[h].purchased);
            let h = match existing {
                Some(h) => {
                    if self.epoch > 0 && self.cfg.uses(Strategy::RekeyOnRollover) {
                        self.rekey(h);
                    }
                    h
                }
                None => {
                    let h = self.new_holding(root.clone(), issuer, false);
                    self.agents[agent].holdings.push(h);
                    h
                }
            };
            self.holdings[h].cred = None;
            while spent < budget && self.holdings[h].cred.is_none() {
                spent += 1;
                if self.attempt() {
                    if self.enroll(h, None)? {
                        self.attacker.credentials_obtained += 1;
                    } else {
                        self.attacker.duplicate_rejections += 1;
                        break;
                    }
                }
            }
        }

        // The rest of the budget: fresh keys wherever limits are not enforced,
        // otherwise further attempts that the issuers turn away.
        let open: Vec<usize> = targets
            .iter()
            .copied()
            .filter(|&i| !self.issuers[i].config().enforce_limit)
            .collect();
        let mut turn = 0usize;
        while spent < budget {
            spent += 1;
            if open.is_empty() {
                let issuer = targets[turn % targets.len()];
                turn += 1;
                if !self.attempt() {
                    continue;
                }
                let h = self.new_holding(root.clone(), issuer, true);
                if self.enroll(h, None)? {
                    return Err(SimError::Invariant("an enforcing issuer admitted a second credential".into()));
                }
                self.attacker.duplicate_rejections += 1;
                self.holdings.pop();
            } else {
                let issuer = open[turn % open.len()];
                turn += 1;
                if !self.attempt() {
                    continue;
                }
                let h = self.new_holding(root.clone(), issuer, true);
                if self.enroll(h, None)? {
                    self.attacker.credentials_obtained += 1;
                    self.agents[agent].holdings.push(h);
                }
            }
        }
        Ok(())
    }

    fn enrollment_phase(&mut self) -> Result<(), SimError> {
        let mut order: Vec<usize> = (0..self.agents.len()).collect();
        order.shuffle(&mut self.rng);
        let mut attacker_index = BTreeMap::new();
        for (i, a) in (0..self.agents.len()).filter(|&a| self.is_attacker(a)).enumerate() {
            attacker_index.insert(a, i);
        }
        for agent in order {
            match self.agents[agent].role {
                Role::Honest | Role::Seller => {
                    let h = self.agents[agent].holdings[0];
                    if !self.enroll(h, None)? {
                        return Err(SimError::Invariant("honest re-enrollment refused".into()));
                    }
                }
                Role::Attacker => {
                    // Purchased credentials are renewed by their sellers.
                    self.attacker_enrollment(agent, attacker_index[&agent])?;
                }
            }
        }
        Ok(())
    }

    fn purchase(&mut self) {
        if !self.cfg.uses(Strategy::CredentialPurchase) || self.cfg.n_attackers == 0 {
            return;
        }
        let attackers: Vec<usize> = (0..self.agents.len()).filter(|&a| self.is_attacker(a)).collect();
        let sellers: Vec<usize> = (0..self.agents.len())
            .filter(|&a| self.agents[a].role == Role::Seller)
            .collect();
        for (i, seller) in sellers.into_iter().enumerate() {
            let h = self.agents[seller].holdings[0];
            self.holdings[h].purchased = true;
            self.agents[attackers[i % attackers.len()]].holdings.push(h);
            self.attacker.credentials_purchased += 1;
        }
    }

    fn registration_phase(&mut self) -> Result<(), SimError> {
        let mut order: Vec<usize> = (0..self.agents.len()).collect();
        order.shuffle(&mut self.rng);
        for agent in order {
            match self.agents[agent].role {
                Role::Seller => {}
                Role::Honest => {
                    let h = self.agents[agent].holdings[0];
                    let issuer = self.holdings[h].issuer;
                    for s in 0..self.services.len() {
                        if self.services[s].accepts(issuer) && !self.services[s].opened_per_agent.contains_key(&agent) {
                            match self.register(s, agent, h)? {
                                Ok(()) => {}
                                Err(e) => return Err(SimError::Invariant(format!("honest registration failed: {e}"))),
                            }
                        }
                    }
                }
                Role::Attacker => {
                    for h in self.agents[agent].holdings.clone() {
                        self.register_holding(agent, h, None)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn create_delegations(&mut self) -> Result<(), SimError> {
        let d = &self.cfg.delegation;
        for &p in &self.principals.clone() {
            let h = self.agents[p].holdings[0];
            let issuer = self.holdings[h].issuer;
            let Some(s) = (0..self.services.len()).find(|&s| self.services[s].accepts(issuer)) else {
                continue;
            };
            let cred = self.holdings[h].cred.clone().expect("principal enrolled");
            let ctx = PresentationContext {
                issuer_id: cred.issuer_id.clone(),
                service_id: self.services[s].config.service_id.clone(),
                scope: SCOPE.into(),
                challenge: [0; 16],
            };
            let expiry = self.cfg.horizon.epochs * self.cfg.horizon.steps;
            for i in 0..d.agents_per_principal {
                let agent_key = KeyPair::generate(&self.params, &mut self.rng);
                let attestation = create_delegation(&cred, &ctx, agent_key.public(), DELEGATION_SCOPE, expiry, &mut self.rng)?;
                self.delegations.push(Delegation {
                    principal: p,
                    service: s,
                    attestation,
                    abusive: self.agents[p].abusive_principal && i == 0,
                });
                self.delegation.delegations_issued += 1;
            }
            if self.agents[p].abusive_principal {
                self.delegation.abusive_agents += 1;
            }
        }
        Ok(())
    }

    fn now(&self, step: u64) -> u64 {
        self.epoch * self.cfg.horizon.steps + step
    }

    fn suspend_pseudonym(&mut self, s: usize, issuer: usize, tag: &GroupElement) {
        let issuer_id = self.issuers[issuer].issuer_id();
        let service = &mut self.services[s];
        suspend(&mut service.ledger, issuer_id, tag);
        if let Some(accounts) = service.by_pseudonym.get(&(issuer, tag.clone())) {
            for &a in accounts {
                service.accounts[a].live = false;
            }
        }
        service.metrics.suspended_pseudonyms += 1;
    }

    fn step(&mut self, step: u64) -> Result<(), SimError> {
        // Posting and abuse by account holders.
        for s in 0..self.services.len() {
            let mut caught = Vec::new();
            let service = &mut self.services[s];
            let keys: Vec<(usize, GroupElement)> = service.by_pseudonym.keys().cloned().collect();
            for key in keys {
                let accounts = service.by_pseudonym[&key].clone();
                for a in accounts {
                    if !service.accounts[a].live {
                        continue;
                    }
                    let agent = service.accounts[a].agent;
                    if self.agents[agent].role == Role::Attacker {
                        service.metrics.attacker_posts += 1;
                        service.metrics.abusive_actions += 1;
                        if self.rng.gen_bool(service.catch_probability) {
                            service.metrics.caught_actions += 1;
                            match service.policy {
                                SuspensionPolicy::BanAccount => service.accounts[a].live = false,
                                SuspensionPolicy::SuspendCredential => {
                                    caught.push(key.clone());
                                    break;
                                }
                            }
                        }
                    } else if self.agents[agent].role == Role::Honest {
                        service.metrics.honest_posts += 1;
                    }
                }
            }
            for (issuer, tag) in caught {
                self.suspend_pseudonym(s, issuer, &tag);
            }
        }

        self.delegation_step(step)?;

        if self.cfg.uses(Strategy::RevocationChurn) {
            self.churn()?;
        }
        self.record(step);
        Ok(())
    }

    fn delegation_step(&mut self, step: u64) -> Result<(), SimError> {
        let now = self.now(step);
        for i in 0..self.delegations.len() {
            let s = self.delegations[i].service;
            let service = &self.services[s];
            let valid = matches!(
                check_delegation(&service.config, &service.ledger, &self.delegations[i].attestation, SCOPE, now),
                Ok(true)
            );
            if !valid {
                continue;
            }
            self.delegation.verified_agent_actions += 1;
            if self.delegations[i].abusive {
                self.delegation.delegation_abuse_count += 1;
                if self.rng.gen_bool(service.catch_probability) {
                    self.delegation.abusive_agents_caught += 1;
                    let principal = self.delegations[i].principal;
                    let h = self.agents[principal].holdings[0];
                    let issuer = self.holdings[h].issuer;
                    let tag = self.delegations[i].attestation.tag.clone();
                    if service.policy == SuspensionPolicy::SuspendCredential {
                        self.suspend_pseudonym(s, issuer, &tag);
                    }
                }
            }
        }
        self.delegation.unverified_agent_actions += self.cfg.delegation.unverified_agents as u64;
        Ok(())
    }

    /// Revokes suspended credentials and enrolls fresh keys with the ticket.
    fn churn(&mut self) -> Result<(), SimError> {
        for agent in 0..self.agents.len() {
            if !self.is_attacker(agent) {
                continue;
            }
            for h in self.agents[agent].holdings.clone() {
                let Some(cred) = self.holdings[h].cred.clone() else { continue };
                let issuer = self.holdings[h].issuer;
                let suspended = self.services.iter().any(|s| {
                    let ctx = PresentationContext {
                        issuer_id: cred.issuer_id.clone(),
                        service_id: s.config.service_id.clone(),
                        scope: SCOPE.into(),
                        challenge: [0; 16],
                    };
                    s.accepts(issuer)
                        && cred
                            .tag_for(&ctx)
                            .ok()
                            .and_then(|t| s.ledger.entry(&cred.issuer_id, &t))
                            .is_some_and(|e| e.suspended)
                });
                if !suspended {
                    continue;
                }
                let root = self.holdings[h].root.clone();
                match self.issuers[issuer].revoke(&self.holdings[h].code, &root) {
                    Ok(ticket) => {
                        self.attacker.revocations += 1;
                        self.dirty[issuer] = true;
                        self.rekey(h);
                        if self.enroll(h, Some(ticket))? {
                            self.attacker.credentials_obtained += 1;
                            self.register_holding(agent, h, None)?;
                        }
                    }
                    Err(IssuanceError::AlreadyRevokedThisEpoch) => self.attacker.revocations_refused += 1,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Ok(())
    }

    fn record(&mut self, step: u64) {
        let attackers: Vec<usize> = (0..self.agents.len()).filter(|&a| self.is_attacker(a)).collect();
        for service in &mut self.services {
            let mut attacker_live = 0;
            let mut honest_live = 0;
            for account in &service.accounts {
                if !account.live {
                    continue;
                }
                if self.agents[account.agent].role == Role::Attacker {
                    attacker_live += 1;
                } else {
                    honest_live += 1;
                }
            }
            for &a in &attackers {
                let live = service.live_per_agent(a);
                service.metrics.max_live_accounts_per_attacker = service.metrics.max_live_accounts_per_attacker.max(live);
            }
            self.series.push(SeriesPoint {
                epoch: self.epoch,
                step,
                service_id: service.config.service_id.clone(),
                attacker_live,
                attacker_cumulative: service.metrics.attacker_accounts_total,
                honest_live,
                abusive_actions: service.metrics.abusive_actions,
            });
        }
    }

    pub(crate) fn run(mut self, scenario: &str) -> Result<Metrics, SimError> {
        for epoch in 0..self.cfg.horizon.epochs {
            self.epoch = epoch;
            if epoch > 0 {
                for (i, issuer) in self.issuers.iter_mut().enumerate() {
                    issuer.advance_epoch()?;
                    self.dirty[i] = true;
                }
                for h in &mut self.holdings {
                    h.cred = None;
                }
            }
            self.enrollment_phase()?;
            if epoch == 0 {
                self.purchase();
            }
            self.registration_phase()?;
            if epoch == 0 {
                self.create_delegations()?;
            }
            for step in 0..self.cfg.horizon.steps {
                self.step(step)?;
            }
        }
        self.finish(scenario)
    }

    fn finish(mut self, scenario: &str) -> Result<Metrics, SimError> {
        let final_now = self.now(self.cfg.horizon.steps.saturating_sub(1));
        // Delegation outcome at the end of the run.
        let mut invalid_by_principal: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
        for d in &self.delegations {
            let service = &self.services[d.service];
            let suspended = matches!(
                check_delegation(&service.config, &service.ledger, &d.attestation, SCOPE, final_now),
                Err(RelyingPartyError::SuspendedPrincipal)
            );
            let entry = invalid_by_principal.entry(d.principal).or_default();
            entry.0 += 1;
            if suspended {
                entry.1 += 1;
                self.delegation.delegations_invalidated += 1;
                if !self.agents[d.principal].abusive_principal {
                    self.delegation.innocent_delegations_invalidated += 1;
                }
            }
        }
        self.delegation.incomplete_cascades =
            invalid_by_principal.values().filter(|(n, bad)| *bad > 0 && bad < n).count() as u64;

        let mut false_suspensions = 0u64;
        for agent in &self.agents {
            if agent.role != Role::Honest || agent.abusive_principal {
                continue;
            }
            let h = agent.holdings[0];
            let Some(cred) = &self.holdings[h].cred else { continue };
            let suspended = self.services.iter().any(|s| {
                let ctx = PresentationContext {
                    issuer_id: cred.issuer_id.clone(),
                    service_id: s.config.service_id.clone(),
                    scope: SCOPE.into(),
                    challenge: [0; 16],
                };
                cred.tag_for(&ctx)
                    .ok()
                    .and_then(|t| s.ledger.entry(&cred.issuer_id, &t))
                    .is_some_and(|e| e.suspended)
            });
            if suspended {
                false_suspensions += 1;
            }
        }

        let mut attacker_posts = 0u64;
        let mut all_posts = 0u64;
        let n_agents = self.agents.len();
        let mut services = Vec::with_capacity(self.services.len());
        for service in self.services {
            let mut m = service.metrics;
            for agent in 0..n_agents {
                let opened = service.opened_per_agent.get(&agent).copied().unwrap_or(0);
                *m.accounts_per_agent.entry(opened as u32).or_default() += 1;
                if self.agents[agent].role == Role::Attacker {
                    m.max_accounts_per_attacker = m.max_accounts_per_attacker.max(opened);
                }
            }
            m.attacker_accounts_live = service
                .accounts
                .iter()
                .filter(|a| a.live && self.agents[a.agent].role == Role::Attacker)
                .count() as u64;
            attacker_posts += m.attacker_posts;
            all_posts += m.attacker_posts + m.honest_posts;
            services.push(m);
        }
        let has_delegation = self.cfg.delegation.principals > 0 || self.cfg.delegation.unverified_agents > 0;
        Ok(Metrics {
            scenario: scenario.to_owned(),
            seed: self.cfg.seed,
            regime: self.cfg.regime,
            n_people: self.cfg.n_people,
            n_attackers: self.cfg.n_attackers,
            services,
            attacker: self.attacker,
            influence_share: if all_posts == 0 { 0.0 } else { attacker_posts as f64 / all_posts as f64 },
            false_suspensions,
            sockpuppet: None,
            delegation: has_delegation.then_some(self.delegation),
            linkage_accuracy: None,
            series: self.series,
        })
    }
}
