//! Cross-service linkage experiment.
//!
//! One issuer enrolls `n_people`; each person registers at two services.
//! The adversary receives the issuer's persisted log and both services'
//! transcripts (issuer, epoch, cohort index, tag per registration, in
//! shuffled order) and tries to pair the records belonging to the same
//! person using only equality and structure comparisons.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};

use super::engine::SCOPE;
use super::SimError;
use crate::crypto::{context_base, verify_with_base, GroupElement, GroupParams};
use crate::issuance::{recovery_hash, EnrollmentRequest, IssuerConfig, IssuerEvent, IssuerState};
use crate::relying_party::{
    register_account, verify_presentation, AcceptedIssuer, Expected, PseudonymLedger, RelyingPartyError, ServiceConfig,
    VerifiedPseudonym,
};
use crate::wallet::{
    create_identity, create_presentation, create_presentation_with_base, pseudonym_context, Credential, PresentationContext,
};

pub const MIN_PEOPLE: usize = 100;
pub const MIN_TRIALS: usize = 30;

/// Which pseudonym derivation the wallet and services use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Build {
    Correct,
    /// The tag context leaves out the service identifier.
    SharedCtx,
    /// The tag base is the group generator, so the tag equals the public key.
    TagReuse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkageConfig {
    pub seed: u64,
    #[serde(default = "default_params")]
    pub params: String,
    pub n_people: usize,
    pub trials: usize,
    #[serde(default = "default_cohort")]
    pub cohort_size: usize,
    #[serde(default = "default_build")]
    pub build: Build,
}

fn default_params() -> String {
    "test-256".into()
}
fn default_cohort() -> usize {
    16
}
fn default_build() -> Build {
    Build::Correct
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub correct: usize,
    pub cohort_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkageReport {
    pub build: Build,
    pub n_people: usize,
    pub trials: Vec<TrialOutcome>,
    pub accuracy: f64,
}

/// What a service keeps about one registration, as handed to the adversary.
#[derive(Debug, Clone)]
struct Record {
    cohort_index: usize,
    tag: GroupElement,
    /// Hidden from the adversary; used only for scoring.
    person: usize,
}

pub fn linkage_experiment(config: &LinkageConfig) -> Result<LinkageReport, SimError> {
    let params = GroupParams::preset(&config.params)?;
    if params.bits() < 256 {
        return Err(SimError::ToyParamsRejected(params.name().to_owned()));
    }
    if config.n_people < MIN_PEOPLE {
        return Err(SimError::InvalidConfig(format!("linkage needs at least {MIN_PEOPLE} people")));
    }
    if config.trials < MIN_TRIALS {
        return Err(SimError::InvalidConfig(format!("linkage needs at least {MIN_TRIALS} trials")));
    }
    if config.cohort_size == 0 {
        return Err(SimError::InvalidConfig("cohort size must be at least 1".into()));
    }

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(config.trials);
    let mut outcomes: Vec<Option<Result<TrialOutcome, SimError>>> = (0..config.trials).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<_> = outcomes.chunks_mut(config.trials.div_ceil(workers)).enumerate().collect();
        let chunk_len = config.trials.div_ceil(workers);
        for (c, chunk) in chunks {
            let params = params.clone();
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(trial(config, &params, (c * chunk_len + i) as u64));
                }
            });
        }
    });
    let trials = outcomes
        .into_iter()
        .map(|o| o.expect("every trial ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let total: usize = trials.iter().map(|t| t.correct).sum();
    Ok(LinkageReport {
        build: config.build,
        n_people: config.n_people,
        accuracy: total as f64 / (config.n_people * trials.len()) as f64,
        trials,
    })
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"linkage");
    h.update(seed.to_be_bytes());
    h.update(trial.to_be_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

fn trial(config: &LinkageConfig, params: &GroupParams, index: u64) -> Result<TrialOutcome, SimError> {
    let mut rng = trial_rng(config.seed, index);
    let mut ic = IssuerConfig::new("issuer", params.clone());
    ic.cohort_size = config.cohort_size;
    let mut issuer = IssuerState::new(ic, &mut rng)?;

    let mut creds = Vec::with_capacity(config.n_people);
    for p in 0..config.n_people {
        let (keypair, code) = create_identity(params, &mut rng);
        let placed = issuer.enroll(&EnrollmentRequest {
            root_id: format!("person-{p}"),
            public_key: keypair.public().clone(),
            recovery_hash: recovery_hash(&format!("person-{p}"), &code),
            reenroll_ticket: None,
        })?;
        creds.push(Credential {
            issuer_id: "issuer".into(),
            params: params.clone(),
            epoch: placed.epoch,
            keypair,
            cohort_index: placed.cohort_index,
            position: placed.position,
            recovery_code: code.to_vec(),
        });
    }
    let ring = issuer.current_ring_snapshot();
    let rings = BTreeMap::from([("issuer".to_owned(), ring.clone())]);

    let mut transcripts = Vec::new();
    for service_id in ["service-a", "service-b"] {
        let config_s = ServiceConfig {
            service_id: service_id.into(),
            params: params.clone(),
            accepted_issuers: vec![AcceptedIssuer {
                issuer_id: "issuer".into(),
                public_key: issuer.public_key().clone(),
            }],
            account_limit: 1,
            scopes: vec![SCOPE.into()],
        };
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let mut ledger = PseudonymLedger::new(service_id, params, seed);
        let mut order: Vec<usize> = (0..creds.len()).collect();
        order.shuffle(&mut rng);
        let mut records = Vec::with_capacity(creds.len());
        for p in order {
            let challenge = ledger.issue_challenge();
            let ctx = PresentationContext {
                issuer_id: "issuer".into(),
                service_id: service_id.into(),
                scope: SCOPE.into(),
                challenge,
            };
            let expected = Expected {
                service_id: service_id.into(),
                scope: SCOPE.into(),
                challenge,
            };
            let (pres, verified) = match config.build {
                Build::Correct => {
                    let pres = create_presentation(&creds[p], &ring, &ctx, &mut rng)?;
                    let verified = verify_presentation(&config_s, &rings, &ledger, &pres, &expected)?;
                    (pres, verified)
                }
                Build::SharedCtx | Build::TagReuse => {
                    let base = match config.build {
                        Build::SharedCtx => context_base(params, &pseudonym_context("issuer", "", SCOPE))?,
                        _ => params.generator(),
                    };
                    let pres = create_presentation_with_base(&creds[p], &ring, &base, &ctx.message(), &mut rng)?;
                    let cohort = ring.cohort(pres.cohort_index).ok_or(RelyingPartyError::InvalidProof)?;
                    let outcome = verify_with_base(params, cohort, &base, &ctx.message(), &pres.signature)?;
                    if !outcome.valid {
                        return Err(RelyingPartyError::InvalidProof.into());
                    }
                    let verified = VerifiedPseudonym {
                        issuer_id: "issuer".into(),
                        tag: outcome.tag,
                        challenge,
                    };
                    (pres, verified)
                }
            };
            register_account(&config_s, &mut ledger, &verified)?;
            records.push(Record {
                cohort_index: pres.cohort_index,
                tag: verified.tag,
                person: p,
            });
        }
        records.shuffle(&mut rng);
        transcripts.push(records);
    }

    let log = issuer.take_events();
    let [a, b]: [Vec<Record>; 2] = transcripts.try_into().expect("two services");
    let guesses = adversary(params, &log, &a, &b, &mut rng);
    let correct = guesses
        .iter()
        .enumerate()
        .filter(|(i, g)| g.is_some_and(|j| b[j].person == a[*i].person))
        .count();
    Ok(TrialOutcome {
        correct,
        cohort_sizes: ring.cohorts.iter().map(Vec::len).collect(),
    })
}

/// Pairs each record of `a` with a record of `b` using equality of tags,
/// equality of tags with enrolled keys, and shared cohort indices.
fn adversary(
    params: &GroupParams,
    issuer_log: &[IssuerEvent],
    a: &[Record],
    b: &[Record],
    rng: &mut ChaCha20Rng,
) -> Vec<Option<usize>> {
    let enrolled: BTreeSet<GroupElement> = issuer_log
        .iter()
        .filter_map(|e| match e {
            IssuerEvent::KeyAdded { key, .. } => params.element_from_hex(key).ok(),
            _ => None,
        })
        .collect();
    let mut guess = vec![None; a.len()];
    let mut taken = vec![false; b.len()];

    // A tag that equals an enrolled key names that key outright; otherwise
    // the tag itself is the only handle. Equal handles across services pair up.
    let handle = |tag: &GroupElement| (enrolled.contains(tag), tag.clone());
    let mut by_handle: BTreeMap<(bool, GroupElement), usize> = BTreeMap::new();
    for (j, r) in b.iter().enumerate() {
        by_handle.entry(handle(&r.tag)).or_insert(j);
    }
    for (i, r) in a.iter().enumerate() {
        if let Some(&j) = by_handle.get(&handle(&r.tag)) {
            if !taken[j] {
                guess[i] = Some(j);
                taken[j] = true;
            }
        }
    }

    // Uniform matching inside each cohort for everything left.
    let mut left_a: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut left_b: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in a.iter().enumerate() {
        if guess[i].is_none() {
            left_a.entry(r.cohort_index).or_default().push(i);
        }
    }
    for (j, r) in b.iter().enumerate() {
        if !taken[j] {
            left_b.entry(r.cohort_index).or_default().push(j);
        }
    }
    for (cohort, idx_a) in left_a {
        let mut pool = left_b.remove(&cohort).unwrap_or_default();
        pool.shuffle(rng);
        for (i, j) in idx_a.into_iter().zip(pool) {
            guess[i] = Some(j);
        }
    }
    guess
}
