use std::path::Path;

use phc_core::sim::{linkage_experiment, run_named, LinkageConfig, LinkageReport, Metrics, SimConfig};
use serde_json::{json, Value};

use super::{Ctx, Outcome};
use crate::args::SimCmd;
use crate::error::CliError;

pub fn run(_ctx: &Ctx, cmd: SimCmd) -> Result<Outcome, CliError> {
    match cmd {
        SimCmd::Run {
            file,
            seed,
            scenario,
            csv,
            out,
        } => {
            let text = read(&file)?;
            if scenario == "linkage" {
                if csv.is_some() {
                    return Err(CliError::Usage("--csv has no series for the linkage scenario".into()));
                }
                let mut config: LinkageConfig =
                    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", file.display())))?;
                config.seed = seed;
                let report = linkage_experiment(&config)?;
                let outcome = Outcome::new(
                    &report,
                    format!(
                        "linkage accuracy {:.4} over {} trials of {} people",
                        report.accuracy,
                        report.trials.len(),
                        report.n_people
                    ),
                );
                write_opt(out.as_deref(), &outcome.json)?;
                return Ok(outcome);
            }
            let config = SimConfig::from_json(&text)?.with_seed(seed);
            let metrics = run_named(&scenario, &config)?;
            if let Some(path) = &csv {
                std::fs::write(path, metrics.series_csv()).map_err(|e| CliError::io(path, e))?;
            }
            let outcome = Outcome::new(
                &metrics,
                format!(
                    "{scenario}: {} services, attacker influence share {:.4}",
                    metrics.services.len(),
                    metrics.influence_share
                ),
            );
            write_opt(out.as_deref(), &outcome.json)?;
            Ok(outcome)
        }
        SimCmd::Report { metrics } => {
            let text = read(&metrics)?;
            if let Ok(m) = serde_json::from_str::<Metrics>(&text) {
                return Ok(report_metrics(&m));
            }
            let report: LinkageReport = serde_json::from_str(&text)
                .map_err(|e| CliError::Invalid(format!("{}: not a metrics report: {e}", metrics.display())))?;
            Ok(Outcome::new(
                &json!({
                    "build": report.build,
                    "n_people": report.n_people,
                    "trials": report.trials.len(),
                    "accuracy": report.accuracy,
                }),
                format!("linkage accuracy {:.4}", report.accuracy),
            ))
        }
    }
}

fn report_metrics(m: &Metrics) -> Outcome {
    let services: Vec<Value> = m
        .services
        .iter()
        .map(|s| {
            let bound = s.accepted_issuers as u64 * s.k as u64;
            json!({
                "service_id": s.service_id,
                "accepted_issuers": s.accepted_issuers,
                "k": s.k,
                "max_accounts_per_attacker": s.max_accounts_per_attacker,
                "issuers_times_k": bound,
                "attacker_accounts_total": s.attacker_accounts_total,
                "honest_accounts": s.honest_accounts,
                "suspended_pseudonyms": s.suspended_pseudonyms,
            })
        })
        .collect();
    let mut lines = vec![format!(
        "{} (seed {}, {:?}): influence share {:.4}, false suspensions {}",
        m.scenario, m.seed, m.regime, m.influence_share, m.false_suspensions
    )];
    for s in &m.services {
        lines.push(format!(
            "  {}: max {} accounts per attacker, {} attacker / {} honest accounts",
            s.service_id, s.max_accounts_per_attacker, s.attacker_accounts_total, s.honest_accounts
        ));
    }
    Outcome::new(
        &json!({
            "scenario": m.scenario,
            "seed": m.seed,
            "regime": m.regime,
            "influence_share": m.influence_share,
            "false_suspensions": m.false_suspensions,
            "services": services,
            "attacker": m.attacker,
            "sockpuppet": m.sockpuppet,
            "delegation": m.delegation,
        }),
        lines.join("\n"),
    )
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_opt(path: Option<&Path>, value: &Value) -> Result<(), CliError> {
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(value).expect("json serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
