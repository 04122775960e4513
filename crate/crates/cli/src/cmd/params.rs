use phc_core::GroupParams;
use rand::rngs::OsRng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use super::{Ctx, Outcome};
use crate::args::ParamsCmd;
use crate::error::CliError;

pub fn run(ctx: &Ctx, cmd: ParamsCmd) -> Result<Outcome, CliError> {
    match cmd {
        ParamsCmd::Show { name } => {
            let name = name.unwrap_or_else(|| ctx.params_name());
            let params = GroupParams::preset(&name)?;
            Ok(Outcome::new(&describe(&params), format!("{name}: {}-bit safe-prime group", params.bits())))
        }
        ParamsCmd::Generate { bits, seed } => {
            let params = match seed {
                Some(s) => GroupParams::generate(bits, &mut ChaCha20Rng::seed_from_u64(s)),
                None => GroupParams::generate(bits, &mut OsRng),
            }
            .map_err(|e| CliError::Invalid(e.to_string()))?;
            Ok(Outcome::new(
                &describe(&params),
                format!("generated {}; nodes accept presets only", params.name()),
            ))
        }
    }
}

fn describe(params: &GroupParams) -> serde_json::Value {
    json!({
        "name": params.name(),
        "bits": params.bits(),
        "p": params.p().to_str_radix(16),
        "q": params.q().to_str_radix(16),
        "g": params.element_hex(&params.generator()),
    })
}
