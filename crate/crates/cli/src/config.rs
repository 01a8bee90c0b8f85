use std::fs;
use std::path::Path;

use sdds_core::SddsParams;
use serde::Deserialize;

use crate::args::ParamArgs;
use crate::CliError;

/// Any subset of the parameters, as read from a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    lambda_u: Option<f64>,
    lambda_d: Option<f64>,
    lambda_f: Option<f64>,
    p_loss: Option<f64>,
    n_receivers: Option<u32>,
    transfer_delay: Option<f64>,
    refresh_period: Option<f64>,
    receiver_timeout: Option<f64>,
    reliable: Option<bool>,
}

fn read_file(path: &Path) -> Result<ParamsFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {}", path.display(), e.message())))
}

/// Preset, then config file, then individual flags.
pub fn resolve(args: &ParamArgs) -> Result<SddsParams, CliError> {
    let file = args.config.as_deref().map(read_file).transpose()?;
    let base = match args.case {
        Some(case) => SddsParams::preset(case),
        None => None,
    };
    let file = file.unwrap_or_default();

    let missing = |name: &str| CliError::Usage(format!("parameter `{name}` not set (use --case, --config or --{})", name.replace('_', "-")));
    macro_rules! pick {
        ($field:ident) => {
            args.$field
                .or(file.$field)
                .or(base.map(|b| b.$field))
                .ok_or_else(|| missing(stringify!($field)))?
        };
    }
    let params = SddsParams {
        lambda_u: pick!(lambda_u),
        lambda_d: pick!(lambda_d),
        lambda_f: pick!(lambda_f),
        p_loss: pick!(p_loss),
        n_receivers: pick!(n_receivers),
        transfer_delay: pick!(transfer_delay),
        refresh_period: pick!(refresh_period),
        receiver_timeout: args
            .receiver_timeout
            .or(file.receiver_timeout)
            .or(base.and_then(|b| b.receiver_timeout)),
        reliable: args.reliable || file.reliable.unwrap_or(false),
    };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(params)
}
