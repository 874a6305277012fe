use std::path::PathBuf;

use aosi_core::{validate_params_relaxed, FMode, ModelParams, RawParams};
use clap::Args;
use serde::Deserialize;

use crate::{CliError, CliResult};

/// Model parameters: defaults to the reference regime (`r0 = 0.1, r1 = 0.9,
/// rho = 0.1, p = 0.5, q = 0.9, lambda1 = 1, lambda2 = 2`), overlaid by the
/// JSON file, overlaid by flags.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// JSON config with any of r0, r1, rho, p, q, lambda1, lambda2, f_mode.
    #[arg(long = "params", value_name = "FILE")]
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// kernel or paper-literal.
    #[arg(long)]
    pub f_mode: Option<FMode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamFile {
    r0: Option<f64>,
    r1: Option<f64>,
    rho: Option<f64>,
    p: Option<f64>,
    q: Option<f64>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    f_mode: Option<FMode>,
}

impl ParamArgs {
    pub fn raw(&self) -> CliResult<RawParams> {
        let file = match &self.file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<ParamFile>(&text)
                    .map_err(|e| CliError::invalid(format!("malformed config {}: {e}", path.display())))?
            }
            None => ParamFile::default(),
        };
        let d = RawParams::reference(1.0, 2.0);
        Ok(RawParams {
            r0: self.r0.or(file.r0).unwrap_or(d.r0),
            r1: self.r1.or(file.r1).unwrap_or(d.r1),
            rho: self.rho.or(file.rho).unwrap_or(d.rho),
            p: self.p.or(file.p).unwrap_or(d.p),
            q: self.q.or(file.q).unwrap_or(d.q),
            lambda1: self.lambda1.or(file.lambda1).unwrap_or(d.lambda1),
            lambda2: self.lambda2.or(file.lambda2).unwrap_or(d.lambda2),
            f_mode: self.f_mode.or(file.f_mode).unwrap_or(d.f_mode),
        })
    }

    /// Validated parameters. The energy order is not enforced so that grid
    /// cells with `lambda2 < lambda1` can be inspected one at a time.
    pub fn load(&self) -> CliResult<ModelParams> {
        Ok(validate_params_relaxed(self.raw()?)?)
    }
}
