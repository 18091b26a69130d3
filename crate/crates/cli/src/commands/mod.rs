use anyhow::{Context as _, Result};
use plaquette::protocols::ProtocolConfig;

use crate::args::ModelArgs;
use crate::expr::{self, Symbols};
use crate::output::Destination;
use crate::settings::{pick, FileConfig, Format, Scalar};

pub mod bands;
pub mod evolve;
pub mod protocol;
pub mod verify;

/// Settings shared by every subcommand, already resolved.
pub struct Context {
    pub file: FileConfig,
    pub dest: Destination,
    pub format: Format,
    pub seed: u64,
}

pub fn protocol_config(model: &ModelArgs, file: &FileConfig) -> ProtocolConfig {
    let d = ProtocolConfig::default();
    ProtocolConfig {
        m: pick(model.m, file.m, d.m),
        p: pick(model.p, file.p, d.p),
        u_over_j: pick(model.u_over_j, file.u_over_j, d.u_over_j),
        mode: pick(model.mode, file.mode, d.mode),
        ..d
    }
}

pub fn symbols(cfg: &ProtocolConfig, t_m: Option<f64>) -> Symbols {
    Symbols {
        tm: t_m,
        m: Some(cfg.m as f64),
        p: Some(cfg.p as f64),
        n: Some(cfg.total() as f64),
    }
}

/// Flag, then file, then `default`, evaluated as an expression.
pub fn scalar(
    name: &str,
    flag: Option<String>,
    file: Option<Scalar>,
    default: &str,
    sym: &Symbols,
) -> Result<f64> {
    let src = flag
        .or(file.map(|s| s.to_string()))
        .unwrap_or_else(|| default.into());
    expr::eval(&src, sym).with_context(|| format!("--{name} '{src}'"))
}
