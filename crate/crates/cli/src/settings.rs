//! Configuration file and resolution order: command-line flags, then the
//! JSON file given by `--config`, then built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use plaquette::protocols::HamiltonianMode;
use serde::{Deserialize, Serialize};

pub const OUT_DIR_ENV: &str = "PLAQUETTE_OUT_DIR";

/// A number or an expression such as `"pi/P"` or `"2.2tm"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Expr(String),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` keeps a trailing `.0` and round-trips exactly.
            Scalar::Num(x) => write!(f, "{x:?}"),
            Scalar::Expr(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// `|M, P, 0, 0>`.
    Fock,
    /// `(|M,P,0,0> + e^{i phi} |M,0,0,P>) / sqrt(2)`.
    Noon,
}

/// Every key a config file may set. Unknown keys are rejected so that a
/// misspelt parameter does not silently fall back to its default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(alias = "M")]
    pub m: Option<usize>,
    #[serde(alias = "P")]
    pub p: Option<usize>,
    #[serde(alias = "N")]
    pub n: Option<usize>,
    pub u_over_j: Option<f64>,
    pub u0_over_j: Option<f64>,
    pub mode: Option<HamiltonianMode>,
    pub state: Option<InitialState>,
    pub phi: Option<Scalar>,
    pub varphi: Option<Scalar>,
    pub times: Option<Scalar>,
    pub time: Option<Scalar>,
    pub varphi_grid: Option<String>,
    pub grid: Option<String>,
    pub gap_factor: Option<f64>,
    pub j_zero: Option<bool>,
    pub subtract_c: Option<bool>,
    pub allow_even_n: Option<bool>,
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub format: Option<Format>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// `--out-dir`, then the config file, then `$PLAQUETTE_OUT_DIR`, then the
/// working directory.
pub fn out_dir(flag: Option<PathBuf>, file: Option<PathBuf>) -> PathBuf {
    flag.or(file)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys() {
        let f: FileConfig = serde_json::from_str(
            r#"{"M": 7, "P": 2, "mode": "second-order", "phi": "pi", "varphi": 0.5}"#,
        )
        .unwrap();
        assert_eq!((f.m, f.p), (Some(7), Some(2)));
        assert_eq!(f.mode, Some(HamiltonianMode::SecondOrder));
        assert_eq!(f.phi, Some(Scalar::Expr("pi".into())));
        assert_eq!(f.varphi.unwrap().to_string(), "0.5");
        assert!(serde_json::from_str::<FileConfig>(r#"{"u_over_J": 3}"#).is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None::<i32>, None, 3), 3);
    }
}
