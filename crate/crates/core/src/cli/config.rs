//! Versioned JSON configuration, one struct per subcommand.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::distributions::DistSpec;
use crate::error::{Error, Result};
use crate::records::SamplingMethod;
use crate::regression::{ConditionalQuery, IdentityForm};
use crate::smooth::GSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable consulted when neither flag nor config sets a seed.
pub const SEED_ENV: &str = "RECORDCHAR_SEED";

fn schema_v1() -> u32 {
    SCHEMA_VERSION
}

/// Parse a config document and check its schema version.
pub fn parse<T: DeserializeOwned + HasSchema>(text: &str) -> Result<T> {
    let cfg: T = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if cfg.schema() != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema version {} (expected {SCHEMA_VERSION})",
            cfg.schema()
        )));
    }
    Ok(cfg)
}

pub trait HasSchema {
    fn schema(&self) -> u32;
}

macro_rules! has_schema {
    ($($t:ty),*) => {
        $(impl HasSchema for $t {
            fn schema(&self) -> u32 {
                self.schema
            }
        })*
    };
}

has_schema!(
    SimulateConfig,
    DensityConfig,
    RegressConfig,
    ScanConfig,
    VerifyConfig,
    McCheckConfig
);

/// Seed precedence: command-line flag, config file, environment, then zero.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{SEED_ENV}={text:?} is not an unsigned 64-bit integer"
            ))
        }),
        Err(_) => Ok(0),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "schema_v1")]
    pub schema: u32,
    pub dist: DistSpec,
    pub count: usize,
    pub replications: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub method: SamplingMethod,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    #[serde(default = "schema_v1")]
    pub schema: u32,
    pub dist: DistSpec,
    pub k: u32,
    pub r: u32,
    pub u: f64,
    pub v: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    101
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressConfig {
    #[serde(default = "schema_v1")]
    pub schema: u32,
    pub dist: DistSpec,
    pub g: GSpec,
    pub k: u32,
    pub r: u32,
    pub u: f64,
    pub v: f64,
    /// Absolute record index; validated as `n > k`, otherwise unused.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default)]
    pub form: IdentityForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "schema_v1")]
    pub schema: u32,
    pub dist: DistSpec,
    pub g: GSpec,
    pub k_set: Vec<u32>,
    pub r_set: Vec<u32>,
    pub uv_grid: Vec<(f64, f64)>,
    #[serde(default)]
    pub form: IdentityForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "schema_v1")]
    pub schema: u32,
    pub functions: Vec<GSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma1: Option<Lemma1Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma2: Option<Lemma2Grid>,
    /// Values of `_{r-1}M_k(l_F, v)` to report for the nonvanishing assumption.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonvanishing: Option<NonvanishingGrid>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma1Grid {
    pub k_values: Vec<u32>,
    pub n_values: Vec<u32>,
    pub uv: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma2Grid {
    /// All `(i, j)` with `i + j <= max_order`.
    pub max_order: usize,
    pub l_f: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonvanishingGrid {
    pub k: u32,
    pub r: u32,
    pub l_f: f64,
    pub v_values: Vec<f64>,
}

/// Integrand for the Monte Carlo cross-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSpec {
    /// `psi(t) = t^p`.
    Power { p: i32 },
    /// `psi(t) = g^{(k+r-1)}(t) / (k+r-1)`, the left side of the identity.
    Characterization { g: GSpec },
}

impl Default for PsiSpec {
    fn default() -> Self {
        PsiSpec::Power { p: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCheckConfig {
    #[serde(default = "schema_v1")]
    pub schema: u32,
    pub dist: DistSpec,
    pub queries: Vec<ConditionalQuery>,
    #[serde(default)]
    pub psi: PsiSpec,
    #[serde(default = "default_mc_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_mc_samples() -> usize {
    100_000
}
