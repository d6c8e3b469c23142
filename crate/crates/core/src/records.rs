//! Upper record values: exact simulation and conditional sampling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{ContinuousDistribution, DistSpec};
use crate::error::{Error, Result};
use crate::rng;

/// Draw budget per sequence for the naive scanning sampler.
pub const NAIVE_DRAW_BUDGET: u64 = 100_000_000;

/// An increasing run of upper records `R_1 < R_2 < ... < R_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSequence {
    pub values: Vec<f64>,
    /// 1-based record times `T_n`, when the underlying stream was observed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replication: Option<u64>,
}

impl RecordSequence {
    /// Wrap values that are already records; rejects non-increasing input.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("record values must be finite"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("record values must be strictly increasing"));
        }
        Ok(Self {
            values,
            times: None,
            dist: None,
            seed: None,
            replication: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `R_n`, 1-based.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// `R_n = H^{-1}(Gamma_n)`, `Gamma_n` a running sum of unit exponentials.
    #[default]
    HazardTransform,
    /// Scan an iid stream and keep strict running maxima.
    NaiveScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub count: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub method: SamplingMethod,
}

impl SamplerConfig {
    pub fn new(count: usize, replications: usize, seed: u64) -> Self {
        Self {
            count,
            replications,
            seed,
            method: SamplingMethod::HazardTransform,
        }
    }

    pub fn with_method(mut self, method: SamplingMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::param("count must be >= 1"));
        }
        if self.replications < 1 {
            return Err(Error::param("replications must be >= 1"));
        }
        Ok(())
    }
}

/// Simulate `cfg.replications` independent record sequences of length `cfg.count`.
///
/// Replication `i` uses random stream `i` of `cfg.seed`, and the output is in
/// replication order.
pub fn sample_records<D>(dist: &D, cfg: &SamplerConfig) -> Result<Vec<RecordSequence>>
where
    D: ContinuousDistribution + ?Sized,
{
    cfg.validate()?;
    (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(cfg.seed, rep);
            let (values, times) = match cfg.method {
                SamplingMethod::HazardTransform => {
                    (hazard_transform(dist, cfg.count, &mut rng)?, None)
                }
                SamplingMethod::NaiveScan => {
                    let (v, t) = naive_scan(dist, cfg.count, &mut rng)?;
                    (v, Some(t))
                }
            };
            Ok(RecordSequence {
                values,
                times,
                dist: dist.spec(),
                seed: Some(cfg.seed),
                replication: Some(rep),
            })
        })
        .collect()
}

fn hazard_transform<D, R>(dist: &D, count: usize, rng: &mut R) -> Result<Vec<f64>>
where
    D: ContinuousDistribution + ?Sized,
    R: rand::Rng + ?Sized,
{
    let mut level = 0.0;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        level += rng::std_exp(rng);
        values.push(dist.inv_cum_hazard(level)?);
    }
    Ok(values)
}

fn naive_scan<D, R>(dist: &D, count: usize, rng: &mut R) -> Result<(Vec<f64>, Vec<u64>)>
where
    D: ContinuousDistribution + ?Sized,
    R: rand::Rng + ?Sized,
{
    let mut values = Vec::with_capacity(count);
    let mut times = Vec::with_capacity(count);
    let mut best = f64::NEG_INFINITY;
    let mut draws = 0u64;
    while values.len() < count {
        if draws >= NAIVE_DRAW_BUDGET {
            return Err(Error::Budget(format!(
                "{NAIVE_DRAW_BUDGET} draws produced only {} of {count} records",
                values.len()
            )));
        }
        draws += 1;
        let x = dist.inv_cum_hazard(rng::std_exp(rng))?;
        if x > best {
            best = x;
            values.push(x);
            times.push(draws);
        }
    }
    Ok((values, times))
}

/// Draws of `R_n` given `R_{n-k} = u` and `R_{n+r} = v`.
///
/// `t = H^{-1}(H(u) + B (H(v) - H(u)))` with `B ~ Beta(k, r)`.
pub fn sample_conditional<D>(
    dist: &D,
    k: u32,
    r: u32,
    u: f64,
    v: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    D: ContinuousDistribution + ?Sized,
{
    if k < 1 || r < 1 {
        return Err(Error::param(format!(
            "k and r must be >= 1 (k = {k}, r = {r})"
        )));
    }
    let lower = dist.lower_endpoint();
    if u.is_nan() || u < lower {
        return Err(Error::domain(format!("u = {u} lies below l_F = {lower}")));
    }
    if !(v > u) {
        return Err(Error::domain(format!("need v > u (u = {u}, v = {v})")));
    }
    let hu = dist.cum_hazard(u)?;
    let hv = dist.cum_hazard(v)?;
    let span = hv - hu;
    if !(span > 0.0) {
        return Err(Error::Degenerate(format!(
            "H(v) - H(u) = {span} on ({u}, {v})"
        )));
    }
    let mut rng = rng::stream(seed, 0);
    let mut out = Vec::with_capacity(n_samples);
    let mut rejected = 0usize;
    while out.len() < n_samples {
        let b = rng::beta_int(&mut rng, k, r);
        let t = dist.inv_cum_hazard(hu + b * span)?;
        if t > u && t < v {
            out.push(t);
        } else {
            // rounding landed on an endpoint
            rejected += 1;
            if rejected > 1000 + n_samples {
                return Err(Error::Degenerate(format!(
                    "interval ({u}, {v}) is too narrow to resolve in floating point"
                )));
            }
        }
    }
    Ok(out)
}
