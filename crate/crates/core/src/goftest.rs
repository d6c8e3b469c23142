//! Exponentiality test from the median/midrange property of records.
//!
//! Under an exponential law, `E[R_n | R_{n-k}, R_{n+k}]` is the midrange of the
//! two covariates. The pivot
//!
//! ```text
//! T = (R_n - (R_{n-k} + R_{n+k}) / 2) / (R_{n+k} - R_{n-k})
//! ```
//!
//! is invariant under increasing affine maps, so one null table simulated
//! under Exp(0, 1) serves every member of the exponential family.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{ContinuousDistribution, ExponentialDist};
use crate::error::{Error, Result};
use crate::records::{sample_records, RecordSequence, SamplerConfig};

/// Smallest permitted calibration size.
pub const MIN_NULL_REPS: usize = 1000;

/// Null-table quantile levels reported in [`TestReport`].
pub const SUMMARY_LEVELS: [f64; 9] = [0.01, 0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Reject for large `|T|`.
    #[default]
    TwoSided,
    /// Reject for large `T` (median above midrange).
    Greater,
    /// Reject for small `T`.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Index of the median record; the test reads `R_{n-k}`, `R_n`, `R_{n+k}`.
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub null_reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub alternative: Alternative,
}

impl Default for TestConfig {
    /// `n = 3`, `k = 2`: records `R_1`, `R_3`, `R_5`.
    fn default() -> Self {
        Self {
            n: 3,
            k: 2,
            alpha: 0.05,
            null_reps: 2000,
            seed: 0,
            alternative: Alternative::TwoSided,
        }
    }
}

impl TestConfig {
    /// Configuration with `k = n - 1` (first, median and last of `2n - 1` records).
    pub fn with_n(n: usize) -> Self {
        Self {
            n,
            k: n.saturating_sub(1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param(format!("n must be >= 2 (got {})", self.n)));
        }
        if self.k < 1 || self.k > self.n - 1 {
            return Err(Error::param(format!(
                "k must satisfy 1 <= k <= n - 1 (n = {}, k = {})",
                self.n, self.k
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!(
                "alpha must lie in (0, 1) (got {})",
                self.alpha
            )));
        }
        if self.null_reps < MIN_NULL_REPS {
            return Err(Error::param(format!(
                "null_reps must be >= {MIN_NULL_REPS} (got {})",
                self.null_reps
            )));
        }
        Ok(())
    }

    /// Records needed per sequence.
    pub fn records_needed(&self) -> usize {
        self.n + self.k
    }
}

/// The pivot `T` for records `R_{n-k}, R_n, R_{n+k}` (1-based).
pub fn pivot_statistic(records: &RecordSequence, n: usize, k: usize) -> Result<f64> {
    if k < 1 || k >= n {
        return Err(Error::Index(format!("need 1 <= k < n (n = {n}, k = {k})")));
    }
    let get = |idx: usize| {
        records.get(idx).ok_or_else(|| {
            Error::Index(format!(
                "R_{idx} requested from a sequence of {} records",
                records.len()
            ))
        })
    };
    let lo = get(n - k)?;
    let mid = get(n)?;
    let hi = get(n + k)?;
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::Degenerate(format!(
            "R_{} = R_{} = {lo}",
            n - k,
            n + k
        )));
    }
    Ok((mid - 0.5 * (lo + hi)) / range)
}

/// Running strict maxima of `raw`, first observation included.
pub fn extract_records(raw: &[f64]) -> RecordSequence {
    let mut values = Vec::new();
    let mut times = Vec::new();
    for (idx, &x) in raw.iter().enumerate() {
        if values.last().is_none_or(|&best| x > best) {
            values.push(x);
            times.push(idx as u64 + 1);
        }
    }
    RecordSequence {
        values,
        times: Some(times),
        dist: None,
        seed: None,
        replication: None,
    }
}

/// Calibrated null distribution of `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullTable {
    /// Sorted pivot values under Exp(0, 1).
    pub values: Vec<f64>,
    /// Sorted `|T|`.
    pub abs_values: Vec<f64>,
}

impl NullTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.values.iter().map(|x| (x - m).powi(2)).sum();
        (ss / (self.len() as f64 - 1.0)).sqrt()
    }

    /// Fraction of null values `<= x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&t| t <= x) as f64 / self.len() as f64
    }

    /// Linear-interpolation quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.values.len();
        let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let w = pos - lo as f64;
        self.values[lo] * (1.0 - w) + self.values[hi] * w
    }

    /// Monte Carlo p-value `(1 + #{extreme null values}) / (N + 1)`.
    pub fn p_value(&self, statistic: f64, alternative: Alternative) -> f64 {
        let n = self.len();
        let extreme = match alternative {
            Alternative::TwoSided => {
                let a = statistic.abs();
                n - self.abs_values.partition_point(|&t| t < a)
            }
            Alternative::Greater => n - self.values.partition_point(|&t| t < statistic),
            Alternative::Less => self.values.partition_point(|&t| t <= statistic),
        };
        (1 + extreme) as f64 / (n + 1) as f64
    }
}

/// Simulate the null table under Exp(0, 1).
pub fn calibrate_null(cfg: &TestConfig) -> Result<NullTable> {
    cfg.validate()?;
    let sampler = SamplerConfig::new(cfg.records_needed(), cfg.null_reps, cfg.seed);
    let seqs = sample_records(&ExponentialDist::standard(), &sampler)?;
    let mut values = seqs
        .par_iter()
        .map(|s| pivot_statistic(s, cfg.n, cfg.k))
        .collect::<Result<Vec<_>>>()?;
    values.sort_by(f64::total_cmp);
    let mut abs_values: Vec<f64> = values.iter().map(|t| t.abs()).collect();
    abs_values.sort_by(f64::total_cmp);
    Ok(NullTable { values, abs_values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub level: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub reps: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub quantiles: Vec<QuantilePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub records_available: usize,
    pub null_quantiles: NullSummary,
    pub config: TestConfig,
}

/// Calibrate and test in one step.
pub fn run_test(records: &RecordSequence, cfg: &TestConfig) -> Result<TestReport> {
    let table = calibrate_null(cfg)?;
    run_test_with_table(records, cfg, &table)
}

/// Test against an existing null table built for the same `(n, k)`.
pub fn run_test_with_table(
    records: &RecordSequence,
    cfg: &TestConfig,
    table: &NullTable,
) -> Result<TestReport> {
    cfg.validate()?;
    if table.is_empty() {
        return Err(Error::param("empty null table"));
    }
    let statistic = pivot_statistic(records, cfg.n, cfg.k)?;
    let p_value = table.p_value(statistic, cfg.alternative);
    Ok(TestReport {
        statistic,
        p_value,
        reject: p_value <= cfg.alpha,
        records_available: records.len(),
        null_quantiles: summarize(table),
        config: *cfg,
    })
}

fn summarize(table: &NullTable) -> NullSummary {
    NullSummary {
        reps: table.len(),
        mean: table.mean(),
        std_dev: table.std_dev(),
        quantiles: SUMMARY_LEVELS
            .iter()
            .map(|&level| QuantilePoint {
                level,
                value: table.quantile(level),
            })
            .collect(),
    }
}

/// Empirical rejection rate over `sequences` record sequences simulated from `dist`.
pub fn rejection_rate<D>(
    dist: &D,
    cfg: &TestConfig,
    table: &NullTable,
    sequences: usize,
    seed: u64,
) -> Result<f64>
where
    D: ContinuousDistribution + ?Sized,
{
    cfg.validate()?;
    let sampler = SamplerConfig::new(cfg.records_needed(), sequences, seed);
    let seqs = sample_records(dist, &sampler)?;
    let rejections = seqs
        .par_iter()
        .map(|s| {
            let t = pivot_statistic(s, cfg.n, cfg.k)?;
            Ok(table.p_value(t, cfg.alternative) <= cfg.alpha)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&r| r)
        .count();
    Ok(rejections as f64 / sequences as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> RecordSequence {
        RecordSequence::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn pivot_examples() {
        assert_eq!(pivot_statistic(&seq(&[1.0, 2.0, 3.0]), 2, 1).unwrap(), 0.0);
        assert_eq!(
            pivot_statistic(&seq(&[0.0, 1.0, 4.0]), 2, 1).unwrap(),
            -0.25
        );
        assert!(matches!(
            pivot_statistic(&seq(&[0.0, 1.0, 4.0]), 3, 2),
            Err(Error::Index(_))
        ));
        assert!(matches!(
            pivot_statistic(&seq(&[0.0, 1.0, 4.0]), 2, 2),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn extract_examples() {
        let r = extract_records(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]);
        assert_eq!(r.values, vec![3.0, 4.0, 5.0, 9.0]);
        assert_eq!(r.times, Some(vec![1, 3, 5, 6]));
        let inc = [0.5, 1.0, 2.0, 7.0];
        assert_eq!(extract_records(&inc).values, inc.to_vec());
        assert_eq!(extract_records(&[5.0, 5.0, 5.0]).values, vec![5.0]);
        assert!(extract_records(&[]).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(TestConfig::default().validate().is_ok());
        assert!(TestConfig {
            n: 1,
            k: 0,
            ..TestConfig::default()
        }
        .validate()
        .is_err());
        assert!(TestConfig {
            k: 3,
            ..TestConfig::default()
        }
        .validate()
        .is_err());
        assert!(TestConfig {
            alpha: 1.0,
            ..TestConfig::default()
        }
        .validate()
        .is_err());
        assert!(TestConfig {
            null_reps: 999,
            ..TestConfig::default()
        }
        .validate()
        .is_err());
        assert_eq!(TestConfig::with_n(4).k, 3);
    }

    #[test]
    fn centered_statistic_has_unit_p_value() {
        let cfg = TestConfig {
            null_reps: 1000,
            ..TestConfig::default()
        };
        let report = run_test(&seq(&[0.0, 0.5, 1.0, 1.5, 2.0]), &cfg).unwrap();
        assert_eq!(report.statistic, 0.0);
        assert_eq!(report.p_value, 1.0);
        assert!(!report.reject);
    }

    #[test]
    fn p_value_bounds_and_ordering() {
        let cfg = TestConfig {
            null_reps: 1000,
            ..TestConfig::default()
        };
        let table = calibrate_null(&cfg).unwrap();
        let n = table.len() as f64;
        assert_eq!(table.p_value(0.6, Alternative::TwoSided), 1.0 / (n + 1.0));
        assert_eq!(table.p_value(-0.6, Alternative::TwoSided), 1.0 / (n + 1.0));
        assert_eq!(table.p_value(0.6, Alternative::Greater), 1.0 / (n + 1.0));
        assert_eq!(table.p_value(-0.6, Alternative::Less), 1.0 / (n + 1.0));
        assert_eq!(table.p_value(-0.6, Alternative::Greater), 1.0);
        let mut prev = 1.0;
        for step in 0..50 {
            let p = table.p_value(step as f64 * 0.01, Alternative::TwoSided);
            assert!(p <= prev);
            prev = p;
        }
    }
}
