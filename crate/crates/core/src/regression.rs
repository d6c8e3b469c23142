//! Both sides of the regression identity
//!
//! ```text
//! E[g^{(k+r-1)}(R_n) / (k+r-1) | R_{n-k} = u, R_{n+r} = v] = C(k+r-2, k-1) _{r-1}M_{k-1}(u, v)
//! ```
//!
//! The left side is a quadrature against the conditional density of `R_n`
//! given the two covariate records, the right side comes from
//! [`divided_differences`](crate::divided_differences).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::binomial_f64;
use crate::distributions::ContinuousDistribution;
use crate::divided_differences::rhs_operator_estimate;
use crate::error::{Error, Result};
use crate::quadrature::{self, Estimate};
use crate::records::sample_conditional;
use crate::smooth::{check_interval, check_order, SmoothFunction};

/// Largest `k + r` served by the Gauss-Jacobi path.
pub const JACOBI_MAX_SHAPE: u32 = 12;

/// Acceptance threshold for the conditional expectation error estimate.
pub const EXPECTATION_REL_TOL: f64 = 1e-10;

/// Covariate indices and values: `R_{n-k} = u`, `R_{n+r} = v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalQuery {
    pub k: u32,
    pub r: u32,
    pub u: f64,
    pub v: f64,
}

impl ConditionalQuery {
    pub fn new(k: u32, r: u32, u: f64, v: f64) -> Self {
        Self { k, r, u, v }
    }

    pub fn validate<D: ContinuousDistribution + ?Sized>(&self, dist: &D) -> Result<()> {
        if self.k < 1 || self.r < 1 {
            return Err(Error::param(format!(
                "k and r must be >= 1 (k = {}, r = {})",
                self.k, self.r
            )));
        }
        let lower = dist.lower_endpoint();
        if self.u.is_nan() || self.u < lower {
            return Err(Error::domain(format!(
                "u = {} lies below l_F = {lower}",
                self.u
            )));
        }
        if !(self.v > self.u) || !self.v.is_finite() {
            return Err(Error::domain(format!(
                "need v > u (u = {}, v = {})",
                self.u, self.v
            )));
        }
        Ok(())
    }

    /// `(k+r-1)! / ((k-1)! (r-1)!)`, the Beta(k, r) normalizer.
    fn beta_coefficient(&self) -> Result<f64> {
        let (k, r) = (u64::from(self.k), u64::from(self.r));
        Ok((k + r - 1) as f64 * binomial_f64(k + r - 2, k - 1)?)
    }
}

/// `f_{k,r}(t | u, v)`, the density of `R_n` given `R_{n-k} = u`, `R_{n+r} = v`.
pub fn conditional_density<D>(dist: &D, k: u32, r: u32, u: f64, v: f64, t: f64) -> Result<f64>
where
    D: ContinuousDistribution + ?Sized,
{
    let q = ConditionalQuery::new(k, r, u, v);
    q.validate(dist)?;
    if !(t > u && t < v) {
        return Err(Error::domain(format!(
            "t = {t} must lie strictly inside ({u}, {v})"
        )));
    }
    let hu = dist.cum_hazard(u)?;
    let hv = dist.cum_hazard(v)?;
    let ht = dist.cum_hazard(t)?;
    let span = hv - hu;
    let below = (ht - hu) / span;
    let above = (hv - ht) / span;
    let dens = q.beta_coefficient()?
        * below.powi(k as i32 - 1)
        * above.powi(r as i32 - 1)
        * dist.hazard(t)?
        / span;
    Ok(dens.max(0.0))
}

/// `E[psi(R_n) | R_{n-k} = u, R_{n+r} = v]` with a quadrature error estimate.
///
/// Integrates in `s = (H(t) - H(u)) / (H(v) - H(u))`, where the density is
/// exactly Beta(k, r). Small shapes use Gauss-Jacobi rules matched to that
/// weight (32 against 64 nodes); anything that fails that comparison, and
/// `k + r > 12`, goes to adaptive Gauss-Legendre.
pub fn conditional_expectation<D, F>(dist: &D, query: &ConditionalQuery, psi: F) -> Result<Estimate>
where
    D: ContinuousDistribution + ?Sized,
    F: Fn(f64) -> f64,
{
    query.validate(dist)?;
    let ConditionalQuery { k, r, u, v } = *query;
    let hu = dist.cum_hazard(u)?;
    let hv = dist.cum_hazard(v)?;
    let span = hv - hu;
    if !(span > 0.0) {
        return Err(Error::Degenerate(format!(
            "H(v) - H(u) = {span} on ({u}, {v})"
        )));
    }
    let integrand = |s: f64| -> f64 {
        match dist.inv_cum_hazard(hu + s * span) {
            Ok(t) => psi(t.clamp(u, v)),
            Err(_) => f64::NAN,
        }
    };

    if k + r <= JACOBI_MAX_SHAPE {
        let coarse =
            quadrature::beta_expectation(&*quadrature::beta_rule_cached(k, r, 32)?, integrand);
        let fine =
            quadrature::beta_expectation(&*quadrature::beta_rule_cached(k, r, 64)?, integrand);
        let err = (fine - coarse).abs();
        if fine.is_finite() && err <= EXPECTATION_REL_TOL * fine.abs().max(1.0) {
            return Ok(Estimate {
                value: fine,
                error: err,
            });
        }
    }

    let coef = query.beta_coefficient()?;
    let (a, b) = (k as i32 - 1, r as i32 - 1);
    let est = quadrature::integrate(
        |s: f64| coef * s.powi(a) * (1.0 - s).powi(b) * integrand(s),
        0.0,
        1.0,
        quadrature::DEFAULT_REL_TOL,
    )?;
    if !est.value.is_finite() {
        return Err(Error::Quadrature(
            "non-finite conditional expectation".into(),
        ));
    }
    Ok(est)
}

/// Which scaling of the identity to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IdentityForm {
    /// `E[g^{(k+r-1)}(R_n) / (k+r-1)]` against `C(k+r-2, k-1) _{r-1}M_{k-1}`.
    #[default]
    Normalized,
    /// Both sides multiplied by `k + r - 1`: `E[g^{(k+r-1)}(R_n)]`. With
    /// `g = PowerG(k, r)` this is `E[R_n]` against `(r u + k v) / (k + r)`.
    Moment,
}

/// One instance of the identity: covariates, `g`, and the distribution.
#[derive(Debug, Clone, Copy)]
pub struct RegressionQuery<'a> {
    pub k: u32,
    pub r: u32,
    pub u: f64,
    pub v: f64,
    pub g: &'a dyn SmoothFunction,
    pub dist: &'a dyn ContinuousDistribution,
}

impl<'a> RegressionQuery<'a> {
    pub fn new(
        dist: &'a dyn ContinuousDistribution,
        g: &'a dyn SmoothFunction,
        k: u32,
        r: u32,
        u: f64,
        v: f64,
    ) -> Self {
        Self {
            k,
            r,
            u,
            v,
            g,
            dist,
        }
    }

    pub fn conditional(&self) -> ConditionalQuery {
        ConditionalQuery::new(self.k, self.r, self.u, self.v)
    }

    pub fn validate(&self) -> Result<()> {
        self.conditional().validate(self.dist)?;
        check_order(self.g, (self.k + self.r - 1) as usize)?;
        check_interval(self.g, self.u, self.v)
    }

    /// The left-side integrand `g^{(k+r-1)}(t) / (k+r-1)`.
    pub fn integrand(&self, t: f64) -> f64 {
        let m = self.k + self.r - 1;
        self.g.derivative(m as usize, t) / f64::from(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub k: u32,
    pub r: u32,
    pub u: f64,
    pub v: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub residual: f64,
    pub quad_err: f64,
}

/// Evaluate both sides of the identity for `q`.
pub fn characterization_residual(q: &RegressionQuery<'_>) -> Result<ResidualReport> {
    characterization_residual_with(q, IdentityForm::Normalized)
}

pub fn characterization_residual_with(
    q: &RegressionQuery<'_>,
    form: IdentityForm,
) -> Result<ResidualReport> {
    q.validate()?;
    let lhs = conditional_expectation(q.dist, &q.conditional(), |t| q.integrand(t))?;
    let rhs = rhs_operator_estimate(q.g, q.k, q.r, q.u, q.v)?;
    let scale = match form {
        IdentityForm::Normalized => 1.0,
        IdentityForm::Moment => f64::from(q.k + q.r - 1),
    };
    let (lhs_v, rhs_v) = (scale * lhs.value, scale * rhs.value);
    Ok(ResidualReport {
        k: q.k,
        r: q.r,
        u: q.u,
        v: q.v,
        lhs: lhs_v,
        rhs: rhs_v,
        residual: lhs_v - rhs_v,
        quad_err: scale * (lhs.error + rhs.error),
    })
}

/// One grid cell of a residual scan. Failures stay in the cell.
#[derive(Debug)]
pub struct ScanCell {
    pub k: u32,
    pub r: u32,
    pub u: f64,
    pub v: f64,
    pub outcome: Result<ResidualReport>,
}

/// Residuals over `k_set x r_set x uv_grid`, ordered lexicographically by `(k, r, u, v)`.
///
/// `make_g(k, r)` supplies the function for each cell, so families such as
/// `PowerG(k, r)` can follow the grid.
pub fn residual_scan<D, M>(
    dist: &D,
    make_g: M,
    k_set: &[u32],
    r_set: &[u32],
    uv_grid: &[(f64, f64)],
    form: IdentityForm,
) -> Vec<ScanCell>
where
    D: ContinuousDistribution,
    M: Fn(u32, u32) -> Result<Box<dyn SmoothFunction>> + Sync,
{
    let mut ks = k_set.to_vec();
    let mut rs = r_set.to_vec();
    let mut uv = uv_grid.to_vec();
    ks.sort_unstable();
    rs.sort_unstable();
    uv.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let cells: Vec<(u32, u32, f64, f64)> = ks
        .iter()
        .flat_map(|&k| rs.iter().map(move |&r| (k, r)))
        .flat_map(|(k, r)| uv.iter().map(move |&(u, v)| (k, r, u, v)))
        .collect();

    cells
        .into_par_iter()
        .map(|(k, r, u, v)| {
            let outcome = make_g(k, r).and_then(|g| {
                let q = RegressionQuery::new(dist, g.as_ref(), k, r, u, v);
                characterization_residual_with(&q, form)
            });
            ScanCell {
                k,
                r,
                u,
                v,
                outcome,
            }
        })
        .collect()
}

/// Monte Carlo estimate of a conditional expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mc_estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Monte Carlo counterpart of [`conditional_expectation`], from exact
/// conditional draws.
pub fn mc_cross_check<D, F>(
    dist: &D,
    query: &ConditionalQuery,
    psi: F,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate>
where
    D: ContinuousDistribution + ?Sized,
    F: Fn(f64) -> f64,
{
    if n_samples < 2 {
        return Err(Error::param("Monte Carlo check needs at least 2 samples"));
    }
    query.validate(dist)?;
    let draws = sample_conditional(dist, query.k, query.r, query.u, query.v, n_samples, seed)?;
    let n = draws.len() as f64;
    // Welford
    let (mut mean, mut m2) = (0.0, 0.0);
    for (idx, t) in draws.iter().enumerate() {
        let y = psi(*t);
        let delta = y - mean;
        mean += delta / (idx + 1) as f64;
        m2 += delta * (y - mean);
    }
    let var = m2 / (n - 1.0);
    Ok(McEstimate {
        mc_estimate: mean,
        std_error: (var / n).sqrt(),
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ExponentialDist, ParetoDist, WeibullDist};
    use crate::smooth::{PowerG, ReciprocalG};
    use approx::assert_relative_eq;

    #[test]
    fn density_examples() {
        let e = ExponentialDist::standard();
        assert_relative_eq!(
            conditional_density(&e, 1, 1, 1.0, 3.0, 2.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            conditional_density(&e, 2, 1, 0.0, 2.0, 1.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(matches!(
            conditional_density(&e, 1, 1, 1.0, 3.0, 3.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            conditional_density(&e, 1, 1, 1.0, 3.0, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn density_vanishes_at_matching_ends() {
        let w = WeibullDist::new(2.0, 1.0).unwrap();
        let (u, v) = (0.5, 2.0);
        let near_u = conditional_density(&w, 2, 1, u, v, u + 1e-9).unwrap();
        let near_v = conditional_density(&w, 1, 2, u, v, v - 1e-9).unwrap();
        assert!(near_u < 1e-7 && near_v < 1e-7);
        let open_u = conditional_density(&w, 1, 2, u, v, u + 1e-9).unwrap();
        assert!(open_u > 0.1);
    }

    #[test]
    fn weighted_mean_and_reciprocal_point_values() {
        let e = ExponentialDist::standard();
        let m = conditional_expectation(&e, &ConditionalQuery::new(2, 2, 0.0, 4.0), |t| t).unwrap();
        assert_relative_eq!(m.value, 2.0, epsilon = 1e-12);
        let m = conditional_expectation(&e, &ConditionalQuery::new(2, 3, 1.0, 6.0), |t| t).unwrap();
        assert_relative_eq!(m.value, 3.0, epsilon = 1e-12);
        let m = conditional_expectation(&e, &ConditionalQuery::new(2, 2, 1.0, 2.0), |t| t.powi(-4))
            .unwrap();
        assert_relative_eq!(m.value, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn large_shapes_use_adaptive_path() {
        let e = ExponentialDist::standard();
        let m = conditional_expectation(&e, &ConditionalQuery::new(7, 8, 1.0, 4.0), |t| t).unwrap();
        assert_relative_eq!(m.value, (8.0 * 1.0 + 7.0 * 4.0) / 15.0, epsilon = 1e-11);
    }

    #[test]
    fn residual_examples() {
        let e = ExponentialDist::standard();
        let g = PowerG::new(2, 2);
        let rep = characterization_residual(&RegressionQuery::new(&e, &g, 2, 2, 0.0, 4.0)).unwrap();
        assert_relative_eq!(rep.lhs, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(rep.rhs, 2.0 / 3.0, epsilon = 1e-12);
        assert!(rep.residual.abs() < 1e-8);
        assert_eq!(rep.residual, rep.lhs - rep.rhs);

        let e = ExponentialDist::new(2.0, 0.5).unwrap();
        let g = PowerG::new(3, 2);
        let rep = characterization_residual(&RegressionQuery::new(&e, &g, 3, 2, 2.5, 7.0)).unwrap();
        assert!(rep.residual.abs() < 1e-8, "{rep:?}");

        let e = ExponentialDist::standard();
        let g = ReciprocalG::new(2, 2);
        let rep = characterization_residual(&RegressionQuery::new(&e, &g, 2, 2, 1.0, 2.0)).unwrap();
        assert!(rep.residual.abs() < 1e-10, "{rep:?}");
    }

    #[test]
    fn moment_form_scales_both_sides() {
        let e = ExponentialDist::standard();
        let g = PowerG::new(2, 3);
        let q = RegressionQuery::new(&e, &g, 2, 3, 1.0, 6.0);
        let rep = characterization_residual_with(&q, IdentityForm::Moment).unwrap();
        assert_relative_eq!(rep.lhs, 3.0, epsilon = 1e-12);
        assert_relative_eq!(rep.rhs, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn query_validation() {
        let e = ExponentialDist::new(1.0, 1.0).unwrap();
        let g = PowerG::new(2, 2);
        assert!(characterization_residual(&RegressionQuery::new(&e, &g, 2, 2, 0.5, 2.0)).is_err());
        assert!(characterization_residual(&RegressionQuery::new(&e, &g, 2, 2, 2.0, 2.0)).is_err());
        assert!(characterization_residual(&RegressionQuery::new(&e, &g, 0, 2, 1.0, 2.0)).is_err());
        let p = ParetoDist::new(1.0, 2.0).unwrap();
        let rg = ReciprocalG::new(2, 2);
        assert!(characterization_residual(&RegressionQuery::new(&p, &rg, 2, 2, 1.0, 2.0)).is_ok());
    }

    #[test]
    fn empty_scan() {
        let e = ExponentialDist::standard();
        let cells = residual_scan(
            &e,
            |k, r| Ok(Box::new(PowerG::new(k, r)) as Box<dyn SmoothFunction>),
            &[],
            &[2, 3],
            &[(0.0, 1.0)],
            IdentityForm::Normalized,
        );
        assert!(cells.is_empty());
    }

    #[test]
    fn scan_keeps_going_past_bad_cells() {
        let e = ExponentialDist::standard();
        let cells = residual_scan(
            &e,
            |k, r| Ok(Box::new(PowerG::new(k, r)) as Box<dyn SmoothFunction>),
            &[3, 2],
            &[2],
            &[(1.0, 3.0), (-1.0, 1.0), (0.1, 1.0)],
            IdentityForm::Normalized,
        );
        assert_eq!(cells.len(), 6);
        let keys: Vec<(u32, f64)> = cells.iter().map(|c| (c.k, c.u)).collect();
        assert_eq!(
            keys,
            vec![(2, -1.0), (2, 0.1), (2, 1.0), (3, -1.0), (3, 0.1), (3, 1.0)]
        );
        assert!(cells[0].outcome.is_err());
        assert!(cells[1].outcome.as_ref().unwrap().residual.abs() < 1e-8);
    }

    #[test]
    fn mc_matches_uniform_case() {
        let e = ExponentialDist::standard();
        let est = mc_cross_check(
            &e,
            &ConditionalQuery::new(1, 1, 1.0, 3.0),
            |t| t,
            100_000,
            4,
        )
        .unwrap();
        assert!((est.mc_estimate - 2.0).abs() < 4.0 * est.std_error);
        assert_relative_eq!(
            est.std_error,
            (4.0f64 / 12.0 / 1e5).sqrt(),
            max_relative = 0.02
        );
    }
}
