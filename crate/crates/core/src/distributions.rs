//! Continuous distributions described through their hazard functions.
//!
//! Every distribution exposes `F`, `f`, the cumulative hazard
//! `H(x) = -ln(1 - F(x))`, the hazard rate `h = H'`, the inverse `H^{-1}` and the
//! lower support endpoint `l_F`. Built-in families override the hazard methods
//! with closed forms; anything else falls back to the generic routes below.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `cdf` values at or above `1 - TAIL_EPS` count as the upper tail boundary.
pub const TAIL_EPS: f64 = 1e-15;

const INVERSION_REL_TOL: f64 = 1e-12;
const INVERSION_MAX_ITER: usize = 200;

pub trait ContinuousDistribution: fmt::Debug + Send + Sync {
    /// Left endpoint of the support, `l_F`.
    fn lower_endpoint(&self) -> f64;

    fn cdf(&self, x: f64) -> f64;

    fn pdf(&self, x: f64) -> f64;

    /// `H(x) = -ln(1 - F(x))`.
    fn cum_hazard(&self, x: f64) -> Result<f64> {
        check_support(self.lower_endpoint(), x)?;
        let p = self.cdf(x);
        if p >= 1.0 - TAIL_EPS {
            return Err(Error::Overflow(format!(
                "cdf({x}) = {p} is at the upper tail boundary"
            )));
        }
        Ok(-(-p).ln_1p())
    }

    /// `h(x) = f(x) / (1 - F(x))`.
    fn hazard(&self, x: f64) -> Result<f64> {
        check_support(self.lower_endpoint(), x)?;
        let p = self.cdf(x);
        if p >= 1.0 - TAIL_EPS {
            return Err(Error::Overflow(format!(
                "cdf({x}) = {p} is at the upper tail boundary"
            )));
        }
        Ok(self.pdf(x) / (1.0 - p))
    }

    /// The unique `x >= l_F` with `H(x) = t`.
    fn inv_cum_hazard(&self, t: f64) -> Result<f64> {
        invert_cum_hazard(self, t)
    }

    /// Serializable description, when the distribution has one.
    fn spec(&self) -> Option<DistSpec> {
        None
    }
}

fn check_support(lower: f64, x: f64) -> Result<()> {
    if x.is_nan() || x < lower {
        return Err(Error::domain(format!("x = {x} lies below l_F = {lower}")));
    }
    Ok(())
}

fn check_level(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain(format!(
            "cumulative hazard level t = {t} must be >= 0"
        )));
    }
    Ok(())
}

/// Bracketed bisection with Newton polish for `H(x) = t`.
pub fn invert_cum_hazard<D: ContinuousDistribution + ?Sized>(dist: &D, t: f64) -> Result<f64> {
    check_level(t)?;
    let lower = dist.lower_endpoint();
    if t == 0.0 {
        return Ok(lower);
    }
    // H(hi) > t, treating the tail boundary as +infinity.
    let above = |x: f64| -> Result<bool> {
        match dist.cum_hazard(x) {
            Ok(h) => Ok(h > t),
            Err(Error::Overflow(_)) => Ok(true),
            Err(e) => Err(e),
        }
    };
    let mut lo = lower;
    let mut width = 1.0_f64.max(lower.abs());
    let mut hi = lower + width;
    let mut expansions = 0;
    while !above(hi)? {
        lo = hi;
        width *= 2.0;
        hi = lower + width;
        expansions += 1;
        if expansions > 1100 || !hi.is_finite() {
            return Err(Error::Convergence(format!("could not bracket H^-1({t})")));
        }
    }
    if matches!(dist.cum_hazard(hi), Err(Error::Overflow(_))) {
        // the root must also lie below the point where the generic H overflows
        let mut probe = hi;
        loop {
            let mid = 0.5 * (lo + probe);
            if mid <= lo || mid >= probe {
                return Err(Error::Overflow(format!(
                    "H^-1({t}) lies in the unresolvable upper tail"
                )));
            }
            match dist.cum_hazard(mid) {
                Ok(h) if h > t => {
                    hi = mid;
                    break;
                }
                Ok(_) => lo = mid,
                Err(Error::Overflow(_)) => probe = mid,
                Err(e) => return Err(e),
            }
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..INVERSION_MAX_ITER {
        let hx = dist.cum_hazard(x)?;
        let resid = hx - t;
        if resid == 0.0 {
            return Ok(x);
        }
        if resid > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= INVERSION_REL_TOL * x.abs().max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
        let slope = dist.hazard(x).unwrap_or(0.0);
        let step = resid / slope;
        let newton = x - step;
        if slope > 0.0 && newton > lo && newton < hi {
            if step.abs() <= INVERSION_REL_TOL * newton.abs().max(1.0) {
                return Ok(newton);
            }
            x = newton;
        } else {
            x = 0.5 * (lo + hi);
        }
    }
    Err(Error::Convergence(format!(
        "H^-1({t}) did not converge in {INVERSION_MAX_ITER} iterations"
    )))
}

/// `w(v) = h(v) (v - l_F) / H(v)`, identically one on the exponential family.
pub fn w_diagnostic<D: ContinuousDistribution + ?Sized>(dist: &D, v: f64) -> Result<f64> {
    let lower = dist.lower_endpoint();
    if v.is_nan() || v <= lower {
        return Err(Error::domain(format!(
            "w(v) needs v > l_F (v = {v}, l_F = {lower})"
        )));
    }
    let h = dist.hazard(v)?;
    let big_h = dist.cum_hazard(v)?;
    Ok(h * (v - lower) / big_h)
}

/// Free-function form of [`ContinuousDistribution::cum_hazard`].
pub fn cum_hazard<D: ContinuousDistribution + ?Sized>(dist: &D, x: f64) -> Result<f64> {
    dist.cum_hazard(x)
}

/// Free-function form of [`ContinuousDistribution::inv_cum_hazard`].
pub fn inv_cum_hazard<D: ContinuousDistribution + ?Sized>(dist: &D, t: f64) -> Result<f64> {
    dist.inv_cum_hazard(t)
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "{name} must be a positive finite number (got {value})"
        )))
    }
}

/// `F(x) = 1 - exp(-c (x - l_F))`, `x >= l_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialDist {
    lower: f64,
    rate: f64,
}

impl ExponentialDist {
    pub fn new(lower: f64, rate: f64) -> Result<Self> {
        if !lower.is_finite() {
            return Err(Error::param(format!("l_F must be finite (got {lower})")));
        }
        positive("rate", rate)?;
        Ok(Self { lower, rate })
    }

    /// Exp(0, 1).
    pub fn standard() -> Self {
        Self {
            lower: 0.0,
            rate: 1.0,
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl ContinuousDistribution for ExponentialDist {
    fn lower_endpoint(&self) -> f64 {
        self.lower
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            0.0
        } else {
            -(-self.rate * (x - self.lower)).exp_m1()
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < self.lower {
            0.0
        } else {
            self.rate * (-self.rate * (x - self.lower)).exp()
        }
    }

    fn cum_hazard(&self, x: f64) -> Result<f64> {
        check_support(self.lower, x)?;
        Ok(self.rate * (x - self.lower))
    }

    fn hazard(&self, x: f64) -> Result<f64> {
        check_support(self.lower, x)?;
        Ok(self.rate)
    }

    fn inv_cum_hazard(&self, t: f64) -> Result<f64> {
        check_level(t)?;
        Ok(t / self.rate + self.lower)
    }

    fn spec(&self) -> Option<DistSpec> {
        Some(DistSpec::Exponential {
            l_f: self.lower,
            rate: self.rate,
        })
    }
}

/// Weibull with shape `beta` and scale `lambda`: `H(x) = (x / lambda)^beta`, `l_F = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullDist {
    shape: f64,
    scale: f64,
}

impl WeibullDist {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl ContinuousDistribution for WeibullDist {
    fn lower_endpoint(&self) -> f64 {
        0.0
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-(x / self.scale).powf(self.shape)).exp_m1()
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let z = x / self.scale;
        self.shape / self.scale * z.powf(self.shape - 1.0) * (-z.powf(self.shape)).exp()
    }

    fn cum_hazard(&self, x: f64) -> Result<f64> {
        check_support(0.0, x)?;
        Ok((x / self.scale).powf(self.shape))
    }

    fn hazard(&self, x: f64) -> Result<f64> {
        check_support(0.0, x)?;
        Ok(self.shape / self.scale * (x / self.scale).powf(self.shape - 1.0))
    }

    fn inv_cum_hazard(&self, t: f64) -> Result<f64> {
        check_level(t)?;
        Ok(self.scale * t.powf(1.0 / self.shape))
    }

    fn spec(&self) -> Option<DistSpec> {
        Some(DistSpec::Weibull {
            shape: self.shape,
            scale: self.scale,
        })
    }
}

/// Pareto with minimum `x_m` and tail index `alpha`: `H(x) = alpha ln(x / x_m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoDist {
    x_m: f64,
    alpha: f64,
}

impl ParetoDist {
    pub fn new(x_m: f64, alpha: f64) -> Result<Self> {
        positive("x_m", x_m)?;
        positive("alpha", alpha)?;
        Ok(Self { x_m, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl ContinuousDistribution for ParetoDist {
    fn lower_endpoint(&self) -> f64 {
        self.x_m
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.x_m {
            0.0
        } else {
            1.0 - (self.x_m / x).powf(self.alpha)
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < self.x_m {
            0.0
        } else {
            self.alpha / x * (self.x_m / x).powf(self.alpha)
        }
    }

    fn cum_hazard(&self, x: f64) -> Result<f64> {
        check_support(self.x_m, x)?;
        Ok(self.alpha * (x / self.x_m).ln())
    }

    fn hazard(&self, x: f64) -> Result<f64> {
        check_support(self.x_m, x)?;
        Ok(self.alpha / x)
    }

    fn inv_cum_hazard(&self, t: f64) -> Result<f64> {
        check_level(t)?;
        Ok(self.x_m * (t / self.alpha).exp())
    }

    fn spec(&self) -> Option<DistSpec> {
        Some(DistSpec::Pareto {
            x_m: self.x_m,
            alpha: self.alpha,
        })
    }
}

type ScalarFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A distribution given only by its `cdf` and `pdf`.
///
/// The hazard functions use the generic `-ln(1 - F)` and `f / (1 - F)` routes,
/// and `H^{-1}` is found numerically.
pub struct FnDist {
    name: String,
    lower: f64,
    cdf: ScalarFn,
    pdf: ScalarFn,
}

impl FnDist {
    pub fn new(
        name: impl Into<String>,
        lower: f64,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            lower,
            cdf: Box::new(cdf),
            pdf: Box::new(pdf),
        }
    }
}

impl fmt::Debug for FnDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnDist")
            .field("name", &self.name)
            .field("lower", &self.lower)
            .finish_non_exhaustive()
    }
}

impl ContinuousDistribution for FnDist {
    fn lower_endpoint(&self) -> f64 {
        self.lower
    }

    fn cdf(&self, x: f64) -> f64 {
        (self.cdf)(x)
    }

    fn pdf(&self, x: f64) -> f64 {
        (self.pdf)(x)
    }
}

/// JSON description of a built-in family:
/// `{"family": "exponential" | "weibull" | "pareto", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum DistSpec {
    Exponential {
        #[serde(default)]
        l_f: f64,
        rate: f64,
    },
    Weibull {
        shape: f64,
        scale: f64,
    },
    Pareto {
        x_m: f64,
        alpha: f64,
    },
}

impl DistSpec {
    pub fn build(&self) -> Result<Dist> {
        Ok(match *self {
            DistSpec::Exponential { l_f, rate } => {
                Dist::Exponential(ExponentialDist::new(l_f, rate)?)
            }
            DistSpec::Weibull { shape, scale } => Dist::Weibull(WeibullDist::new(shape, scale)?),
            DistSpec::Pareto { x_m, alpha } => Dist::Pareto(ParetoDist::new(x_m, alpha)?),
        })
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistSpec::Exponential { l_f, rate } => write!(f, "Exponential(l_F={l_f}, c={rate})"),
            DistSpec::Weibull { shape, scale } => {
                write!(f, "Weibull(shape={shape}, scale={scale})")
            }
            DistSpec::Pareto { x_m, alpha } => write!(f, "Pareto(x_m={x_m}, alpha={alpha})"),
        }
    }
}

/// Any of the built-in families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Exponential(ExponentialDist),
    Weibull(WeibullDist),
    Pareto(ParetoDist),
}

impl Dist {
    fn inner(&self) -> &dyn ContinuousDistribution {
        match self {
            Dist::Exponential(d) => d,
            Dist::Weibull(d) => d,
            Dist::Pareto(d) => d,
        }
    }
}

impl ContinuousDistribution for Dist {
    fn lower_endpoint(&self) -> f64 {
        self.inner().lower_endpoint()
    }
    fn cdf(&self, x: f64) -> f64 {
        self.inner().cdf(x)
    }
    fn pdf(&self, x: f64) -> f64 {
        self.inner().pdf(x)
    }
    fn cum_hazard(&self, x: f64) -> Result<f64> {
        self.inner().cum_hazard(x)
    }
    fn hazard(&self, x: f64) -> Result<f64> {
        self.inner().hazard(x)
    }
    fn inv_cum_hazard(&self, t: f64) -> Result<f64> {
        self.inner().inv_cum_hazard(t)
    }
    fn spec(&self) -> Option<DistSpec> {
        self.inner().spec()
    }
}
