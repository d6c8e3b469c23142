//! Functions `g` with evaluable derivatives, the inputs to the
//! divided-difference operators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait SmoothFunction: fmt::Debug + Send + Sync {
    fn eval(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// `g^{(order)}(x)`. Callers check `order` against [`max_order`](Self::max_order).
    fn derivative(&self, order: usize, x: f64) -> f64;

    /// Highest derivative the function can supply; `None` when unbounded.
    fn max_order(&self) -> Option<usize> {
        None
    }

    /// Whether `g` is smooth on the closed interval between `a` and `b`.
    fn supports_interval(&self, _a: f64, _b: f64) -> bool {
        true
    }

    /// Closed form of `_iM_j(u, v)`, for families that have one.
    fn closed_form_imj(&self, _i: usize, _j: usize, _u: f64, _v: f64) -> Option<f64> {
        None
    }

    fn name(&self) -> String {
        format!("{self:?}")
    }
}

impl<G: SmoothFunction + ?Sized> SmoothFunction for &G {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn derivative(&self, order: usize, x: f64) -> f64 {
        (**self).derivative(order, x)
    }
    fn max_order(&self) -> Option<usize> {
        (**self).max_order()
    }
    fn supports_interval(&self, a: f64, b: f64) -> bool {
        (**self).supports_interval(a, b)
    }
    fn closed_form_imj(&self, i: usize, j: usize, u: f64, v: f64) -> Option<f64> {
        (**self).closed_form_imj(i, j, u, v)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<G: SmoothFunction + ?Sized> SmoothFunction for Box<G> {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn derivative(&self, order: usize, x: f64) -> f64 {
        (**self).derivative(order, x)
    }
    fn max_order(&self) -> Option<usize> {
        (**self).max_order()
    }
    fn supports_interval(&self, a: f64, b: f64) -> bool {
        (**self).supports_interval(a, b)
    }
    fn closed_form_imj(&self, i: usize, j: usize, u: f64, v: f64) -> Option<f64> {
        (**self).closed_form_imj(i, j, u, v)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// Fails with an order error when `g` cannot supply `order` derivatives.
pub fn check_order<G: SmoothFunction + ?Sized>(g: &G, order: usize) -> Result<()> {
    match g.max_order() {
        Some(max) if order > max => Err(Error::Order {
            requested: order,
            max,
        }),
        _ => Ok(()),
    }
}

pub fn check_interval<G: SmoothFunction + ?Sized>(g: &G, a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || !g.supports_interval(a, b) {
        return Err(Error::domain(format!(
            "[{a}, {b}] is outside the domain of {}",
            g.name()
        )));
    }
    Ok(())
}

fn inv_factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, m| acc / m as f64)
}

fn falling(n: usize, m: usize) -> f64 {
    if m > n {
        return 0.0;
    }
    ((n - m + 1)..=n).fold(1.0, |acc, q| acc * q as f64)
}

/// `g(x) = x^{k+r} / (k+r)!`, so that `g^{(k+r-1)}(x) = x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerG {
    pub k: u32,
    pub r: u32,
}

impl PowerG {
    pub fn new(k: u32, r: u32) -> Self {
        Self { k, r }
    }

    fn degree(&self) -> usize {
        (self.k + self.r) as usize
    }
}

impl SmoothFunction for PowerG {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        let n = self.degree();
        if order > n {
            return 0.0;
        }
        x.powi((n - order) as i32) * inv_factorial(n - order)
    }

    fn closed_form_imj(&self, i: usize, j: usize, u: f64, v: f64) -> Option<f64> {
        // M(u, v) = (1/N!) sum_{a+b=N-1} u^a v^b
        let n = self.degree();
        if n == 0 {
            return Some(0.0);
        }
        let mut sum = 0.0;
        for a in i..n {
            let b = n - 1 - a;
            if b < j {
                continue;
            }
            sum += falling(a, i) * falling(b, j) * u.powi((a - i) as i32) * v.powi((b - j) as i32);
        }
        Some(sum * inv_factorial(n))
    }

    fn name(&self) -> String {
        format!("power(k={},r={})", self.k, self.r)
    }
}

/// `g(x) = (-1)^{k+r-1} / (k+r-1)! * 1/x`, so that `g^{(k+r-1)}(x) = x^{-(k+r)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReciprocalG {
    pub k: u32,
    pub r: u32,
}

impl ReciprocalG {
    pub fn new(k: u32, r: u32) -> Self {
        Self { k, r }
    }

    fn constant(&self) -> f64 {
        let m = (self.k + self.r) as usize - 1;
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * inv_factorial(m)
    }
}

impl SmoothFunction for ReciprocalG {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
        self.constant() * sign * falling(order, order) / x.powi(order as i32 + 1)
    }

    fn supports_interval(&self, a: f64, b: f64) -> bool {
        a * b > 0.0
    }

    fn closed_form_imj(&self, i: usize, j: usize, u: f64, v: f64) -> Option<f64> {
        // M(u, v) = -C / (u v)
        let sign = if (i + j).is_multiple_of(2) { 1.0 } else { -1.0 };
        Some(
            -self.constant() * sign * falling(i, i) * falling(j, j)
                / (u.powi(i as i32 + 1) * v.powi(j as i32 + 1)),
        )
    }

    fn name(&self) -> String {
        format!("reciprocal(k={},r={})", self.k, self.r)
    }
}

/// `g(x) = e^x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExpG;

impl SmoothFunction for ExpG {
    fn derivative(&self, _order: usize, x: f64) -> f64 {
        x.exp()
    }

    fn name(&self) -> String {
        "exp".to_string()
    }
}

/// `g(x) = sum_m coeffs[m] x^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `x^d`.
    pub fn monomial(d: usize) -> Self {
        let mut coeffs = vec![0.0; d + 1];
        coeffs[d] = 1.0;
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

impl SmoothFunction for Polynomial {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(order)
            .rev()
            .fold(0.0, |acc, (m, &c)| acc * x + c * falling(m, order))
    }

    fn name(&self) -> String {
        format!("polynomial(deg={})", self.degree())
    }
}

type ScalarFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied `g` given as the list `[g, g', g'', ...]`.
pub struct FnG {
    name: String,
    derivs: Vec<ScalarFn>,
}

impl FnG {
    pub fn new(name: impl Into<String>, derivs: Vec<ScalarFn>) -> Result<Self> {
        if derivs.is_empty() {
            return Err(Error::param("a function needs at least g itself"));
        }
        Ok(Self {
            name: name.into(),
            derivs,
        })
    }
}

impl fmt::Debug for FnG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnG")
            .field("name", &self.name)
            .field("max_order", &(self.derivs.len() - 1))
            .finish()
    }
}

impl SmoothFunction for FnG {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        self.derivs.get(order).map_or(f64::NAN, |d| d(x))
    }

    fn max_order(&self) -> Option<usize> {
        Some(self.derivs.len() - 1)
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// `x -> -g(-x)`, which swaps the roles of `u` and `v` in `_iM_j`.
#[derive(Debug, Clone)]
pub struct Reflected<G>(pub G);

impl<G: SmoothFunction> SmoothFunction for Reflected<G> {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        let sign = if order.is_multiple_of(2) { -1.0 } else { 1.0 };
        sign * self.0.derivative(order, -x)
    }

    fn max_order(&self) -> Option<usize> {
        self.0.max_order()
    }

    fn supports_interval(&self, a: f64, b: f64) -> bool {
        self.0.supports_interval(-b, -a)
    }

    fn name(&self) -> String {
        format!("reflected({})", self.0.name())
    }
}

/// JSON description of a built-in `g`. For `power` and `reciprocal`, omitted
/// `k`/`r` are taken from the query the function is used in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum GSpec {
    Power {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<u32>,
    },
    Reciprocal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<u32>,
    },
    Exp,
    Polynomial {
        coeffs: Vec<f64>,
    },
}

impl GSpec {
    /// Build the function, filling missing `k`/`r` from the query.
    pub fn build(&self, k: Option<u32>, r: Option<u32>) -> Result<Box<dyn SmoothFunction>> {
        let pick = |own: Option<u32>, dflt: Option<u32>, name: &str| -> Result<u32> {
            let val = own.or(dflt).ok_or_else(|| {
                Error::Config(format!(
                    "g needs `{name}` (not given by the function or the query)"
                ))
            })?;
            if val == 0 {
                return Err(Error::param(format!("g parameter `{name}` must be >= 1")));
            }
            Ok(val)
        };
        Ok(match self {
            GSpec::Power { k: gk, r: gr } => {
                Box::new(PowerG::new(pick(*gk, k, "k")?, pick(*gr, r, "r")?))
            }
            GSpec::Reciprocal { k: gk, r: gr } => {
                Box::new(ReciprocalG::new(pick(*gk, k, "k")?, pick(*gr, r, "r")?))
            }
            GSpec::Exp => Box::new(ExpG),
            GSpec::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::param("polynomial needs finite coefficients"));
                }
                Box::new(Polynomial::new(coeffs.clone()))
            }
        })
    }
}
