//! The average-derivative operator `M(u, v) = (g(v) - g(u)) / (v - u)` and its
//! mixed partials `_iM_j = d^{i+j} M / du^i dv^j`.
//!
//! Three routes are available for `_iM_j`:
//!
//! * `Integral`: `_iM_j(u, v) = int_0^1 (1-t)^i t^j g^{(i+j+1)}(u + t(v-u)) dt`,
//!   evaluated with adaptive 64-node Gauss-Legendre. Free of cancellation and
//!   still valid at `u = v`; this is the production route.
//! * `Recurrence`: bottom-up table from the identities
//!   `g^{(j)}(v) = (v-u) M_j + j M_{j-1}` and
//!   `i _{i-1}M_j = (v-u) _iM_j + j _iM_{j-1}`. Loses accuracy as `v -> u`.
//! * `ClosedForm`: only for [`PowerG`](crate::PowerG) and
//!   [`ReciprocalG`](crate::ReciprocalG).

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial_f64, factorial_f64, falling_f64};
use crate::error::{Error, Result};
use crate::quadrature::{self, Estimate};
use crate::smooth::{check_interval, check_order, SmoothFunction};

/// Threshold below which `m_value` switches to the midpoint derivative.
pub const NEAR_DIAGONAL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImjMethod {
    Integral,
    Recurrence,
    ClosedForm,
}

/// Which mixed partial to evaluate, and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedPartialRequest {
    pub i: usize,
    pub j: usize,
    pub u: f64,
    pub v: f64,
}

impl MixedPartialRequest {
    pub fn new(i: usize, j: usize, u: f64, v: f64) -> Self {
        Self { i, j, u, v }
    }
}

fn near_diagonal(u: f64, v: f64) -> bool {
    (v - u).abs() < NEAR_DIAGONAL * u.abs().max(1.0)
}

/// `M(u, v)`; near the diagonal this returns `g'((u + v) / 2)`.
pub fn m_value<G: SmoothFunction + ?Sized>(g: &G, u: f64, v: f64) -> Result<f64> {
    check_interval(g, u.min(v), u.max(v))?;
    check_order(g, 1)?;
    if near_diagonal(u, v) {
        return Ok(g.derivative(1, 0.5 * (u + v)));
    }
    Ok((g.eval(v) - g.eval(u)) / (v - u))
}

/// `_iM_j(u, v)` by the chosen route.
pub fn imj<G: SmoothFunction + ?Sized>(
    g: &G,
    req: MixedPartialRequest,
    method: ImjMethod,
) -> Result<f64> {
    match method {
        ImjMethod::Integral => imj_integral(g, req).map(|e| e.value),
        ImjMethod::Recurrence => imj_recurrence(g, req),
        ImjMethod::ClosedForm => imj_closed_form(g, req),
    }
}

fn check_request<G: SmoothFunction + ?Sized>(
    g: &G,
    req: &MixedPartialRequest,
    allow_diagonal: bool,
) -> Result<()> {
    let MixedPartialRequest { i, j, u, v } = *req;
    if u.is_nan() || v.is_nan() || v < u || (!allow_diagonal && v == u) {
        return Err(Error::domain(format!(
            "_{i}M_{j} needs v {} u (u = {u}, v = {v})",
            if allow_diagonal { ">=" } else { ">" }
        )));
    }
    check_order(g, i + j + 1)?;
    check_interval(g, u, v)
}

/// Integral route with its quadrature error estimate.
pub fn imj_integral<G: SmoothFunction + ?Sized>(
    g: &G,
    req: MixedPartialRequest,
) -> Result<Estimate> {
    check_request(g, &req, true)?;
    let MixedPartialRequest { i, j, u, v } = req;
    let order = i + j + 1;
    let width = v - u;
    let (pi, pj) = (i as i32, j as i32);
    quadrature::integrate(
        |t: f64| (1.0 - t).powi(pi) * t.powi(pj) * g.derivative(order, u + t * width),
        0.0,
        1.0,
        quadrature::DEFAULT_REL_TOL,
    )
}

/// Table of `_aM_b` for `a <= i`, `b <= j` built from the recurrences.
pub fn imj_recurrence_table<G: SmoothFunction + ?Sized>(
    g: &G,
    req: MixedPartialRequest,
) -> Result<Vec<Vec<f64>>> {
    check_request(g, &req, false)?;
    let MixedPartialRequest { i, j, u, v } = req;
    let d = v - u;
    let mut table = vec![vec![0.0; j + 1]; i + 1];
    table[0][0] = (g.eval(v) - g.eval(u)) / d;
    for b in 1..=j {
        table[0][b] = (g.derivative(b, v) - b as f64 * table[0][b - 1]) / d;
    }
    for a in 1..=i {
        // u-side mirror of the first identity: g^{(a)}(u) = a _{a-1}M - (v-u) _aM
        table[a][0] = (a as f64 * table[a - 1][0] - g.derivative(a, u)) / d;
        for b in 1..=j {
            table[a][b] = (a as f64 * table[a - 1][b] - b as f64 * table[a][b - 1]) / d;
        }
    }
    Ok(table)
}

fn imj_recurrence<G: SmoothFunction + ?Sized>(g: &G, req: MixedPartialRequest) -> Result<f64> {
    let table = imj_recurrence_table(g, req)?;
    Ok(table[req.i][req.j])
}

fn imj_closed_form<G: SmoothFunction + ?Sized>(g: &G, req: MixedPartialRequest) -> Result<f64> {
    check_request(g, &req, false)?;
    g.closed_form_imj(req.i, req.j, req.u, req.v)
        .ok_or_else(|| Error::UnsupportedMethod {
            method: "closed_form",
            function: g.name(),
        })
}

/// Right-hand side of the regression identity,
/// `C(k+r-2, k-1) * _{r-1}M_{k-1}(u, v)`.
pub fn rhs_operator<G: SmoothFunction + ?Sized>(
    g: &G,
    k: u32,
    r: u32,
    u: f64,
    v: f64,
) -> Result<f64> {
    rhs_operator_estimate(g, k, r, u, v).map(|e| e.value)
}

pub(crate) fn rhs_operator_estimate<G: SmoothFunction + ?Sized>(
    g: &G,
    k: u32,
    r: u32,
    u: f64,
    v: f64,
) -> Result<Estimate> {
    if k < 1 || r < 1 {
        return Err(Error::param(format!(
            "k and r must be >= 1 (k = {k}, r = {r})"
        )));
    }
    if !(v > u) {
        return Err(Error::domain(format!("need v > u (u = {u}, v = {v})")));
    }
    let coef = binomial_f64(u64::from(k + r - 2), u64::from(k - 1))?;
    let est = imj_integral(
        g,
        MixedPartialRequest::new((r - 1) as usize, (k - 1) as usize, u, v),
    )?;
    Ok(Estimate {
        value: coef * est.value,
        error: coef * est.error,
    })
}

/// Both sides of the derivative identity
/// `(n-1)! g^{(k+n-1)}(v) = sum_{i=0}^{n} C(n,i) (k+n-1)_{(n-i)} (v-u)^i _{n-1}M_{k-1+i}(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Check {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn lemma1_check<G: SmoothFunction + ?Sized>(
    g: &G,
    k: u32,
    n: u32,
    u: f64,
    v: f64,
) -> Result<Lemma1Check> {
    if k < 1 || n < 1 {
        return Err(Error::param(format!(
            "k and n must be >= 1 (k = {k}, n = {n})"
        )));
    }
    if !(v > u) {
        return Err(Error::domain(format!("need v > u (u = {u}, v = {v})")));
    }
    let (k64, n64) = (u64::from(k), u64::from(n));
    check_order(g, (k + 2 * n - 1) as usize)?;
    let lhs = factorial_f64(n64 - 1)? * g.derivative((k + n - 1) as usize, v);
    let mut rhs = 0.0;
    for i in 0..=n64 {
        let coef = binomial_f64(n64, i)? * falling_f64(k64 + n64 - 1, n64 - i)?;
        let term = imj_integral(
            g,
            MixedPartialRequest::new((n - 1) as usize, (k64 - 1 + i) as usize, u, v),
        )?
        .value;
        rhs += coef * (v - u).powi(i as i32) * term;
    }
    Ok(Lemma1Check {
        lhs,
        rhs,
        residual: lhs - rhs,
    })
}

/// Signed residual `LHS - RHS` of the derivative identity.
pub fn lemma1_residual<G: SmoothFunction + ?Sized>(
    g: &G,
    k: u32,
    n: u32,
    u: f64,
    v: f64,
) -> Result<f64> {
    lemma1_check(g, k, n, u, v).map(|c| c.residual)
}

/// Offsets `10^-1 .. 10^-6` used to approach the lower endpoint.
pub fn boundary_offsets() -> [f64; 6] {
    [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
}

/// Boundary behaviour of `_iM_j(l_F, l_F + eps)` as `eps -> 0+`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Limit {
    pub i: usize,
    pub j: usize,
    pub lower: f64,
    /// `(eps, _iM_j(l_F, l_F + eps))` for each offset.
    pub samples: Vec<(f64, f64)>,
    pub extrapolated: f64,
    /// `g^{(i+j+1)}(l_F) / ((i+j+1) C(i+j, i))`.
    pub target: f64,
}

impl Lemma2Limit {
    pub fn abs_error(&self) -> f64 {
        (self.extrapolated - self.target).abs()
    }
}

pub fn lemma2_limit<G: SmoothFunction + ?Sized>(
    g: &G,
    i: usize,
    j: usize,
    lower: f64,
) -> Result<Lemma2Limit> {
    let order = i + j + 1;
    check_order(g, order)?;
    let offsets = boundary_offsets();
    check_interval(g, lower, lower + offsets[0])?;
    let samples = offsets
        .iter()
        .map(|&eps| {
            imj_integral(g, MixedPartialRequest::new(i, j, lower, lower + eps))
                .map(|e| (eps, e.value))
        })
        .collect::<Result<Vec<_>>>()?;
    let extrapolated = extrapolate_to_zero(&samples);
    let target =
        g.derivative(order, lower) / (order as f64 * binomial_f64((i + j) as u64, i as u64)?);
    Ok(Lemma2Limit {
        i,
        j,
        lower,
        samples,
        extrapolated,
        target,
    })
}

/// Richardson (Neville) extrapolation of `f(eps)` to `eps = 0`.
pub fn extrapolate_to_zero(samples: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let mut p: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let n = p.len();
    for level in 1..n {
        for m in 0..(n - level) {
            let (x0, x1) = (xs[m], xs[m + level]);
            p[m] = (x0 * p[m + 1] - x1 * p[m]) / (x0 - x1);
        }
    }
    p[0]
}

/// `(v - l_F)^m _iM_j(l_F, v)` over the offset grid; these shrink toward zero.
pub fn boundary_decay<G: SmoothFunction + ?Sized>(
    g: &G,
    i: usize,
    j: usize,
    lower: f64,
    m: i32,
) -> Result<Vec<f64>> {
    boundary_offsets()
        .iter()
        .map(|&eps| {
            imj_integral(g, MixedPartialRequest::new(i, j, lower, lower + eps))
                .map(|e| eps.powi(m) * e.value)
        })
        .collect()
}
