//! Gaussian quadrature rules used by the operator and regression code.
//!
//! Two families are provided: Gauss-Legendre rules with adaptive interval
//! halving, and Gauss-Jacobi rules normalized to the Beta(a, b) probability
//! weight on `[0, 1]`.

use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Node count of the production Gauss-Legendre rule.
pub const LEGENDRE_NODES: usize = 64;

/// Default relative tolerance for adaptive integration.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Maximum bisection depth before reporting nonconvergence.
pub const MAX_DEPTH: u32 = 20;

/// A fixed rule: nodes and weights on a reference interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Result of an integration together with an a-posteriori error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Gauss-Legendre rule on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn legendre64() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(LEGENDRE_NODES))
}

/// Apply the 64-node Gauss-Legendre rule on `[a, b]`.
pub fn legendre_fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let rule = legendre64();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// Adaptive Gauss-Legendre integration by interval halving.
///
/// Panels are kept in a queue ordered by their error estimate (the change
/// between the whole-panel rule and the sum over its halves). The worst panel
/// is split until the summed estimate drops below `rel_tol * max(1, |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = Panel::new(&f, a, b, legendre_fixed(&f, a, b), 0)?;
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    loop {
        let tol = rel_tol * value.abs().max(1.0);
        if error <= tol {
            return Ok(Estimate { value, error });
        }
        let worst = heap.pop().expect("queue never empties");
        if worst.depth >= MAX_DEPTH {
            return Err(Error::Quadrature(format!(
                "refinement depth {MAX_DEPTH} exceeded near [{}, {}] (error estimate {error:e})",
                worst.a, worst.b
            )));
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = Panel::new(&f, worst.a, mid, worst.left, worst.depth + 1)?;
        let right = Panel::new(&f, mid, worst.b, worst.right, worst.depth + 1)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, depth: u32) -> Result<Self> {
        let mid = 0.5 * (a + b);
        let left = legendre_fixed(f, a, mid);
        let right = legendre_fixed(f, mid, b);
        let value = left + right;
        if !value.is_finite() || !whole.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        Ok(Panel {
            a,
            b,
            left,
            right,
            value,
            error: (value - whole).abs(),
            depth,
        })
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Gauss-Jacobi rule for the Beta(a, b) density on `[0, 1]`.
///
/// Nodes `s_i` and weights `w_i` satisfy `sum w_i p(s_i) = E[p(S)]`,
/// `S ~ Beta(a, b)`, for every polynomial of degree below `2n`. Weights sum
/// to one.
pub fn beta_rule(a: f64, b: f64, n: usize) -> Result<Rule> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::param(format!(
            "Beta weight needs a, b > 0 (got {a}, {b})"
        )));
    }
    if n == 0 {
        return Err(Error::param("rule needs at least one node"));
    }
    // Weight (1 - x)^alpha (1 + x)^beta on [-1, 1], x = 2s - 1.
    let alpha = b - 1.0;
    let beta = a - 1.0;
    let (diag, offdiag_sq) = jacobi_recurrence(alpha, beta, n);

    let mut jm = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jm[(i, i)] = diag[i];
        if i + 1 < n {
            let o = offdiag_sq[i + 1].sqrt();
            jm[(i, i + 1)] = o;
            jm[(i + 1, i)] = o;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut xs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    xs.sort_by(f64::total_cmp);

    // Newton polish on the monic recurrence, weights from the Christoffel function.
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for x0 in xs {
        let mut x = x0;
        for _ in 0..8 {
            let (p, dp) = monic_with_derivative(&diag, &offdiag_sq, n, x);
            if dp == 0.0 {
                break;
            }
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let x = x.clamp(-1.0, 1.0);
        let christoffel = orthonormal_sum_sq(&diag, &offdiag_sq, n, x);
        nodes.push(0.5 * (x + 1.0));
        weights.push(1.0 / christoffel);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(Rule { nodes, weights })
}

/// Recurrence coefficients `(a_j, b_j)` of the monic Jacobi polynomials,
/// `p_{j+1} = (x - a_j) p_j - b_j p_{j-1}`. `b_0` is unused.
fn jacobi_recurrence(alpha: f64, beta: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let ab = alpha + beta;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n + 1];
    for (j, d) in diag.iter_mut().enumerate() {
        let jf = j as f64;
        let s = 2.0 * jf + ab;
        *d = if j == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / (s * (s + 2.0))
        };
    }
    for (j, o) in off.iter_mut().enumerate().skip(1) {
        let jf = j as f64;
        let s = 2.0 * jf + ab;
        *o = if j == 1 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((ab + 2.0).powi(2) * (ab + 3.0))
        } else {
            4.0 * jf * (jf + alpha) * (jf + beta) * (jf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
    }
    (diag, off)
}

fn monic_with_derivative(diag: &[f64], off: &[f64], n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (0.0, 1.0);
    let (mut d0, mut d1) = (0.0, 0.0);
    for j in 0..n {
        let p2 = (x - diag[j]) * p1 - if j > 0 { off[j] * p0 } else { 0.0 };
        let d2 = p1 + (x - diag[j]) * d1 - if j > 0 { off[j] * d0 } else { 0.0 };
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// `sum_{j<n} q_j(x)^2` for the orthonormal polynomials of a unit-mass weight.
fn orthonormal_sum_sq(diag: &[f64], off: &[f64], n: usize, x: f64) -> f64 {
    let mut q_prev = 0.0;
    let mut q = 1.0;
    let mut sum = 1.0;
    for j in 0..n.saturating_sub(1) {
        let next = ((x - diag[j]) * q - if j > 0 { off[j].sqrt() * q_prev } else { 0.0 })
            / off[j + 1].sqrt();
        q_prev = q;
        q = next;
        sum += q * q;
    }
    sum
}

type RuleKey = (u64, u64, usize);

/// Cached Beta rule for integer shape parameters.
pub fn beta_rule_cached(a: u32, b: u32, n: usize) -> Result<Arc<Rule>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (u64::from(a), u64::from(b), n);
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&key) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(beta_rule(f64::from(a), f64::from(b), n)?);
    cache
        .lock()
        .expect("rule cache poisoned")
        .insert(key, Arc::clone(&rule));
    Ok(rule)
}

/// `E[f(S)]` for `S ~ Beta(a, b)` with the given cached rule.
pub fn beta_expectation<F: Fn(f64) -> f64>(rule: &Rule, f: F) -> f64 {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| w * f(s))
        .sum()
}
