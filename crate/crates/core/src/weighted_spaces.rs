//! Jacobi weights, the admissible exponent range `J_p`, quadrature rules, and
//! weighted `L_p` (quasi-)norms.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomials::Interval;

/// `w(x) = (1 + x)^α (1 - x)^β` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiWeight {
    pub alpha: f64,
    pub beta: f64,
}

impl JacobiWeight {
    pub fn new(alpha: f64, beta: f64) -> Self {
        JacobiWeight { alpha, beta }
    }

    pub fn unit() -> Self {
        JacobiWeight { alpha: 0.0, beta: 0.0 }
    }

    pub fn is_unit(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }

    /// Weight value; `+∞` at an endpoint carrying a negative exponent.
    pub fn eval(&self, x: f64) -> f64 {
        let left = 1.0 + x;
        let right = 1.0 - x;
        if (left <= 0.0 && self.alpha < 0.0) || (right <= 0.0 && self.beta < 0.0) {
            return f64::INFINITY;
        }
        pow_nonneg(left, self.alpha) * pow_nonneg(right, self.beta)
    }
}

impl Default for JacobiWeight {
    fn default() -> Self {
        Self::unit()
    }
}

#[inline]
fn pow_nonneg(base: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        base.max(0.0).powf(e)
    }
}

/// Whether `α` and `β` both lie in `J_p`: `(-1/p, ∞)` for finite `p`, `[0, ∞)` for `p = ∞`.
pub fn in_jp(alpha: f64, beta: f64, p: f64) -> bool {
    if !(p > 0.0) {
        return false;
    }
    if p.is_infinite() {
        alpha >= 0.0 && beta >= 0.0
    } else {
        let lo = -1.0 / p;
        alpha > lo && beta > lo && alpha.is_finite() && beta.is_finite()
    }
}

pub const DEFAULT_QUADRATURE_ORDER: usize = 160;
pub const DEFAULT_SUP_GRID: usize = 4097;

/// Parameters of the norm `‖w_{α,β} f‖_{L_p[a,b]}`.
///
/// On a general interval the weight is composed with `ℓ⁻¹` and the integral is
/// taken with respect to `dx` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormParams {
    pub weight: JacobiWeight,
    pub p: f64,
    pub interval: Interval,
    pub quadrature_order: usize,
    pub sup_grid: usize,
}

impl WeightedNormParams {
    pub fn new(alpha: f64, beta: f64, p: f64) -> Result<Self> {
        let params = WeightedNormParams {
            weight: JacobiWeight::new(alpha, beta),
            p,
            interval: Interval::UNIT,
            quadrature_order: DEFAULT_QUADRATURE_ORDER,
            sup_grid: DEFAULT_SUP_GRID,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn unweighted(p: f64) -> Result<Self> {
        Self::new(0.0, 0.0, p)
    }

    pub fn with_interval(mut self, interval: Interval) -> Self {
        self.interval = interval;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.quadrature_order = order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !in_jp(self.weight.alpha, self.weight.beta, self.p) {
            return Err(Error::Parameter(format!(
                "(alpha, beta) = ({}, {}) not in J_p for p = {}",
                self.weight.alpha, self.weight.beta, self.p
            )));
        }
        if self.quadrature_order == 0 || self.sup_grid < 3 {
            return Err(Error::Parameter("quadrature sizes must be positive".into()));
        }
        Ok(())
    }

    /// `p < 1` yields a quasi-norm.
    pub fn is_quasi(&self) -> bool {
        self.p < 1.0
    }
}

/// Family a quadrature rule belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QuadratureKind {
    GaussLegendre,
    /// Weight `(1 - x)^a (1 + x)^b`.
    GaussJacobi { a: f64, b: f64 },
    /// Gauss–Legendre panels over a breakpoint sequence.
    Composite { panels: usize },
}

/// Nodes and positive weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: QuadratureKind,
}

impl QuadratureRule {
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        Self::gauss_jacobi(order, 0.0, 0.0).map(|mut r| {
            r.kind = QuadratureKind::GaussLegendre;
            r
        })
    }

    /// Gauss–Jacobi rule for `∫ g(x) (1-x)^a (1+x)^b dx` by Golub–Welsch,
    /// Newton-polished, with Christoffel weights. Exactness on the orthogonal
    /// polynomials of degree `< 2·order` is verified before returning.
    pub fn gauss_jacobi(order: usize, a: f64, b: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Parameter("quadrature order must be positive".into()));
        }
        if !(a > -1.0 && b > -1.0) {
            return Err(Error::Parameter(format!("Jacobi exponents ({a}, {b}) must exceed -1")));
        }
        let rec = JacobiRecurrence::new(a, b, 2 * order + 1);
        let n = order;
        let mut t = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            t[(k, k)] = rec.diag[k];
            if k + 1 < n {
                let off = rec.off[k + 1].sqrt();
                t[(k, k + 1)] = off;
                t[(k + 1, k)] = off;
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        nodes.sort_by(|x, y| x.total_cmp(y));
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (pn, dpn) = rec.orthonormal_with_derivative(n, *x);
                if dpn == 0.0 {
                    break;
                }
                let step = pn / dpn;
                if step.is_finite() && step.abs() < 1e-6 {
                    *x -= step;
                }
            }
            *x = x.clamp(-1.0 + f64::EPSILON, 1.0 - f64::EPSILON);
        }
        let weights: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                let s: f64 = rec.orthonormal_values(n, x).iter().map(|p| p * p).sum();
                1.0 / s
            })
            .collect();
        let rule = QuadratureRule {
            nodes,
            weights,
            kind: QuadratureKind::GaussJacobi { a, b },
        };
        rule.verify_exactness(&rec)?;
        Ok(rule)
    }

    fn verify_exactness(&self, rec: &JacobiRecurrence) -> Result<()> {
        let n = self.nodes.len();
        let values: Vec<Vec<f64>> = self.nodes.iter().map(|&x| rec.orthonormal_values(2 * n, x)).collect();
        let sqrt_mu0 = rec.mu0.sqrt();
        // A node at distance δ from ±1 only knows that distance to ε/δ, and
        // singular weights put most of their mass on exactly those nodes.
        let closest = self
            .nodes
            .iter()
            .map(|x| (1.0 - x.abs()).max(f64::EPSILON))
            .fold(1.0, f64::min);
        let rel = 1e-12f64.max(16.0 * f64::EPSILON / closest);
        for j in 0..2 * n {
            let mut s = 0.0;
            let mut mag = 0.0;
            for (w, v) in self.weights.iter().zip(&values) {
                s += w * v[j];
                mag += w * v[j].abs();
            }
            let expected = if j == 0 { sqrt_mu0 } else { 0.0 };
            if (s - expected).abs() > rel * mag.max(sqrt_mu0) {
                return Err(Error::Solver(format!(
                    "quadrature of order {n} failed exactness check at degree {j}: {}",
                    (s - expected).abs()
                )));
            }
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Solver("non-positive quadrature weight".into()));
        }
        Ok(())
    }

    /// Gauss–Legendre panels of the given order over increasing breakpoints.
    pub fn composite(breaks: &[f64], order: usize) -> Result<Self> {
        let base = cached_rule(order, 0.0, 0.0)?;
        let mut nodes = Vec::with_capacity(order * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in breaks.windows(2) {
            let iv = Interval { a: w[0], b: w[1] };
            for (x, q) in base.nodes.iter().zip(&base.weights) {
                nodes.push(iv.from_unit(*x));
                weights.push(q * iv.jacobian());
            }
        }
        Ok(QuadratureRule {
            nodes,
            weights,
            kind: QuadratureKind::Composite {
                panels: breaks.len() - 1,
            },
        })
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Three-term recurrence of the orthonormal Jacobi polynomials for
/// `(1-x)^a (1+x)^b`.
struct JacobiRecurrence {
    diag: Vec<f64>,
    /// `off[k] = β_k` (squared off-diagonal), `k ≥ 1`.
    off: Vec<f64>,
    mu0: f64,
}

impl JacobiRecurrence {
    fn new(a: f64, b: f64, len: usize) -> Self {
        let ab = a + b;
        let mut diag = Vec::with_capacity(len);
        let mut off = vec![0.0; len + 1];
        for k in 0..len {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            let d = if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                (b * b - a * a) / (s * (s + 2.0))
            };
            diag.push(d);
        }
        for k in 1..=len {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            off[k] = if k == 1 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
        }
        let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + libm::lgamma(a + 1.0) + libm::lgamma(b + 1.0)
            - libm::lgamma(ab + 2.0))
        .exp();
        JacobiRecurrence { diag, off, mu0 }
    }

    /// Orthonormal `p_0(x) .. p_{count-1}(x)`.
    fn orthonormal_values(&self, count: usize, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        let mut prev = 0.0;
        let mut cur = 1.0 / self.mu0.sqrt();
        for k in 0..count {
            out.push(cur);
            let next = ((x - self.diag[k]) * cur - if k > 0 { self.off[k].sqrt() * prev } else { 0.0 })
                / self.off[k + 1].sqrt();
            prev = cur;
            cur = next;
        }
        out
    }

    /// `(p_n(x), p_n'(x))`.
    fn orthonormal_with_derivative(&self, n: usize, x: f64) -> (f64, f64) {
        let (mut p_prev, mut p) = (0.0, 1.0 / self.mu0.sqrt());
        let (mut d_prev, mut d) = (0.0, 0.0);
        for k in 0..n {
            let sb = self.off[k + 1].sqrt();
            let sa = if k > 0 { self.off[k].sqrt() } else { 0.0 };
            let p_next = ((x - self.diag[k]) * p - sa * p_prev) / sb;
            let d_next = (p + (x - self.diag[k]) * d - sa * d_prev) / sb;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
        }
        (p, d)
    }
}

type RuleKey = (usize, u64, u64);

/// Shared read-only table of constructed Gauss rules.
pub fn cached_rule(order: usize, a: f64, b: f64) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (order, a.to_bits(), b.to_bits());
    if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&key) {
        return Ok(rule.clone());
    }
    let rule = if a == 0.0 && b == 0.0 {
        QuadratureRule::gauss_legendre(order)?
    } else {
        QuadratureRule::gauss_jacobi(order, a, b)?
    };
    let rule = Arc::new(rule);
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .insert(key, rule.clone());
    Ok(rule)
}

/// A discretized weighted integral: `∫ |w f|^p ≈ Σ q_i |m_i f(x_i)|^p`.
///
/// `unit_nodes` live on `[-1, 1]`; `points` are their images on the norm's
/// interval. The Jacobian of the interval map is folded into `weights`.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub unit_nodes: Vec<f64>,
    pub points: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Quadrature discretization of the weighted `p`-integral for finite `p`.
///
/// With a non-trivial weight, `|w|^p` is absorbed into Gauss–Jacobi nodes with
/// exponents `(pβ, pα)`; endpoints are never sampled.
pub fn discretize(params: &WeightedNormParams, order: usize) -> Result<Discretization> {
    params.validate()?;
    if params.p.is_infinite() {
        return Err(Error::Parameter("discretize is for finite p".into()));
    }
    let w = params.weight;
    let jac = params.interval.jacobian();
    let rule = if w.is_unit() {
        cached_rule(order, 0.0, 0.0)?
    } else {
        cached_rule(order, params.p * w.beta, params.p * w.alpha)?
    };
    let points = rule.nodes.iter().map(|&u| params.interval.from_unit(u)).collect();
    Ok(Discretization {
        unit_nodes: rule.nodes.clone(),
        points,
        multipliers: vec![1.0; rule.nodes.len()],
        weights: rule.weights.iter().map(|q| q * jac).collect(),
    })
}

/// Chebyshev–Lobatto grid of `m` points on `[-1, 1]`, increasing.
pub fn chebyshev_grid(m: usize) -> Vec<f64> {
    let n = (m.max(2) - 1) as f64;
    (0..m.max(2))
        .map(|k| {
            let num = 2.0 * k as f64 - n;
            if num == 0.0 {
                0.0
            } else {
                (PI * num / (2.0 * n)).sin()
            }
        })
        .collect()
}

/// A norm value with its numerical error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// For finite `p`: change when the quadrature order doubles. For `p = ∞`:
    /// gain from the refinement pass over the raw grid maximum.
    pub error_estimate: f64,
    /// `p < 1`: the value is a quasi-norm.
    pub quasi: bool,
}

/// `‖w f‖_p` on the parameters' interval.
pub fn weighted_lp_norm<F: Fn(f64) -> f64>(f: F, params: &WeightedNormParams) -> Result<f64> {
    params.validate()?;
    if params.p.is_infinite() {
        sup_norm(&f, params).map(|(v, _)| v)
    } else {
        finite_norm(&f, params, params.quadrature_order)
    }
}

/// `‖w f‖_p` together with an error estimate and the quasi-norm flag.
pub fn weighted_norm_estimate<F: Fn(f64) -> f64>(f: F, params: &WeightedNormParams) -> Result<NormEstimate> {
    params.validate()?;
    if params.p.is_infinite() {
        let (value, grid_max) = sup_norm(&f, params)?;
        return Ok(NormEstimate {
            value,
            error_estimate: value - grid_max,
            quasi: false,
        });
    }
    let value = finite_norm(&f, params, params.quadrature_order)?;
    let fine = finite_norm(&f, params, 2 * params.quadrature_order)?;
    Ok(NormEstimate {
        value,
        error_estimate: (fine - value).abs(),
        quasi: params.is_quasi(),
    })
}

fn finite_norm<F: Fn(f64) -> f64>(f: &F, params: &WeightedNormParams, order: usize) -> Result<f64> {
    let d = discretize(params, order)?;
    let p = params.p;
    let mut s = 0.0;
    for i in 0..d.points.len() {
        let v = d.multipliers[i] * f(d.points[i]);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("non-finite integrand at x = {}", d.points[i])));
        }
        s += d.weights[i] * v.abs().powf(p);
    }
    Ok(s.powf(1.0 / p))
}

/// Grid maximum of `|w f|` followed by golden-section refinement around the
/// maximizer. Returns `(refined, raw grid max)`; both are lower bounds of the
/// essential supremum.
fn sup_norm<F: Fn(f64) -> f64>(f: &F, params: &WeightedNormParams) -> Result<(f64, f64)> {
    let w = params.weight;
    let iv = params.interval;
    let g = |u: f64| -> f64 { (w.eval(u) * f(iv.from_unit(u))).abs() };
    refined_grid_max(&g, &chebyshev_grid(params.sup_grid))
        .map_err(|u| Error::Evaluation(format!("non-finite value at x = {}", iv.from_unit(u))))
}

/// Maximum of `g ≥ 0` over an increasing grid, refined by golden-section
/// search around every grid peak within half of the largest one. Returns
/// `(refined, raw grid max)`, or the offending point when `g` is not finite.
pub(crate) fn refined_grid_max<G: Fn(f64) -> f64>(g: &G, grid: &[f64]) -> std::result::Result<(f64, f64), f64> {
    let vals: Vec<f64> = grid.iter().map(|&u| g(u)).collect();
    if let Some(k) = vals.iter().position(|v| !v.is_finite()) {
        return Err(grid[k]);
    }
    let top = vals.iter().copied().fold(0.0f64, f64::max);
    let last = vals.len() - 1;
    let mut peaks: Vec<usize> = (0..vals.len())
        .filter(|&k| {
            vals[k] >= 0.5 * top
                && (k == 0 || vals[k] >= vals[k - 1])
                && (k == last || vals[k] >= vals[k + 1])
        })
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    peaks.truncate(64);
    let mut best = top;
    for k in peaks {
        let (_, v) = golden_max(g, grid[k.saturating_sub(1)], grid[(k + 1).min(last)], 60);
        if v.is_finite() {
            best = best.max(v);
        }
    }
    Ok((best, top))
}

/// Golden-section search for a maximum of `g` on `[a, b]`.
pub(crate) fn golden_max<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..iters {
        if !(gc.is_finite() && gd.is_finite()) {
            break;
        }
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    let candidates = [(c, gc), (d, gd)];
    candidates
        .into_iter()
        .filter(|(_, v)| v.is_finite())
        .fold((a, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// Adaptive Simpson quadrature with the Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, m, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
