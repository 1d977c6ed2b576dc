//! Symmetric differences and the classical, Ditzian–Totik and Jacobi-weighted
//! moduli of smoothness.
//!
//! Every supremum over the step `h` is taken on a geometric grid from `t/1000`
//! to `t` (endpoint included), so computed moduli are lower bounds of the true
//! suprema. The norm over `x` is restricted to the admissible set, where the
//! whole stencil stays inside `[-1, 1]`; outside it the difference is zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomials::{chebyshev_knots, mesh_norm};
use crate::weighted_spaces::{cached_rule, chebyshev_grid, golden_max, in_jp, JacobiWeight};

/// How the stencil width depends on `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StepMode {
    /// Step `h` everywhere.
    Constant,
    /// Step `h·φ(x)` with `φ(x) = √(1 - x²)`.
    #[default]
    Phi,
}

/// `φ(x) = √(1 - x²)`.
#[inline]
pub fn phi(x: f64) -> f64 {
    (1.0 - x * x).max(0.0).sqrt()
}

/// Parameters of a modulus computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusSpec {
    /// Difference order.
    pub k: usize,
    /// Power of `φ` multiplying the difference.
    pub r: u32,
    pub step_mode: StepMode,
    pub weight: Option<JacobiWeight>,
    pub p: f64,
    pub h_grid: usize,
    pub x_grid: usize,
}

impl ModulusSpec {
    pub fn new(k: usize, p: f64) -> Self {
        ModulusSpec {
            k,
            r: 0,
            step_mode: StepMode::Phi,
            weight: None,
            p,
            h_grid: 64,
            x_grid: 2049,
        }
    }

    pub fn with_r(mut self, r: u32) -> Self {
        self.r = r;
        self
    }

    pub fn with_step(mut self, mode: StepMode) -> Self {
        self.step_mode = mode;
        self
    }

    pub fn with_weight(mut self, weight: JacobiWeight) -> Self {
        self.weight = Some(weight);
        self
    }

    pub fn with_h_grid(mut self, h_grid: usize) -> Self {
        self.h_grid = h_grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Parameter("difference order k must be >= 1".into()));
        }
        if self.h_grid < 8 {
            return Err(Error::Parameter("h_grid must be >= 8".into()));
        }
        if self.x_grid < 3 {
            return Err(Error::Parameter("x_grid must be >= 3".into()));
        }
        if !(self.p > 0.0) {
            return Err(Error::Parameter(format!("p = {} must be positive", self.p)));
        }
        if let Some(w) = self.weight {
            if !in_jp(w.alpha, w.beta, self.p) {
                return Err(Error::Parameter(format!(
                    "(alpha, beta) = ({}, {}) not in J_p for p = {}",
                    w.alpha, w.beta, self.p
                )));
            }
        }
        Ok(())
    }
}

/// A partition `-1 = x₀ ≤ … ≤ x_N = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPartition {
    points: Vec<f64>,
}

impl MeshPartition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Parameter("mesh needs N >= 2 intervals".into()));
        }
        if points[0] != -1.0 || points[points.len() - 1] != 1.0 {
            return Err(Error::Parameter("mesh must start at -1 and end at 1".into()));
        }
        if points.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Parameter("mesh points must be nondecreasing".into()));
        }
        Ok(MeshPartition { points })
    }

    /// The Chebyshev partition with `n` intervals.
    pub fn chebyshev(n: usize) -> Result<Self> {
        Self::new(chebyshev_knots(n)?.knots().to_vec())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Length of the largest interval.
    pub fn mesh_norm(&self) -> f64 {
        mesh_norm(&self.points)
    }

    /// Designated neighbours `(x_{j-2}, x_{j+1})` of index `j`, if both exist.
    pub fn neighbors(&self, j: usize) -> Option<(f64, f64)> {
        if j >= 2 && j + 1 < self.points.len() {
            Some((self.points[j - 2], self.points[j + 1]))
        } else {
            None
        }
    }
}

fn binomial(k: usize, i: usize) -> f64 {
    (0..i).fold(1.0, |acc, j| acc * (k - j) as f64 / (j + 1) as f64)
}

/// Stencil width at `x`.
#[inline]
fn step_at(x: f64, h: f64, mode: StepMode) -> f64 {
    match mode {
        StepMode::Constant => h,
        StepMode::Phi => h * phi(x),
    }
}

/// `Σ C(k,i)(-1)^{k-i} f(x + (2i-k)H/2)` without the admissibility test.
fn raw_difference<F: Fn(f64) -> f64>(f: &F, x: f64, step: f64, k: usize) -> f64 {
    (0..=k)
        .map(|i| {
            let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
            let arg = (x + (2.0 * i as f64 - k as f64) * 0.5 * step).clamp(-1.0, 1.0);
            sign * binomial(k, i) * f(arg)
        })
        .sum()
}

/// The `k`-th symmetric difference; `0` when the stencil leaves `[-1, 1]`.
pub fn symmetric_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64, k: usize, mode: StepMode) -> f64 {
    let step = step_at(x, h, mode);
    let half = 0.5 * k as f64 * step;
    if !(x.abs() <= 1.0) || x + half > 1.0 + 1e-14 || x - half < -1.0 - 1e-14 {
        return 0.0;
    }
    raw_difference(&f, x, step, k)
}

/// Half-width `x_b` of the admissible set `[-x_b, x_b]`, if non-empty.
///
/// For the φ-step, `x + c·φ(x) ≤ 1` with `c = kh/2` holds exactly for
/// `x ≤ (1 - c²)/(1 + c²)`.
pub fn admissible_half_width(h: f64, k: usize, mode: StepMode) -> Option<f64> {
    let c = 0.5 * k as f64 * h;
    let xb = match mode {
        StepMode::Constant => 1.0 - c,
        StepMode::Phi => (1.0 - c * c) / (1.0 + c * c),
    };
    (xb >= 0.0).then_some(xb)
}

/// `‖w φ^r Δ^k_h(f, ·)‖_p` over the admissible set.
pub fn difference_norm<F: Fn(f64) -> f64>(f: &F, spec: &ModulusSpec, h: f64) -> f64 {
    let Some(xb) = admissible_half_width(h, spec.k, spec.step_mode) else {
        return 0.0;
    };
    let weight = spec.weight.unwrap_or_default();
    let integrand = |x: f64| -> f64 {
        let mut v = raw_difference(f, x, step_at(x, h, spec.step_mode), spec.k);
        if spec.r > 0 {
            v *= phi(x).powi(spec.r as i32);
        }
        if !weight.is_unit() {
            v *= weight.eval(x);
        }
        v.abs()
    };
    if spec.p.is_infinite() {
        chebyshev_grid(spec.x_grid)
            .into_iter()
            .map(|u| integrand(xb * u))
            .fold(0.0, f64::max)
    } else {
        if xb == 0.0 {
            return 0.0;
        }
        let rule = cached_rule(8, 0.0, 0.0).expect("8-point Gauss-Legendre rule");
        let breaks = graded_breaks(xb);
        let mut s = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let jac = 0.5 * (b - a);
            for (u, q) in rule.nodes.iter().zip(&rule.weights) {
                let x = 0.5 * (a + b) + jac * u;
                s += q * jac * integrand(x).powf(spec.p);
            }
        }
        s.powf(1.0 / spec.p)
    }
}

/// Panel breakpoints on `[-xb, xb]`, uniform in the middle and geometrically
/// graded towards both ends.
fn graded_breaks(xb: f64) -> Vec<f64> {
    let mut half = Vec::new();
    for i in 0..=8 {
        half.push(0.5 * xb * i as f64 / 8.0);
    }
    for j in 2..=24 {
        half.push(xb * (1.0 - 0.5f64.powi(j)));
    }
    half.push(xb);
    let mut breaks: Vec<f64> = half.iter().rev().map(|x| -x).collect();
    breaks.extend(half.iter().skip(1));
    breaks
}

/// Smallest lattice step; below it the lattice is abandoned for a relative
/// grid (only reached when `t` itself is tiny).
const STEP_FLOOR: f64 = 1.0 / 4096.0;

/// Step samples: `t` itself plus the fixed lattice `2^{-j/m}`, `m = h_grid/8`,
/// on `[STEP_FLOOR, t)`. The lattice does not depend on `t`, so grids for
/// `t₁ < t₂` share every point below `t₁`, and doubling `h_grid` refines the
/// lattice in place.
pub fn step_grid(t: f64, h_grid: usize) -> Vec<f64> {
    let m = (h_grid / 8).max(1) as f64;
    let mut out = vec![t];
    if t <= STEP_FLOOR {
        out.extend((1..h_grid).map(|j| t * 1000f64.powf(-(j as f64) / (h_grid - 1) as f64)));
        return out;
    }
    // first lattice index strictly below t
    let mut j = (-(t.log2()) * m).floor() as i64;
    loop {
        let h = 2f64.powf(-(j as f64) / m);
        if h < STEP_FLOOR {
            break;
        }
        if h < t {
            out.push(h);
        }
        j += 1;
    }
    out
}

/// Sup of the difference norm over the step grid, then a golden-section
/// search over the two cells around the best sample, since the norm can peak
/// between samples.
fn sup_over_steps<F: Fn(f64) -> f64>(f: &F, spec: &ModulusSpec, t: f64) -> f64 {
    let mut steps = step_grid(t, spec.h_grid);
    steps.sort_by(f64::total_cmp);
    let values: Vec<f64> = steps.iter().map(|&h| difference_norm(f, spec, h)).collect();
    let (best, &top) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("step grid is never empty");
    if top == 0.0 {
        return 0.0;
    }
    let lo = if best == 0 { 0.5 * steps[0] } else { steps[best - 1] };
    let hi = steps.get(best + 1).copied().unwrap_or(t);
    let (_, refined) = golden_max(&|h| difference_norm(f, spec, h), lo, hi, 48);
    top.max(refined)
}

/// `ω_k(f, δ)_p`: constant step, unit weight, `r = 0`.
pub fn classical_modulus<F: Fn(f64) -> f64>(f: F, k: usize, delta: f64, p: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta = {delta} must be positive")));
    }
    let spec = ModulusSpec::new(k, p).with_step(StepMode::Constant);
    spec.validate()?;
    Ok(sup_over_steps(&f, &spec, delta))
}

/// `ω^φ_{k,r}(f, t)_p = sup_{0<h≤t} ‖w φ^r Δ^k(f, ·)‖_p` with the spec's step
/// mode (and weight, when set).
pub fn dt_modulus<F: Fn(f64) -> f64>(f: F, spec: &ModulusSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("t = {t} must be positive")));
    }
    spec.validate()?;
    Ok(sup_over_steps(&f, spec, t))
}

/// The weighted modulus at `t = ‖θ_N‖` with the φ-step; `f_r` is the `r`-th
/// derivative of the function of interest.
///
/// Requires `‖θ_N‖ < 2/k`.
pub fn weighted_dt_modulus<F: Fn(f64) -> f64>(f_r: F, spec: &ModulusSpec, mesh: &MeshPartition) -> Result<f64> {
    if spec.weight.is_none() {
        return Err(Error::Parameter("weighted modulus needs a Jacobi weight".into()));
    }
    let t = mesh.mesh_norm();
    if !(t < 2.0 / spec.k as f64) {
        return Err(Error::Parameter(format!(
            "mesh norm {t} must be below 2/{} for order {}",
            spec.k, spec.k
        )));
    }
    let spec = spec.with_step(StepMode::Phi);
    dt_modulus(f_r, &spec, t)
}

/// The modulus at `h_grid` and at `2·h_grid`; their gap measures how far the
/// step grid is from converged.
pub fn dt_modulus_convergence<F: Fn(f64) -> f64>(f: F, spec: &ModulusSpec, t: f64) -> Result<(f64, f64)> {
    let coarse = dt_modulus(&f, spec, t)?;
    let fine = dt_modulus(&f, &spec.with_h_grid(2 * spec.h_grid), t)?;
    Ok((coarse, fine))
}
