//! Degrees of best unconstrained, convex and coconvex approximation.
//!
//! Polynomials are represented in the unit variable `u ∈ [-1, 1]`; on a
//! general interval the target is sampled at `ℓ(u)`. Inflection points are
//! given in the unit variable as well.

mod kernels;
mod remez;
mod spline;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::Func;
use crate::polynomials::ChebyshevPolynomial;
use crate::shape::{shape_certificate, InflectionPartition, Orientation, Segment};
use crate::weighted_spaces::{chebyshev_grid, discretize, weighted_norm_estimate, WeightedNormParams};

pub use spline::{best_spline, piecewise_weighted_norm, SplineOptions, SplineSolution};

/// Grid size of the discrete minimax problem (odd, so the grid contains 0).
pub const MINIMAX_GRID: usize = 4097;
pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;
/// Relative tolerance of the exact shape certificate.
pub const CERTIFICATE_TOL: f64 = 1e-8;
/// Grid doublings before a constrained solve is declared uncertified.
pub const MAX_ROUNDS: usize = 3;
/// Cutting-plane passes per grid size.
const MAX_CUTS: usize = 12;
const MIN_CONSTRAINT_GRID: usize = 64;

/// Shape restriction on the approximant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum ShapeConstraint {
    #[default]
    None,
    Convex,
    Coconvex(InflectionPartition),
}

impl ShapeConstraint {
    /// The inflection partition the constraint enforces (empty for convexity).
    pub fn partition(&self) -> Option<InflectionPartition> {
        match self {
            ShapeConstraint::None => None,
            ShapeConstraint::Convex => Some(InflectionPartition::empty()),
            ShapeConstraint::Coconvex(y) => Some(y.clone()),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, ShapeConstraint::None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// Iterative solver hit its iteration cap; the best iterate is returned.
    Degraded,
    /// The exact shape check still fails after all refinement rounds.
    Uncertified,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "OPTIMAL",
            SolveStatus::Degraded => "DEGRADED",
            SolveStatus::Uncertified => "UNCERTIFIED",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApproxProblem {
    pub target: Func,
    /// Dimension of the polynomial space: degree at most `n - 1`.
    pub n: usize,
    pub norm: WeightedNormParams,
    pub constraint: ShapeConstraint,
    /// Sample count per segment for the `p''` sign constraints; `None` means
    /// `max(4n, 64)`.
    pub constraint_grid: Option<usize>,
    pub solver_tol: f64,
}

impl ApproxProblem {
    pub fn new(target: Func, n: usize, norm: WeightedNormParams) -> Self {
        ApproxProblem {
            target,
            n,
            norm,
            constraint: ShapeConstraint::None,
            constraint_grid: None,
            solver_tol: DEFAULT_SOLVER_TOL,
        }
    }

    pub fn with_constraint(mut self, constraint: ShapeConstraint) -> Self {
        self.constraint = constraint;
        self
    }

    pub fn with_constraint_grid(mut self, m: usize) -> Self {
        self.constraint_grid = Some(m);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.solver_tol = tol;
        self
    }

    pub fn effective_grid(&self) -> usize {
        self.constraint_grid.unwrap_or(4 * self.n).max(MIN_CONSTRAINT_GRID)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        self.norm.validate()?;
        if !(self.norm.p >= 1.0) {
            return Err(Error::Parameter(format!(
                "solvers require p >= 1 (got {}); the objective is not convex below 1",
                self.norm.p
            )));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::Parameter("solver_tol must be positive".into()));
        }
        let support = if self.norm.p.is_infinite() {
            MINIMAX_GRID
        } else {
            self.norm.quadrature_order
        };
        if self.n > support {
            return Err(Error::Parameter(format!(
                "n = {} exceeds the {support} discretization nodes",
                self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ApproxSolution {
    pub polynomial: ChebyshevPolynomial,
    /// `‖w (f − p)‖_p` recomputed by the norm module.
    pub error: f64,
    pub discretization_error_estimate: f64,
    /// Exact minimum of the signed `p''` on each segment (empty when
    /// unconstrained).
    pub constraint_residual: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl ApproxSolution {
    pub fn worst_residual(&self) -> f64 {
        self.constraint_residual.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn best_unconstrained(prob: &ApproxProblem) -> Result<ApproxSolution> {
    if !prob.constraint.is_none() {
        return Err(Error::Parameter("best_unconstrained requires no shape constraint".into()));
    }
    solve(prob)
}

pub fn best_convex(prob: &ApproxProblem) -> Result<ApproxSolution> {
    if prob.constraint != ShapeConstraint::Convex {
        return Err(Error::Parameter("best_convex requires the convex constraint".into()));
    }
    solve(prob)
}

pub fn best_coconvex(prob: &ApproxProblem) -> Result<ApproxSolution> {
    if !matches!(prob.constraint, ShapeConstraint::Coconvex(_)) {
        return Err(Error::Parameter("best_coconvex requires an inflection partition".into()));
    }
    solve(prob)
}

/// Dispatches on the problem's constraint.
pub fn best_approximation(prob: &ApproxProblem) -> Result<ApproxSolution> {
    solve(prob)
}

fn build_model(prob: &ApproxProblem) -> Result<kernels::Model> {
    let n = prob.n;
    let iv = prob.norm.interval;
    let (nodes, mult, q) = if prob.norm.p.is_infinite() {
        let grid = chebyshev_grid(MINIMAX_GRID);
        let mult: Vec<f64> = grid.iter().map(|&u| prob.norm.weight.eval(u)).collect();
        let q = vec![1.0; grid.len()];
        (grid, mult, q)
    } else {
        let d = discretize(&prob.norm, prob.norm.quadrature_order)?;
        (d.unit_nodes, d.multipliers, d.weights)
    };
    let rows = nodes.len();
    let mut a = DMatrix::zeros(rows, n);
    let mut b = DVector::zeros(rows);
    for (i, &u) in nodes.iter().enumerate() {
        let fx = prob.target.eval(iv.from_unit(u));
        if !fx.is_finite() {
            return Err(Error::Evaluation(format!("target is not finite at x = {}", iv.from_unit(u))));
        }
        let m = mult[i];
        b[i] = m * fx;
        // T_0..T_{n-1} by the three-term recurrence
        let (mut t0, mut t1) = (1.0, u);
        for j in 0..n {
            let tj = match j {
                0 => 1.0,
                1 => u,
                _ => {
                    let t2 = 2.0 * u * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                    t2
                }
            };
            a[(i, j)] = m * tj;
        }
    }
    Ok(kernels::Model {
        a,
        b,
        q: DVector::from_vec(q),
    })
}

/// Points `(ξ, sign)` for the sampled `sign · p''(ξ) ≥ 0` constraints.
fn constraint_points(segments: &[Segment], m: usize) -> Vec<(f64, f64)> {
    let t = chebyshev_grid(m);
    let mut pts = Vec::with_capacity(segments.len() * m);
    for seg in segments {
        for &ti in &t {
            let x = seg.lo + 0.5 * (seg.hi - seg.lo) * (1.0 + ti);
            pts.push((x.clamp(seg.lo, seg.hi), seg.sign));
        }
    }
    pts
}

/// Rows of `sign · T_j''(ξ)`, each scaled to unit max-norm.
fn constraint_matrix(points: &[(f64, f64)], second: &[ChebyshevPolynomial]) -> DMatrix<f64> {
    let n = second.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for &(x, s) in points {
        let row: Vec<f64> = second.iter().map(|d| s * d.eval_unchecked(x)).collect();
        let scale = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if scale > 0.0 {
            rows.push(row.into_iter().map(|v| v / scale).collect());
        }
    }
    DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

fn solve(prob: &ApproxProblem) -> Result<ApproxSolution> {
    prob.validate()?;
    let model = build_model(prob)?;
    let p = prob.norm.p;
    let n = prob.n;

    let Some(y) = prob.constraint.partition() else {
        let mut fit = kernels::fit(&model, p, &DMatrix::zeros(0, n), prob.solver_tol)?;
        if p.is_infinite() {
            let iv = prob.norm.interval;
            let f = |u: f64| prob.target.eval(iv.from_unit(u));
            let start: Vec<f64> = fit.coeffs.iter().copied().collect();
            if let Some(c) = remez::polish(&f, prob.norm.weight, &start, MINIMAX_GRID) {
                fit.coeffs = DVector::from_vec(c);
            }
        }
        let status = if fit.converged { SolveStatus::Optimal } else { SolveStatus::Degraded };
        return finish(prob, fit, Vec::new(), status);
    };

    let second: Vec<ChebyshevPolynomial> = (0..n).map(|j| ChebyshevPolynomial::basis(j).nth_derivative(2)).collect();
    let segments = y.segments_oriented(Orientation::RightmostConvex);
    let mut m = prob.effective_grid();
    let mut cuts: Vec<(f64, f64)> = Vec::new();
    let mut iterations = 0;
    let mut last = None;
    for _round in 0..MAX_ROUNDS {
        let base = constraint_points(&segments, m);
        for _ in 0..MAX_CUTS {
            let mut pts = base.clone();
            pts.extend_from_slice(&cuts);
            let g = constraint_matrix(&pts, &second);
            let fit = kernels::fit(&model, p, &g, prob.solver_tol)?;
            iterations += fit.iterations;
            let poly = ChebyshevPolynomial::new(fit.coeffs.iter().copied().collect())?;
            let cert = shape_certificate(&poly, &y, Orientation::RightmostConvex);
            let residual: Vec<f64> = cert.segments.iter().map(|s| s.min).collect();
            if cert.passes(CERTIFICATE_TOL) {
                let status = if fit.converged { SolveStatus::Optimal } else { SolveStatus::Degraded };
                let mut sol = finish(prob, fit, residual, status)?;
                sol.iterations = iterations;
                return Ok(sol);
            }
            let new_cuts: Vec<(f64, f64)> = cert
                .segments
                .iter()
                .filter(|s| s.min < -CERTIFICATE_TOL * s.scale)
                .map(|s| (s.argmin, s.segment.sign))
                .filter(|c| !cuts.contains(c))
                .collect();
            last = Some((fit, residual));
            if new_cuts.is_empty() {
                break;
            }
            cuts.extend(new_cuts);
        }
        m *= 2;
    }
    let (fit, residual) = last.expect("at least one solve ran");
    let mut sol = finish(prob, fit, residual, SolveStatus::Uncertified)?;
    sol.iterations = iterations;
    Ok(sol)
}

fn finish(prob: &ApproxProblem, fit: kernels::Fit, residual: Vec<f64>, status: SolveStatus) -> Result<ApproxSolution> {
    let polynomial = ChebyshevPolynomial::new(fit.coeffs.iter().copied().collect())?;
    let iv = prob.norm.interval;
    let target = prob.target.clone();
    let poly = polynomial.clone();
    let err_fn = move |x: f64| target.eval(x) - poly.eval_unchecked(iv.to_unit(x));
    let est = weighted_norm_estimate(&err_fn, &prob.norm)?;
    let disc = if prob.norm.p.is_infinite() {
        (est.value - fit.objective).abs()
    } else {
        est.error_estimate
    };
    Ok(ApproxSolution {
        polynomial,
        error: est.value,
        discretization_error_estimate: disc,
        constraint_residual: residual,
        iterations: fit.iterations,
        status,
    })
}
