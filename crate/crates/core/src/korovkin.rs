//! Fejér and matrix-weighted trigonometric operators, summability matrices
//! and A-statistical limits of finite sequences.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::Func;
use crate::shape::InflectionPartition;
use crate::solvers::{best_approximation, ApproxProblem, ShapeConstraint};
use crate::weighted_spaces::WeightedNormParams;

/// `a_0..a_K` and `b_0..b_K` (`b_0 = 0`) of a `2π`-periodic function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl FourierCoefficients {
    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    /// `S_m(x) = a_0/2 + Σ_{k≤m} (a_k cos kx + b_k sin kx)`.
    pub fn partial_sum(&self, m: usize, x: f64) -> f64 {
        let m = m.min(self.order());
        let mut s = 0.5 * self.a[0];
        for k in 1..=m {
            let kx = k as f64 * x;
            s += self.a[k] * kx.cos() + self.b[k] * kx.sin();
        }
        s
    }
}

/// Trapezoidal rule on `8K + 16` equispaced points of `[-π, π)`.
pub fn fourier_coeffs<F: Fn(f64) -> f64>(f: F, k_max: usize) -> FourierCoefficients {
    let m = 8 * k_max + 16;
    let h = 2.0 * PI / m as f64;
    let samples: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let x = -PI + j as f64 * h;
            (x, f(x))
        })
        .collect();
    let scale = 2.0 / m as f64;
    let mut a = vec![0.0; k_max + 1];
    let mut b = vec![0.0; k_max + 1];
    for k in 0..=k_max {
        let kf = k as f64;
        let (mut sa, mut sb) = (0.0, 0.0);
        for &(x, fx) in &samples {
            sa += fx * (kf * x).cos();
            sb += fx * (kf * x).sin();
        }
        a[k] = scale * sa;
        b[k] = if k == 0 { 0.0 } else { scale * sb };
    }
    FourierCoefficients { a, b }
}

/// `F_n(f; x) = a_0/2 + Σ_{k=1}^{n} ((n−k)/n)(a_k cos kx + b_k sin kx)` from
/// precomputed coefficients (order at least `n − 1`).
pub fn fejer_from_coeffs(c: &FourierCoefficients, n: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("Fejér index n must be at least 1".into()));
    }
    if c.order() + 1 < n {
        return Err(Error::Parameter(format!("need coefficients up to {} (have {})", n - 1, c.order())));
    }
    let nf = n as f64;
    let mut s = 0.5 * c.a[0];
    for k in 1..n {
        let kx = k as f64 * x;
        s += (nf - k as f64) / nf * (c.a[k] * kx.cos() + c.b[k] * kx.sin());
    }
    Ok(s)
}

pub fn fejer_apply<F: Fn(f64) -> f64>(f: F, n: usize, x: f64) -> Result<f64> {
    let c = fourier_coeffs(f, n.max(1));
    fejer_from_coeffs(&c, n, x)
}

/// Triangular array `λ_k^{(n)}`, `1 ≤ k ≤ n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LambdaArray {
    /// `(n − k)/n`.
    Fejer,
    Zero,
    /// Row `n − 1` holds `λ_1^{(n)} .. λ_n^{(n)}`.
    Custom(Vec<Vec<f64>>),
}

impl LambdaArray {
    pub fn get(&self, n: usize, k: usize) -> Result<f64> {
        match self {
            LambdaArray::Fejer => Ok((n as f64 - k as f64) / n as f64),
            LambdaArray::Zero => Ok(0.0),
            LambdaArray::Custom(rows) => {
                let v = rows
                    .get(n - 1)
                    .and_then(|r| r.get(k - 1))
                    .copied()
                    .ok_or_else(|| Error::Parameter(format!("lambda array has no entry ({n}, {k})")))?;
                if !v.is_finite() {
                    return Err(Error::Parameter(format!("lambda entry ({n}, {k}) is not finite")));
                }
                Ok(v)
            }
        }
    }
}

/// Whether the nodal fractions are used as displayed or replaced by
/// `cos kx` / `sin kx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TnMode {
    Literal,
    #[default]
    Reduction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub lambda: LambdaArray,
    pub x_star: f64,
    pub x_i: f64,
    pub x_sharp: f64,
}

impl Default for OperatorSpec {
    fn default() -> Self {
        OperatorSpec {
            lambda: LambdaArray::Fejer,
            x_star: -1.0,
            x_i: 0.0,
            x_sharp: 1.0,
        }
    }
}

impl OperatorSpec {
    fn check_nodes(&self) -> Result<()> {
        if self.x_star == self.x_i || self.x_i == self.x_sharp {
            return Err(Error::Parameter(
                "nodal denominators x_* - x_i and x_i - x^# must be nonzero".into(),
            ));
        }
        Ok(())
    }
}

/// `T_n(f; x)` from precomputed coefficients.
pub fn tn_from_coeffs(c: &FourierCoefficients, spec: &OperatorSpec, n: usize, x: f64, mode: TnMode) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if c.order() < n {
        return Err(Error::Parameter(format!("need coefficients up to {n} (have {})", c.order())));
    }
    if mode == TnMode::Literal {
        spec.check_nodes()?;
    }
    let mut s = 0.5 * c.a[0];
    for k in 1..=n {
        let lam = spec.lambda.get(n, k)?;
        if lam == 0.0 {
            continue;
        }
        let kx = k as f64 * x;
        let (ca, cb) = match mode {
            TnMode::Literal => (
                (kx - spec.x_sharp) / (spec.x_star - spec.x_i),
                (kx - spec.x_star) / (spec.x_i - spec.x_sharp),
            ),
            TnMode::Reduction => (kx.cos(), kx.sin()),
        };
        s += lam * (c.a[k] * ca + c.b[k] * cb);
    }
    Ok(s)
}

pub fn tn_apply<F: Fn(f64) -> f64>(f: F, spec: &OperatorSpec, n: usize, x: f64, mode: TnMode) -> Result<f64> {
    let c = fourier_coeffs(f, n);
    tn_from_coeffs(&c, spec, n, x, mode)
}

/// The test functions `1`, `(x − x^#)/(x_* − x_i)`, `(x − x_*)/(x_i − x^#)`.
pub fn korovkin_test_functions(spec: &OperatorSpec) -> Result<Vec<(String, Func)>> {
    spec.check_nodes()?;
    let (xs, xi, xh) = (spec.x_star, spec.x_i, spec.x_sharp);
    Ok(vec![
        ("f1".to_string(), Func::constant(1.0)),
        ("f2".to_string(), Func::new(move |x| (x - xh) / (xs - xi))),
        ("f3".to_string(), Func::new(move |x| (x - xs) / (xi - xh))),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MatrixKind {
    Identity,
    /// `a_{jn} = 1/(j+1)` for `n ≤ j` (zero-based).
    Cesaro,
    /// Dense rows; missing entries are zero.
    Custom(Vec<Vec<f64>>),
}

/// A nonnegative summability matrix truncated to `width × width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityMatrix {
    pub kind: MatrixKind,
    pub width: usize,
}

/// Regularity diagnostics at the truncation; nothing is assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub nonnegative: bool,
    /// `max |Σ_n a_{jn} − 1|` over the last quarter of rows.
    pub row_sum_deviation: f64,
    /// Largest single entry in the last row (column entries must vanish).
    pub max_entry_last_row: f64,
}

impl SummabilityMatrix {
    pub fn identity(width: usize) -> Self {
        SummabilityMatrix {
            kind: MatrixKind::Identity,
            width,
        }
    }

    pub fn cesaro(width: usize) -> Self {
        SummabilityMatrix {
            kind: MatrixKind::Cesaro,
            width,
        }
    }

    pub fn custom(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter("summability entries must be finite and nonnegative".into()));
        }
        let width = rows.len();
        Ok(SummabilityMatrix {
            kind: MatrixKind::Custom(rows),
            width,
        })
    }

    pub fn entry(&self, j: usize, n: usize) -> f64 {
        match &self.kind {
            MatrixKind::Identity => (j == n) as u8 as f64,
            MatrixKind::Cesaro => {
                if n <= j {
                    1.0 / (j + 1) as f64
                } else {
                    0.0
                }
            }
            MatrixKind::Custom(rows) => rows.get(j).and_then(|r| r.get(n)).copied().unwrap_or(0.0),
        }
    }

    pub fn row_sum(&self, j: usize) -> f64 {
        match &self.kind {
            MatrixKind::Identity => 1.0,
            MatrixKind::Cesaro => (j + 1) as f64 * (1.0 / (j + 1) as f64),
            MatrixKind::Custom(rows) => rows.get(j).map(|r| r.iter().take(self.width).sum()).unwrap_or(0.0),
        }
    }

    pub fn regularity(&self) -> RegularityReport {
        let nonnegative = match &self.kind {
            MatrixKind::Custom(rows) => rows.iter().flatten().all(|v| *v >= 0.0),
            _ => true,
        };
        let start = self.width - self.width / 4;
        let row_sum_deviation = (start.min(self.width.saturating_sub(1))..self.width)
            .map(|j| (self.row_sum(j) - 1.0).abs())
            .fold(0.0, f64::max);
        let last = self.width.saturating_sub(1);
        let max_entry_last_row = match &self.kind {
            MatrixKind::Identity => 1.0,
            MatrixKind::Cesaro => 1.0 / self.width as f64,
            MatrixKind::Custom(rows) => rows.get(last).map(|r| r.iter().copied().fold(0.0, f64::max)).unwrap_or(0.0),
        };
        RegularityReport {
            nonnegative,
            row_sum_deviation,
            max_entry_last_row,
        }
    }

    /// `δ_j = Σ_{n ∈ K} a_{jn}` for every row, where `K` is given by `mask`.
    pub fn densities(&self, mask: &[bool]) -> Vec<f64> {
        let w = self.width.min(mask.len());
        match &self.kind {
            MatrixKind::Identity => (0..w).map(|j| mask[j] as u8 as f64).collect(),
            MatrixKind::Cesaro => {
                let mut count = 0usize;
                (0..w)
                    .map(|j| {
                        count += mask[j] as usize;
                        count as f64 / (j + 1) as f64
                    })
                    .collect()
            }
            MatrixKind::Custom(rows) => (0..w)
                .map(|j| {
                    rows[j]
                        .iter()
                        .zip(mask)
                        .filter(|(_, &m)| m)
                        .map(|(a, _)| a)
                        .sum()
                })
                .collect(),
        }
    }
}

/// Density threshold for the tail of `δ_j`.
pub const DENSITY_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StLimitReport {
    pub verdict: Verdict,
    /// `δ_j` for every row of the truncation.
    pub densities: Vec<f64>,
    pub tail_max: f64,
    pub regularity: RegularityReport,
}

/// Finite-prefix verdict on `st_A-lim seq = L`.
///
/// ACCEPT iff `δ_j < 10⁻³` on the last eighth of the rows and the mean of
/// `δ_j` over the second half of the last quartile does not exceed the mean
/// over its first half.
pub fn st_a_limit(seq: &[f64], a: &SummabilityMatrix, limit: f64, eps: f64) -> Result<StLimitReport> {
    if a.width == 0 {
        return Err(Error::Parameter("summability matrix has zero width".into()));
    }
    if seq.len() < a.width {
        return Err(Error::Parameter(format!(
            "sequence of length {} shorter than the truncation width {}",
            seq.len(),
            a.width
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter("epsilon must be positive".into()));
    }
    let mask: Vec<bool> = seq[..a.width].iter().map(|&x| !((x - limit).abs() < eps)).collect();
    let densities = a.densities(&mask);
    let w = densities.len();
    let eighth = w - (w / 8).max(1);
    let tail_max = densities[eighth..].iter().copied().fold(0.0, f64::max);
    let q0 = w - (w / 4).max(2);
    let mid = q0 + (w - q0) / 2;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let decreasing = mean(&densities[mid..]) <= mean(&densities[q0..mid]);
    let verdict = if tail_max < DENSITY_THRESHOLD && decreasing {
        Verdict::Accept
    } else {
        Verdict::Reject
    };
    Ok(StLimitReport {
        verdict,
        densities,
        tail_max,
        regularity: a.regularity(),
    })
}

/// Plain finite-prefix convergence verdict: every term of the last eighth lies
/// within `eps` of `limit`.
pub fn ordinary_limit_verdict(seq: &[f64], limit: f64, eps: f64) -> Verdict {
    let w = seq.len();
    let start = w - (w / 8).max(1);
    if seq[start..].iter().all(|&x| (x - limit).abs() < eps) {
        Verdict::Accept
    } else {
        Verdict::Reject
    }
}

/// Joint reading of the two degree sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Joint {
    BothNull,
    NeitherNull,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceComparison {
    pub name: String,
    pub unconstrained: Vec<f64>,
    pub constrained: Vec<f64>,
    pub verdict_unconstrained: Verdict,
    pub verdict_constrained: Verdict,
    pub joint: Joint,
}

/// Degrees `𝔼_n` and `ℰ_n^{(2)}` for `n = 1..N` and their `st_A` nullity.
///
/// The family is extended by the three test functions built from `spec`.
pub fn theorem_4_2_experiment(
    family: &[(String, Func)],
    y: &InflectionPartition,
    matrix: &SummabilityMatrix,
    norm: &WeightedNormParams,
    spec: &OperatorSpec,
    n_max: usize,
    eps: f64,
) -> Result<Vec<SequenceComparison>> {
    if n_max == 0 || matrix.width > n_max {
        return Err(Error::Parameter("need 1 <= matrix width <= N".into()));
    }
    let mut all = korovkin_test_functions(spec)?;
    all.extend(family.iter().cloned());
    let constraint = if y.s() == 0 {
        ShapeConstraint::Convex
    } else {
        ShapeConstraint::Coconvex(y.clone())
    };
    let mut out = Vec::with_capacity(all.len());
    for (name, f) in all {
        let mut e = Vec::with_capacity(n_max);
        let mut e2 = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let prob = ApproxProblem::new(f.clone(), n, *norm);
            e.push(best_approximation(&prob)?.error);
            e2.push(best_approximation(&prob.with_constraint(constraint.clone()))?.error);
        }
        let v1 = st_a_limit(&e, matrix, 0.0, eps)?.verdict;
        let v2 = st_a_limit(&e2, matrix, 0.0, eps)?.verdict;
        let joint = match (v1, v2) {
            (Verdict::Accept, Verdict::Accept) => Joint::BothNull,
            (Verdict::Reject, Verdict::Reject) => Joint::NeitherNull,
            _ => Joint::Inconsistent,
        };
        out.push(SequenceComparison {
            name,
            unconstrained: e,
            constrained: e2,
            verdict_unconstrained: v1,
            verdict_constrained: v2,
            joint,
        });
    }
    Ok(out)
}
