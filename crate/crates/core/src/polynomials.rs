//! Chebyshev-basis polynomial algebra, Chebyshev partitions and C⁰/C¹
//! piecewise polynomials.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking that an abscissa lies in `[-1, 1]`.
const DOMAIN_SLACK: f64 = 4.0 * f64::EPSILON;

/// A closed interval `[a, b]` together with the affine map `ℓ: [-1, 1] → [a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { a: -1.0, b: 1.0 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Parameter(format!("invalid interval [{a}, {b}]")));
        }
        Ok(Interval { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// `ℓ(u)`, mapping `[-1, 1]` onto `[a, b]`.
    #[inline]
    pub fn from_unit(&self, u: f64) -> f64 {
        0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * u
    }

    /// `ℓ⁻¹(x)`, mapping `[a, b]` onto `[-1, 1]`.
    #[inline]
    pub fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }

    /// `dx/du` of the affine map.
    #[inline]
    pub fn jacobian(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn is_unit(&self) -> bool {
        self.a == -1.0 && self.b == 1.0
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::UNIT
    }
}

/// An algebraic polynomial `Σ c_j T_j(x)` in the Chebyshev basis.
///
/// `coeffs[j]` multiplies `T_j`; the degree bound is `coeffs.len() - 1`.
/// Trailing zeros are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevPolynomial {
    coeffs: Vec<f64>,
}

impl ChebyshevPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::Parameter(format!("non-finite coefficient {bad}")));
        }
        if coeffs.is_empty() {
            return Ok(Self::zero());
        }
        Ok(ChebyshevPolynomial { coeffs })
    }

    pub fn zero() -> Self {
        ChebyshevPolynomial { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        ChebyshevPolynomial { coeffs: vec![c] }
    }

    /// The basis polynomial `T_j`.
    pub fn basis(j: usize) -> Self {
        let mut coeffs = vec![0.0; j + 1];
        coeffs[j] = 1.0;
        ChebyshevPolynomial { coeffs }
    }

    /// Builds a polynomial from monomial coefficients `a_0 + a_1 x + …`.
    pub fn from_power(power: &[f64]) -> Result<Self> {
        if power.is_empty() {
            return Ok(Self::zero());
        }
        // Horner in Chebyshev arithmetic: p ← p·x + a_k.
        let mut acc = vec![power[power.len() - 1]];
        for &a in power.iter().rev().skip(1) {
            let mut next = times_x(&acc);
            next[0] += a;
            acc = next;
        }
        Self::new(acc)
    }

    /// Monomial coefficients of the same polynomial.
    pub fn to_power(&self) -> Vec<f64> {
        let d = self.coeffs.len();
        let mut out = vec![0.0; d];
        // Power-basis coefficients of T_{j-1}, T_j.
        let mut prev = vec![0.0; d];
        let mut cur = vec![0.0; d];
        cur[0] = 1.0;
        for (j, &c) in self.coeffs.iter().enumerate() {
            if j == 1 {
                prev = cur.clone();
                cur = vec![0.0; d];
                cur[1] = 1.0;
            } else if j > 1 {
                let mut next = vec![0.0; d];
                for k in 0..d {
                    let shifted = if k > 0 { 2.0 * cur[k - 1] } else { 0.0 };
                    next[k] = shifted - prev[k];
                }
                prev = std::mem::replace(&mut cur, next);
            }
            for k in 0..d {
                out[k] += c * cur[k];
            }
        }
        out
    }

    /// Chebyshev interpolant of `f` of the given degree at Chebyshev–Lobatto points.
    pub fn interpolate<F: Fn(f64) -> f64>(f: F, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Self::new(vec![f(0.0)]);
        }
        let n = degree;
        let values: Vec<f64> = (0..=n).map(|k| f((PI * k as f64 / n as f64).cos())).collect();
        let mut coeffs = vec![0.0; n + 1];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let mut s = 0.0;
            for (k, v) in values.iter().enumerate() {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                s += w * v * (PI * (j * k) as f64 / n as f64).cos();
            }
            *c = 2.0 * s / n as f64;
        }
        coeffs[0] *= 0.5;
        coeffs[n] *= 0.5;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Degree bound `d = len - 1`.
    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Actual degree, ignoring exactly-zero trailing coefficients.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// Clenshaw evaluation; errors outside `[-1, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x.abs() <= 1.0 + DOMAIN_SLACK) {
            return Err(Error::Domain(format!("x = {x} outside [-1, 1]")));
        }
        Ok(self.eval_unchecked(x.clamp(-1.0, 1.0)))
    }

    /// Clenshaw evaluation without a domain check.
    #[inline]
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        let c = &self.coeffs;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &cj in c.iter().skip(1).rev() {
            let b0 = cj + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        c[0] + x * b1 - b2
    }

    /// Exact derivative via the backward coefficient recurrence.
    pub fn derivative(&self) -> Self {
        let d = self.coeffs.len() - 1;
        if d == 0 {
            return Self::zero();
        }
        let mut out = vec![0.0; d + 1];
        for k in (1..=d).rev() {
            out[k - 1] = out.get(k + 1).copied().unwrap_or(0.0) + 2.0 * k as f64 * self.coeffs[k];
        }
        out[0] *= 0.5;
        out.truncate(d);
        ChebyshevPolynomial { coeffs: out }
    }

    pub fn nth_derivative(&self, order: usize) -> Self {
        (0..order).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, s: f64) -> Self {
        ChebyshevPolynomial {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|j| self.coeffs.get(j).unwrap_or(&0.0) + other.coeffs.get(j).unwrap_or(&0.0))
            .collect();
        ChebyshevPolynomial { coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Coefficients with trailing entries below `rel · max|c|` removed.
    fn trimmed(&self, rel: f64) -> Vec<f64> {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c[c.len() - 1].abs() <= rel * scale {
            c.pop();
        }
        c
    }

    /// Real roots in `[-1, 1]`, sorted, from the colleague-matrix eigenvalues
    /// polished by Newton steps.
    pub fn roots_in_unit(&self) -> Vec<f64> {
        let c = self.trimmed(1e-14);
        let n = c.len() - 1;
        if n == 0 {
            return Vec::new();
        }
        let mut candidates = Vec::new();
        if n == 1 {
            candidates.push(-c[0] / c[1]);
        } else {
            let mut m = DMatrix::<f64>::zeros(n, n);
            m[(0, 1)] = 1.0;
            for i in 1..n {
                m[(i, i - 1)] = 0.5;
                if i + 1 < n {
                    m[(i, i + 1)] = 0.5;
                }
            }
            for j in 0..n {
                m[(n - 1, j)] -= c[j] / (2.0 * c[n]);
            }
            balance(&mut m);
            match nalgebra::Schur::try_new(m, f64::EPSILON, 100 * n) {
                Some(schur) => {
                    for z in schur.complex_eigenvalues().iter() {
                        if z.im.abs() <= 1e-7 * (1.0 + z.re.abs()) && z.re.abs() <= 1.0 + 1e-7 {
                            candidates.push(z.re);
                        }
                    }
                }
                // QR iteration stalled; fall back to bracketing on a fine grid.
                None => candidates = bracketed_roots(&c, 40 * n + 200),
            }
        }
        let poly = ChebyshevPolynomial { coeffs: c };
        let dpoly = poly.derivative();
        let mut roots: Vec<f64> = candidates
            .into_iter()
            .filter(|x| x.abs() <= 1.0 + 1e-7)
            .map(|mut x| {
                for _ in 0..4 {
                    let d = dpoly.eval_unchecked(x);
                    if d == 0.0 {
                        break;
                    }
                    let step = poly.eval_unchecked(x) / d;
                    if !step.is_finite() || step.abs() > 1e-3 {
                        break;
                    }
                    x -= step;
                }
                x.clamp(-1.0, 1.0)
            })
            .collect();
        roots.sort_by(|a, b| a.total_cmp(b));
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        roots
    }

    /// Exact extrema of the polynomial over `[a, b] ⊂ [-1, 1]`, located among the
    /// endpoints and the real critical points.
    pub fn extrema_on(&self, a: f64, b: f64) -> Extrema {
        let critical = self.derivative().roots_in_unit();
        self.extrema_with_critical(&critical, a, b)
    }

    /// As [`extrema_on`](Self::extrema_on), with precomputed critical points.
    pub fn extrema_with_critical(&self, critical: &[f64], a: f64, b: f64) -> Extrema {
        let mut ext = Extrema {
            min: f64::INFINITY,
            argmin: a,
            max: f64::NEG_INFINITY,
            argmax: a,
        };
        let points = [a, b]
            .into_iter()
            .chain(critical.iter().copied().filter(|&x| x > a && x < b));
        for x in points {
            let v = self.eval_unchecked(x);
            if v < ext.min {
                ext.min = v;
                ext.argmin = x;
            }
            if v > ext.max {
                ext.max = v;
                ext.argmax = x;
            }
        }
        ext
    }

    /// The polynomial `u ↦ p(ℓ(u))` where `ℓ` maps `[-1, 1]` onto `[a, b]`.
    pub fn restrict(&self, a: f64, b: f64) -> Self {
        let iv = Interval { a, b };
        let d = self.degree_bound();
        Self::interpolate(|u| self.eval_unchecked(iv.from_unit(u)), d)
            .expect("finite interpolation of a finite polynomial")
    }
}

/// Balancing by powers of two; the eigenvalues are unchanged.
fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut c, mut r) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / RADIX {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            while c > r * RADIX {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Roots of a Chebyshev series in `[-1, 1]` from sign changes on a
/// Chebyshev grid, refined by bisection.
fn bracketed_roots(c: &[f64], samples: usize) -> Vec<f64> {
    let poly = ChebyshevPolynomial { coeffs: c.to_vec() };
    let grid: Vec<f64> = (0..=samples)
        .map(|k| -(std::f64::consts::PI * k as f64 / samples as f64).cos())
        .collect();
    let mut out = Vec::new();
    let mut prev = (grid[0], poly.eval_unchecked(grid[0]));
    if prev.1 == 0.0 {
        out.push(prev.0);
    }
    for &x in &grid[1..] {
        let v = poly.eval_unchecked(x);
        if v == 0.0 {
            out.push(x);
        } else if prev.1 != 0.0 && v.signum() != prev.1.signum() {
            let (mut a, mut b) = (prev.0, x);
            loop {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if poly.eval_unchecked(mid).signum() == prev.1.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = (x, v);
    }
    out
}

/// Minimum and maximum of a polynomial on an interval with their locations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

/// `x · Σ c_j T_j` in Chebyshev coefficients.
fn times_x(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len() + 1];
    for (j, &cj) in c.iter().enumerate() {
        if j == 0 {
            out[1] += cj;
        } else {
            out[j + 1] += 0.5 * cj;
            out[j - 1] += 0.5 * cj;
        }
    }
    out
}

/// Knots `t_j = -cos(jπ/n)`, `0 ≤ j ≤ n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevPartition {
    n: usize,
    knots: Vec<f64>,
}

impl ChebyshevPartition {
    pub fn new(n: usize) -> Result<Self> {
        chebyshev_knots(n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Largest knot spacing.
    pub fn mesh_norm(&self) -> f64 {
        mesh_norm(&self.knots)
    }
}

/// The Chebyshev partition of `[-1, 1]` with `n` intervals.
///
/// Computed as `sin((2j - n)π / 2n)`, which equals `-cos(jπ/n)` and is exactly
/// antisymmetric in floating point.
pub fn chebyshev_knots(n: usize) -> Result<ChebyshevPartition> {
    if n == 0 {
        return Err(Error::Domain("Chebyshev partition needs n >= 1".into()));
    }
    let knots = (0..=n)
        .map(|j| {
            let num = 2 * j as i64 - n as i64;
            if num == 0 {
                0.0
            } else {
                (PI * num as f64 / (2 * n) as f64).sin()
            }
        })
        .collect();
    Ok(ChebyshevPartition { n, knots })
}

pub(crate) fn mesh_norm(points: &[f64]) -> f64 {
    points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// Smoothness class of a piecewise polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Continuity {
    C0,
    C1,
}

/// Result of checking the interior-knot matching conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityReport {
    pub c0: bool,
    pub c1: bool,
    pub max_value_jump: f64,
    pub max_derivative_jump: f64,
}

/// A piecewise polynomial over an increasing knot sequence.
///
/// Each piece is stored in the local variable of its interval, mapped onto
/// `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    knots: Vec<f64>,
    pieces: Vec<ChebyshevPolynomial>,
    continuity: Continuity,
}

impl PiecewisePolynomial {
    pub fn new(knots: Vec<f64>, pieces: Vec<ChebyshevPolynomial>, continuity: Continuity) -> Result<Self> {
        if knots.len() < 2 || pieces.len() != knots.len() - 1 {
            return Err(Error::Parameter(format!(
                "{} pieces for {} knots",
                pieces.len(),
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Parameter("knots must be strictly increasing".into()));
        }
        Ok(PiecewisePolynomial {
            knots,
            pieces,
            continuity,
        })
    }

    pub fn on_partition(
        partition: &ChebyshevPartition,
        pieces: Vec<ChebyshevPolynomial>,
        continuity: Continuity,
    ) -> Result<Self> {
        Self::new(partition.knots().to_vec(), pieces, continuity)
    }

    /// Splits a global polynomial on `[-1, 1]` at the given knots.
    pub fn from_global(p: &ChebyshevPolynomial, knots: Vec<f64>, continuity: Continuity) -> Result<Self> {
        let pieces = knots.windows(2).map(|w| p.restrict(w[0], w[1])).collect();
        Self::new(knots, pieces, continuity)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn pieces(&self) -> &[ChebyshevPolynomial] {
        &self.pieces
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn piece_interval(&self, j: usize) -> Interval {
        Interval {
            a: self.knots[j],
            b: self.knots[j + 1],
        }
    }

    /// Index of the piece containing `x` (right-continuous, last piece closed).
    pub fn locate(&self, x: f64) -> usize {
        let k = self.knots.partition_point(|&t| t <= x);
        k.saturating_sub(1).min(self.pieces.len() - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let j = self.locate(x);
        let iv = self.piece_interval(j);
        self.pieces[j].eval_unchecked(iv.to_unit(x))
    }

    /// `order`-th derivative in the global variable.
    pub fn eval_derivative(&self, x: f64, order: usize) -> f64 {
        let j = self.locate(x);
        self.piece_derivative_at(j, x, order)
    }

    fn piece_derivative_at(&self, j: usize, x: f64, order: usize) -> f64 {
        let iv = self.piece_interval(j);
        let scale = (1.0 / iv.jacobian()).powi(order as i32);
        self.pieces[j].nth_derivative(order).eval_unchecked(iv.to_unit(x)) * scale
    }

    /// Checks value and first-derivative matching at every interior knot.
    ///
    /// With `tol = None`, each knot uses `1e-9 · (1 + max |value at knot|)`.
    pub fn continuity_check(&self, tol: Option<f64>) -> ContinuityReport {
        let mut report = ContinuityReport {
            c0: true,
            c1: true,
            max_value_jump: 0.0,
            max_derivative_jump: 0.0,
        };
        for j in 0..self.pieces.len() - 1 {
            let left = self.pieces[j].eval_unchecked(1.0);
            let right = self.pieces[j + 1].eval_unchecked(-1.0);
            let t = tol.unwrap_or(1e-9 * (1.0 + left.abs().max(right.abs())));
            let jump = (left - right).abs();
            report.max_value_jump = report.max_value_jump.max(jump);
            if jump > t {
                report.c0 = false;
            }
            let x = self.knots[j + 1];
            let dl = self.piece_derivative_at(j, x, 1);
            let dr = self.piece_derivative_at(j + 1, x, 1);
            let td = tol.unwrap_or(1e-9 * (1.0 + dl.abs().max(dr.abs())));
            let djump = (dl - dr).abs();
            report.max_derivative_jump = report.max_derivative_jump.max(djump);
            if djump > td {
                report.c1 = false;
            }
        }
        report.c1 &= report.c0;
        report
    }

    /// Whether the declared continuity class holds.
    pub fn satisfies_declared(&self, tol: Option<f64>) -> bool {
        let r = self.continuity_check(tol);
        match self.continuity {
            Continuity::C0 => r.c0,
            Continuity::C1 => r.c1,
        }
    }
}
