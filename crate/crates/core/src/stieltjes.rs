//! Generalized Lebesgue–Stieltjes lower/upper sums.
//!
//! For a partition of `[a, b]` into cells `D_j` with lengths `μ_j`, and finitely
//! many nondecreasing integrators `L_i`, the sums are
//!
//! ```text
//! lower = Σ_j m_j · Π_i L_i(μ_j)      upper = Σ_j M_j · Π_i L_i(μ_j)
//! ```
//!
//! with `m_j`, `M_j` the infimum and supremum of `f` on `D_j`. The integrators
//! act on cell measures, not on coordinates. Cell bounds are estimated by
//! sampling with a local golden-section refinement around interior extrema.

use crate::error::{Error, Result};
use crate::func::Func;
use crate::weighted_spaces::golden_max;

/// Samples used to check an integrator on construction.
const INTEGRATOR_CHECK_POINTS: usize = 1000;

/// A nondecreasing, nonnegative function applied to cell measures.
#[derive(Debug, Clone)]
pub struct Integrator {
    f: Func,
}

impl Integrator {
    /// Validates monotonicity and nonnegativity on `[0, range]`.
    pub fn new(f: Func, range: f64) -> Result<Self> {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..INTEGRATOR_CHECK_POINTS {
            let x = range * i as f64 / (INTEGRATOR_CHECK_POINTS - 1) as f64;
            let v = f.eval(x);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parameter(format!("integrator value {v} at {x} is not finite and nonnegative")));
            }
            if v < prev {
                return Err(Error::Parameter(format!("integrator decreases near {x}")));
            }
            prev = v;
        }
        Ok(Integrator { f })
    }

    /// `L(μ) = μ`.
    pub fn identity() -> Self {
        Integrator { f: Func::new(|m| m) }
    }

    #[inline]
    pub fn eval(&self, measure: f64) -> f64 {
        self.f.eval(measure)
    }
}

/// Contiguous cells covering `[a, b]`, stored as breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPartition {
    breaks: Vec<f64>,
}

impl CellPartition {
    pub fn new(breaks: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::Parameter("a partition needs at least one cell".into()));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Parameter("cell breakpoints must be finite and increasing".into()));
        }
        Ok(CellPartition { breaks })
    }

    pub fn uniform(a: f64, b: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Parameter("a partition needs at least one cell".into()));
        }
        let breaks = (0..=cells)
            .map(|j| if j == cells { b } else { a + (b - a) * j as f64 / cells as f64 })
            .collect();
        Self::new(breaks)
    }

    pub fn len(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breaks.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn measures(&self) -> Vec<f64> {
        self.cells().map(|(a, b)| b - a).collect()
    }

    /// Halves the selected cells.
    pub fn refine_cells(&self, selected: &[usize]) -> Self {
        let mut breaks = Vec::with_capacity(self.breaks.len() + selected.len());
        let mut marks = vec![false; self.len()];
        for &j in selected {
            marks[j] = true;
        }
        for (j, (a, b)) in self.cells().enumerate() {
            breaks.push(a);
            if marks[j] {
                breaks.push(0.5 * (a + b));
            }
        }
        breaks.push(self.breaks[self.breaks.len() - 1]);
        CellPartition { breaks }
    }

    /// Halves every cell.
    pub fn refine(&self) -> Self {
        let all: Vec<usize> = (0..self.len()).collect();
        self.refine_cells(&all)
    }
}

/// Lower and upper sums; `lower ≤ upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LSSumPair {
    pub lower: f64,
    pub upper: f64,
}

impl LSSumPair {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

pub const DEFAULT_CELL_SAMPLES: usize = 256;

/// Estimated `(inf, sup)` of `f` on `[a, b]`.
fn cell_bounds<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, samples: usize) -> Result<(f64, f64)> {
    let n = samples.max(2);
    let h = (b - a) / (n - 1) as f64;
    let (mut lo, mut hi) = ((f64::INFINITY, 0usize), (f64::NEG_INFINITY, 0usize));
    for i in 0..n {
        let x = if i == n - 1 { b } else { a + h * i as f64 };
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("unbounded sample {v} at x = {x}")));
        }
        if v < lo.0 {
            lo = (v, i);
        }
        if v > hi.0 {
            hi = (v, i);
        }
    }
    let bracket = |i: usize| {
        let l = a + h * (i.saturating_sub(1)) as f64;
        let r = (a + h * (i + 1) as f64).min(b);
        (l, r)
    };
    let mut m = lo.0;
    let mut big_m = hi.0;
    if lo.1 != 0 && lo.1 != n - 1 {
        let (l, r) = bracket(lo.1);
        let (_, v) = golden_max(&|x| -f(x), l, r, 40);
        if v.is_finite() {
            m = m.min(-v);
        }
    }
    if hi.1 != 0 && hi.1 != n - 1 {
        let (l, r) = bracket(hi.1);
        let (_, v) = golden_max(f, l, r, 40);
        if v.is_finite() {
            big_m = big_m.max(v);
        }
    }
    Ok((m, big_m))
}

fn cell_weight(integrators: &[Integrator], measure: f64) -> f64 {
    integrators.iter().map(|l| l.eval(measure)).product()
}

/// Lower and upper sums with the default per-cell sampling.
pub fn ls_sums<F: Fn(f64) -> f64>(f: F, partition: &CellPartition, integrators: &[Integrator]) -> Result<LSSumPair> {
    ls_sums_with(f, partition, integrators, DEFAULT_CELL_SAMPLES)
}

pub fn ls_sums_with<F: Fn(f64) -> f64>(
    f: F,
    partition: &CellPartition,
    integrators: &[Integrator],
    samples: usize,
) -> Result<LSSumPair> {
    let mut pair = LSSumPair { lower: 0.0, upper: 0.0 };
    for (a, b) in partition.cells() {
        let (m, big_m) = cell_bounds(&f, a, b, samples)?;
        let w = cell_weight(integrators, b - a);
        pair.lower += m * w;
        pair.upper += big_m * w;
    }
    Ok(pair)
}

/// Outcome of refining towards the integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LsIntegral {
    /// `upper - lower ≤ tol`; the value is the midpoint.
    Integrable { value: f64, sums: LSSumPair, cells: usize },
    /// The cell budget ran out first (a verdict at this resolution).
    NotIntegrable { sums: LSSumPair, cells: usize },
}

impl LsIntegral {
    pub fn value(&self) -> Option<f64> {
        match self {
            LsIntegral::Integrable { value, .. } => Some(*value),
            LsIntegral::NotIntegrable { .. } => None,
        }
    }

    pub fn is_integrable(&self) -> bool {
        matches!(self, LsIntegral::Integrable { .. })
    }
}

/// Refinement options for [`ls_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralOptions {
    pub tol: f64,
    pub max_cells: usize,
    pub samples: usize,
}

impl IntegralOptions {
    pub fn new(tol: f64) -> Self {
        IntegralOptions {
            tol,
            max_cells: 1 << 22,
            samples: 16,
        }
    }

    pub fn with_max_cells(mut self, max_cells: usize) -> Self {
        self.max_cells = max_cells;
        self
    }
}

/// Dyadic refinement of `[a, b]` until the sums close to within `tol`.
///
/// Each round halves every cell whose gap contribution is at least a quarter
/// of the largest one.
pub fn ls_integral<F: Fn(f64) -> f64>(
    f: F,
    domain: (f64, f64),
    integrators: &[Integrator],
    options: IntegralOptions,
) -> Result<LsIntegral> {
    if !(options.tol > 0.0) {
        return Err(Error::Parameter("tolerance must be positive".into()));
    }
    let (a, b) = domain;
    // (a, b, weighted lower, weighted upper)
    let mut cells: Vec<(f64, f64, f64, f64)> = Vec::new();
    let eval_cell = |a: f64, b: f64| -> Result<(f64, f64, f64, f64)> {
        let (m, big_m) = cell_bounds(&f, a, b, options.samples)?;
        let w = cell_weight(integrators, b - a);
        Ok((a, b, m * w, big_m * w))
    };
    cells.push(eval_cell(a, b)?);
    loop {
        let sums = cells.iter().fold(LSSumPair { lower: 0.0, upper: 0.0 }, |acc, c| LSSumPair {
            lower: acc.lower + c.2,
            upper: acc.upper + c.3,
        });
        if sums.gap() <= options.tol {
            return Ok(LsIntegral::Integrable {
                value: 0.5 * (sums.lower + sums.upper),
                sums,
                cells: cells.len(),
            });
        }
        let max_gap = cells.iter().map(|c| c.3 - c.2).fold(0.0, f64::max);
        let threshold = 0.25 * max_gap;
        let splits = cells.iter().filter(|c| c.3 - c.2 >= threshold).count();
        if cells.len() + splits > options.max_cells {
            return Ok(LsIntegral::NotIntegrable {
                sums,
                cells: cells.len(),
            });
        }
        let mut next = Vec::with_capacity(cells.len() + splits);
        for c in cells {
            if c.3 - c.2 >= threshold {
                let mid = 0.5 * (c.0 + c.1);
                next.push(eval_cell(c.0, mid)?);
                next.push(eval_cell(mid, c.1)?);
            } else {
                next.push(c);
            }
        }
        cells = next;
    }
}
