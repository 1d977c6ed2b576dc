//! Experiment driver: degree tables, empirical constants for the Jackson and
//! shape-preserving inequalities, and the worked example on `[-1, 2]`.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`], and rows
//! are merged in order after the per-`n` solves, so output is reproducible
//! byte for byte.

pub mod example28;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use example28::{example_2_8, Example28Mode, Example28Report, Example28Row};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::func::Func;
use crate::polynomials::{chebyshev_knots, Continuity};
use crate::shape::InflectionPartition;
use crate::smoothness::{weighted_dt_modulus, MeshPartition, ModulusSpec};
use crate::solvers::{
    best_approximation, best_spline, ApproxProblem, ApproxSolution, ShapeConstraint, SolveStatus, SplineOptions,
    DEFAULT_SOLVER_TOL,
};
use crate::weighted_spaces::{weighted_lp_norm, JacobiWeight, WeightedNormParams};

/// Largest `N` an experiment accepts.
pub const MAX_N: usize = 64;

/// Quantities at or below this are treated as zero when forming ratios.
pub const ZERO_TOL: f64 = 1e-12;

/// Formats with at most 12 significant digits, shortest round-trip form.
pub fn fmt_sig(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    let a = rounded.abs();
    if a == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_else(|| "NA".into())
}

// ---------------------------------------------------------------- registry

/// A named test function with its inflection points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub expr: &'static str,
    pub inflections: &'static [f64],
}

/// Coconvex fixtures used by the shape-preserving checks, each changing convexity at
/// its listed point and convex on the rightmost segment.
pub const FIXTURE_FAMILY: [Fixture; 6] = [
    Fixture { name: "neg_sin_pi", expr: "-sin(pi*x)", inflections: &[0.0] },
    Fixture { name: "cube", expr: "x^3", inflections: &[0.0] },
    Fixture { name: "quintic", expr: "x^5 - x", inflections: &[0.0] },
    Fixture { name: "cube_shift_pos", expr: "(x - 0.5)^3", inflections: &[0.5] },
    Fixture { name: "cube_shift_neg", expr: "(x + 0.5)^3", inflections: &[-0.5] },
    Fixture { name: "quartic_spline", expr: "(x - 0.25)^3*abs(x - 0.25)", inflections: &[0.25] },
];

const EXTRA_FIXTURES: [Fixture; 5] = [
    Fixture { name: "x4", expr: "x^4", inflections: &[] },
    Fixture { name: "square", expr: "x^2", inflections: &[] },
    Fixture { name: "abs", expr: "abs(x)", inflections: &[] },
    Fixture { name: "zero", expr: "0", inflections: &[] },
    Fixture { name: "example28", expr: "tan(cos(exp(x^4)))", inflections: &[] },
];

pub fn registry() -> impl Iterator<Item = &'static Fixture> {
    FIXTURE_FAMILY.iter().chain(EXTRA_FIXTURES.iter())
}

/// A function spec resolved to an expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedFunction {
    pub name: String,
    pub expr: Expr,
    /// Registry default; empty for free expressions.
    pub inflections: Vec<f64>,
}

impl ResolvedFunction {
    pub fn func(&self) -> Func {
        self.expr.clone().into_func()
    }

    pub fn derivative(&self, order: usize) -> Func {
        self.expr.nth_derivative(order).into_func()
    }
}

/// Looks `spec` up in the registry, otherwise parses it as an expression.
pub fn resolve_function(spec: &str) -> Result<ResolvedFunction> {
    let spec = spec.trim();
    if let Some(fx) = registry().find(|f| f.name == spec) {
        return Ok(ResolvedFunction {
            name: fx.name.to_string(),
            expr: Expr::parse(fx.expr)?,
            inflections: fx.inflections.to_vec(),
        });
    }
    Ok(ResolvedFunction {
        name: spec.to_string(),
        expr: Expr::parse(spec)?,
        inflections: Vec::new(),
    })
}

// ------------------------------------------------------------------ config

/// Inclusive degree range `m:N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NRange {
    pub m: usize,
    pub n: usize,
}

impl FromStr for NRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("n range '{s}' must look like m:N"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let m = a.trim().parse().map_err(|_| bad())?;
        let n = b.trim().parse().map_err(|_| bad())?;
        Ok(NRange { m, n })
    }
}

impl TryFrom<String> for NRange {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NRange> for String {
    fn from(r: NRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.m, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Parameter(format!("unknown format '{s}' (csv|json)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    None,
    Convex,
    Coconvex,
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(ShapeKind::None),
            "convex" => Ok(ShapeKind::Convex),
            "coconvex" => Ok(ShapeKind::Coconvex),
            _ => Err(Error::Parameter(format!("unknown shape '{s}' (none|convex|coconvex)"))),
        }
    }
}

/// Parses `1`, `2`, `inf` or any real `>= 1`.
pub fn parse_p(s: &str) -> Result<f64> {
    let s = s.trim();
    let p = match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        t => t
            .parse::<f64>()
            .map_err(|_| Error::Parameter(format!("p = '{s}' is not a number or 'inf'")))?,
    };
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p = {p} must be >= 1")));
    }
    Ok(p)
}

pub fn parse_continuity(s: &str) -> Result<Continuity> {
    match s.to_ascii_uppercase().as_str() {
        "C0" => Ok(Continuity::C0),
        "C1" => Ok(Continuity::C1),
        _ => Err(Error::Parameter(format!("unknown continuity '{s}' (C0|C1)"))),
    }
}

mod p_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => super::parse_p(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// Everything an experiment reads. The JSON form uses the flag names with
/// `-` replaced by `_`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registry name or expression text.
    #[serde(rename = "fn")]
    pub function: String,
    /// `None` takes the registry default.
    pub inflections: Option<Vec<f64>>,
    pub alpha: f64,
    pub beta: f64,
    #[serde(with = "p_serde")]
    pub p: f64,
    pub sigma: f64,
    pub eta: f64,
    pub n_range: NRange,
    /// Polynomial size for single solves.
    pub degree: Option<usize>,
    /// `None` picks coconvex when inflections exist, convex otherwise.
    pub shape: Option<ShapeKind>,
    /// Spline order (degree `k − 1`).
    pub k: usize,
    /// Derivative order for the spline check.
    pub r: usize,
    /// Difference order of the modulus in the spline check.
    pub modulus_order: usize,
    pub continuity: Continuity,
    /// Drop rows with `n ≤ (1 − y₁²)^{-1/2}` from the lhs. `None` applies it
    /// for `σ = 4` with one inflection point.
    pub threshold: Option<bool>,
    pub tol: f64,
    pub mode: Example28Mode,
    pub out: Option<String>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            function: "neg_sin_pi".into(),
            inflections: None,
            alpha: 0.0,
            beta: 0.0,
            p: f64::INFINITY,
            sigma: 1.0,
            eta: 2.0,
            n_range: NRange { m: 1, n: 12 },
            degree: None,
            shape: None,
            k: 3,
            r: 0,
            modulus_order: 2,
            continuity: Continuity::C1,
            threshold: None,
            tol: DEFAULT_SOLVER_TOL,
            mode: Example28Mode::Corrected,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parameter(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let NRange { m, n } = self.n_range;
        if !(1 <= m && m <= n && n <= MAX_N) {
            return Err(Error::Parameter(format!("n range {m}:{n} must satisfy 1 <= m <= N <= {MAX_N}")));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Parameter(format!("sigma = {} must be positive", self.sigma)));
        }
        if !self.eta.is_finite() {
            return Err(Error::Parameter("eta must be finite".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Parameter("tol must be positive".into()));
        }
        if !(self.p >= 1.0) {
            return Err(Error::Parameter(format!("p = {} must be >= 1", self.p)));
        }
        self.norm()?;
        self.partition()?;
        Ok(())
    }

    pub fn resolve(&self) -> Result<ResolvedFunction> {
        resolve_function(&self.function)
    }

    pub fn norm(&self) -> Result<WeightedNormParams> {
        WeightedNormParams::new(self.alpha, self.beta, self.p)
    }

    pub fn partition(&self) -> Result<InflectionPartition> {
        let points = match &self.inflections {
            Some(y) => y.clone(),
            None => self.resolve()?.inflections,
        };
        InflectionPartition::from_unsorted(points)
    }

    pub fn constraint(&self) -> Result<ShapeConstraint> {
        let y = self.partition()?;
        Ok(match self.shape {
            Some(ShapeKind::None) => ShapeConstraint::None,
            Some(ShapeKind::Convex) => ShapeConstraint::Convex,
            Some(ShapeKind::Coconvex) if y.s() == 0 => {
                return Err(Error::Parameter("coconvex shape needs at least one inflection point".into()))
            }
            _ if y.s() == 0 => ShapeConstraint::Convex,
            _ => ShapeConstraint::Coconvex(y),
        })
    }
}

// ------------------------------------------------------------ parallel map

/// Maps `f` over `items` on scoped threads; results keep the input order.
pub(crate) fn ordered_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync>(items: &[T], f: F) -> Vec<R> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len());
    if threads <= 1 {
        return items.iter().map(f).collect();
    }
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let f = &f;
                scope.spawn(move || {
                    (t..items.len())
                        .step_by(threads)
                        .map(|i| (i, f(&items[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every slot filled")).collect()
}

// ------------------------------------------------------------ degree table

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub e_n: f64,
    pub e2_n: f64,
    pub nsig_e: f64,
    pub nsig_e2: f64,
    /// Running sup of `n^σ E_n` from the first row.
    pub sup_e: f64,
    pub sup_e2: f64,
    /// `sup_e2 / sup_e`; `None` when the denominator vanishes.
    pub ratio: Option<f64>,
    pub status: String,
}

pub const DEGREE_TABLE_HEADER: &str = "n,E_n,E2_n,nsig_E,nsig_E2,sup_E,sup_E2,ratio,status";

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(DEGREE_TABLE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.n,
            fmt_sig(r.e_n),
            fmt_sig(r.e2_n),
            fmt_sig(r.nsig_e),
            fmt_sig(r.nsig_e2),
            fmt_sig(r.sup_e),
            fmt_sig(r.sup_e2),
            fmt_opt(r.ratio),
            r.status
        ));
    }
    s
}

/// Ratio of two nonnegative quantities with the zero cases named.
fn guarded_ratio(num: f64, den: f64) -> (Option<f64>, Option<&'static str>) {
    match (num <= ZERO_TOL, den <= ZERO_TOL) {
        (_, false) => (Some(num / den), None),
        (true, true) => (None, Some("INDETERMINATE")),
        (false, true) => (None, Some("UNBOUNDED")),
    }
}

fn worse(a: SolveStatus, b: SolveStatus) -> SolveStatus {
    let rank = |s: SolveStatus| match s {
        SolveStatus::Optimal => 0,
        SolveStatus::Degraded => 1,
        SolveStatus::Uncertified => 2,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

/// Unconstrained and constrained solutions for one `n`.
struct Cell {
    n: usize,
    free: ApproxSolution,
    shaped: ApproxSolution,
}

fn solve_cells(f: &Func, cfg: &ExperimentConfig, ns: &[usize]) -> Result<Vec<Cell>> {
    let norm = cfg.norm()?;
    let constraint = cfg.constraint()?;
    let results = ordered_map(ns, |&n| -> Result<Cell> {
        let prob = ApproxProblem::new(f.clone(), n, norm).with_tol(cfg.tol);
        let free = best_approximation(&prob)?;
        let shaped = if constraint.is_none() {
            free.clone()
        } else {
            best_approximation(&prob.with_constraint(constraint.clone()))?
        };
        Ok(Cell { n, free, shaped })
    });
    results.into_iter().collect()
}

fn assemble_rows(cells: &[Cell], sigma: f64) -> Vec<ResultRow> {
    let mut sup_e = 0.0f64;
    let mut sup_e2 = 0.0f64;
    cells
        .iter()
        .map(|c| {
            let scale = (c.n as f64).powf(sigma);
            let nsig_e = scale * c.free.error;
            let nsig_e2 = scale * c.shaped.error;
            sup_e = sup_e.max(nsig_e);
            sup_e2 = sup_e2.max(nsig_e2);
            let (ratio, flag) = guarded_ratio(sup_e2, sup_e);
            let mut status = worse(c.free.status, c.shaped.status).as_str().to_string();
            if let Some(flag) = flag {
                status.push(';');
                status.push_str(flag);
            }
            ResultRow {
                n: c.n,
                e_n: c.free.error,
                e2_n: c.shaped.error,
                nsig_e,
                nsig_e2,
                sup_e,
                sup_e2,
                ratio,
                status,
            }
        })
        .collect()
}

/// `E_n` and the shape-constrained `E_n^{(2)}` for every `n` of the range.
pub fn degree_table(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let f = cfg.resolve()?.func();
    let ns: Vec<usize> = (cfg.n_range.m..=cfg.n_range.n).collect();
    let cells = solve_cells(&f, cfg, &ns)?;
    Ok(assemble_rows(&cells, cfg.sigma))
}

// ------------------------------------------------------------ ratio check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub n_max: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub c_emp: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub sigma: f64,
    pub m: usize,
    pub n_max: usize,
    /// `max_{m ≤ n ≤ N} n^σ E2_n` over rows not excluded.
    pub lhs: f64,
    /// `max_{1 ≤ n ≤ N} n^σ E_n`.
    pub rhs: f64,
    pub c_emp: Option<f64>,
    pub status: String,
    /// `(1 − y₁²)^{-1/2}` when the threshold is in force.
    pub threshold: Option<f64>,
    pub excluded: Vec<usize>,
    /// `c_emp` recomputed with `N` replaced by `N/2`, `3N/4`, `N`.
    pub stability: Vec<RatioPoint>,
    /// `(max − min)/max` of `c_emp` over the last quarter of `N' ≤ N`.
    pub last_quartile_variation: Option<f64>,
    pub stable: bool,
    /// Every `N'` from `m` to `N`.
    pub curve: Vec<RatioPoint>,
    pub rows: Vec<ResultRow>,
}

impl RatioReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,lhs,rhs,c_emp,status\n");
        for p in &self.curve {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                p.n_max,
                fmt_sig(p.lhs),
                fmt_sig(p.rhs),
                fmt_opt(p.c_emp),
                p.status
            ));
        }
        s
    }
}

/// Empirical constant in `sup_{n≥m} n^σ E2_n ≤ c · sup_n n^σ E_n`.
pub fn ratio_experiment(cfg: &ExperimentConfig) -> Result<RatioReport> {
    cfg.validate()?;
    let f = cfg.resolve()?.func();
    let (m, n_max) = (cfg.n_range.m, cfg.n_range.n);
    let y = cfg.partition()?;
    let apply_threshold = cfg.threshold.unwrap_or(cfg.sigma == 4.0 && y.s() == 1);
    let threshold = if apply_threshold {
        if y.s() != 1 {
            return Err(Error::Parameter("the degree threshold needs exactly one inflection point".into()));
        }
        Some((1.0 - y.y(1) * y.y(1)).powf(-0.5))
    } else {
        None
    };
    let ns: Vec<usize> = (1..=n_max).collect();
    let cells = solve_cells(&f, cfg, &ns)?;
    let rows = assemble_rows(&cells, cfg.sigma);
    let excluded: Vec<usize> = match threshold {
        Some(t) => ns.iter().copied().filter(|&n| (n as f64) <= t).collect(),
        None => Vec::new(),
    };
    let point = |upto: usize| -> RatioPoint {
        let lhs = rows
            .iter()
            .filter(|r| r.n >= m && r.n <= upto && !excluded.contains(&r.n))
            .map(|r| r.nsig_e2)
            .fold(0.0, f64::max);
        let rhs = rows.iter().filter(|r| r.n <= upto).map(|r| r.nsig_e).fold(0.0, f64::max);
        let (c_emp, flag) = guarded_ratio(lhs, rhs);
        RatioPoint {
            n_max: upto,
            lhs,
            rhs,
            c_emp,
            status: flag.unwrap_or("OK").to_string(),
        }
    };
    let curve: Vec<RatioPoint> = (m..=n_max).map(point).collect();
    let stability: Vec<RatioPoint> = [n_max / 2, (3 * n_max) / 4, n_max]
        .iter()
        .map(|&k| point(k.max(m)))
        .collect();
    let q0 = ((3 * n_max + 3) / 4).max(m);
    let tail: Vec<Option<f64>> = curve.iter().filter(|p| p.n_max >= q0).map(|p| p.c_emp).collect();
    let last_quartile_variation = if tail.iter().all(Option::is_some) && !tail.is_empty() {
        let vals: Vec<f64> = tail.into_iter().flatten().collect();
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        Some(if hi > 0.0 { (hi - lo) / hi } else { 0.0 })
    } else {
        None
    };
    let last = point(n_max);
    Ok(RatioReport {
        sigma: cfg.sigma,
        m,
        n_max,
        lhs: last.lhs,
        rhs: last.rhs,
        c_emp: last.c_emp,
        status: last.status,
        threshold,
        excluded,
        stability,
        stable: last_quartile_variation.is_some_and(|v| v < 0.25),
        last_quartile_variation,
        curve,
        rows,
    })
}

// ---------------------------------------------------- inverse-type check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseRow {
    pub n: usize,
    /// `n^{-η} ‖f‖`.
    pub lhs: f64,
    pub e_n: f64,
    pub e2_n: f64,
    /// `n^σ E_n`.
    pub nsig_e: f64,
    pub ratio: Option<f64>,
    /// `OK`, `TRIVIAL` (`‖f‖ = 0`) or `UNSTABLE` (`E2_n` below `10⁻¹²`).
    pub flag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseReport {
    pub eta: f64,
    pub sigma: f64,
    pub norm_f: f64,
    pub trivial: bool,
    pub empirical_c: Option<f64>,
    pub rows: Vec<InverseRow>,
}

impl InverseReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,lhs,E_n,E2_n,nsig_E,ratio,flag\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n,
                fmt_sig(r.lhs),
                fmt_sig(r.e_n),
                fmt_sig(r.e2_n),
                fmt_sig(r.nsig_e),
                fmt_opt(r.ratio),
                r.flag
            ));
        }
        s
    }
}

/// Tabulates `n^{-η} ‖f‖ / E2_n` for one inflection point.
pub fn theorem_2_12_check(cfg: &ExperimentConfig) -> Result<InverseReport> {
    cfg.validate()?;
    if cfg.partition()?.s() != 1 {
        return Err(Error::Parameter("this check needs exactly one inflection point".into()));
    }
    let f = cfg.resolve()?.func();
    let norm_f = weighted_lp_norm(f.as_fn(), &cfg.norm()?)?;
    let trivial = norm_f == 0.0;
    let ns: Vec<usize> = (cfg.n_range.m..=cfg.n_range.n).collect();
    let cells = solve_cells(&f, cfg, &ns)?;
    let rows: Vec<InverseRow> = cells
        .iter()
        .map(|c| {
            let n = c.n as f64;
            let lhs = n.powf(-cfg.eta) * norm_f;
            let e2 = c.shaped.error;
            let (ratio, flag) = if trivial {
                (None, "TRIVIAL")
            } else if e2 < ZERO_TOL {
                (None, "UNSTABLE")
            } else {
                (Some(lhs / e2), "OK")
            };
            InverseRow {
                n: c.n,
                lhs,
                e_n: c.free.error,
                e2_n: e2,
                nsig_e: n.powf(cfg.sigma) * c.free.error,
                ratio,
                flag: flag.to_string(),
            }
        })
        .collect();
    let empirical_c = rows.iter().filter_map(|r| r.ratio).reduce(f64::max);
    Ok(InverseReport {
        eta: cfg.eta,
        sigma: cfg.sigma,
        norm_f,
        trivial,
        empirical_c,
        rows,
    })
}

// ---------------------------------------------------------- spline check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacksonRow {
    pub n: usize,
    pub mesh_norm: f64,
    pub error: f64,
    pub modulus: Option<f64>,
    pub ratio: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacksonReport {
    pub k: usize,
    pub r: usize,
    pub modulus_order: usize,
    pub continuity: Continuity,
    pub rows: Vec<JacksonRow>,
    /// Max over min of the positive ratios.
    pub spread: Option<f64>,
    pub bounded: bool,
}

impl JacksonReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,mesh_norm,error,modulus,ratio,status\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n,
                fmt_sig(r.mesh_norm),
                fmt_sig(r.error),
                fmt_opt(r.modulus),
                fmt_opt(r.ratio),
                r.status
            ));
        }
        s
    }
}

/// Bound on the spread of the spline ratio column.
pub const JACKSON_SPREAD_BOUND: f64 = 10.0;

/// Best spline error for `f^{(r)}` on Chebyshev partitions against the
/// weighted modulus at the mesh norm. For `r > 0` the shape constraint is
/// dropped since it concerns `f` itself.
pub fn spline_jackson_check(cfg: &ExperimentConfig) -> Result<JacksonReport> {
    cfg.validate()?;
    let resolved = cfg.resolve()?;
    let f_r = resolved.derivative(cfg.r);
    let norm = cfg.norm()?;
    let constraint = if cfg.r == 0 { cfg.constraint()? } else { ShapeConstraint::None };
    let spec = ModulusSpec::new(cfg.modulus_order, cfg.p)
        .with_r(cfg.r as u32)
        .with_weight(JacobiWeight::new(cfg.alpha, cfg.beta));
    let opts = SplineOptions {
        solver_tol: cfg.tol,
        ..SplineOptions::default()
    };
    let ns: Vec<usize> = (cfg.n_range.m.max(2)..=cfg.n_range.n).collect();
    let rows = ordered_map(&ns, |&n| -> Result<JacksonRow> {
        let part = chebyshev_knots(n)?;
        let mesh = MeshPartition::chebyshev(n)?;
        let t = mesh.mesh_norm();
        let sol = best_spline(&f_r, part.knots(), cfg.k, cfg.continuity, &constraint, &norm, &opts)?;
        let (modulus, ratio, status) = match weighted_dt_modulus(f_r.as_fn(), &spec, &mesh) {
            Ok(w) => {
                let (ratio, flag) = if sol.error <= ZERO_TOL {
                    (Some(0.0), None)
                } else {
                    guarded_ratio(sol.error, w)
                };
                let mut status = sol.status.as_str().to_string();
                if let Some(flag) = flag {
                    status.push(';');
                    status.push_str(flag);
                }
                (Some(w), ratio, status)
            }
            Err(_) => (None, None, "MESH_TOO_COARSE".to_string()),
        };
        Ok(JacksonRow {
            n,
            mesh_norm: t,
            error: sol.error,
            modulus,
            ratio,
            status,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let positive: Vec<f64> = rows.iter().filter_map(|r| r.ratio).filter(|&v| v > 0.0).collect();
    let spread = if positive.is_empty() {
        None
    } else {
        let hi = positive.iter().copied().fold(0.0, f64::max);
        let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
        Some(hi / lo)
    };
    let all_defined = rows.iter().all(|r| r.ratio.is_some());
    Ok(JacksonReport {
        k: cfg.k,
        r: cfg.r,
        modulus_order: cfg.modulus_order,
        continuity: cfg.continuity,
        bounded: all_defined && spread.is_none_or(|s| s < JACKSON_SPREAD_BOUND),
        spread,
        rows,
    })
}

// ---------------------------------------------------------------- output

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Table,
    Ratio,
    Thm212,
    Jackson,
    Example28,
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Experiment::Table),
            "ratio" => Ok(Experiment::Ratio),
            "thm212" => Ok(Experiment::Thm212),
            "jackson" => Ok(Experiment::Jackson),
            "example28" => Ok(Experiment::Example28),
            _ => Err(Error::Parameter(format!("unknown experiment '{s}'"))),
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Runs an experiment and renders it in the configured format.
pub fn run_experiment(which: Experiment, cfg: &ExperimentConfig) -> Result<String> {
    let csv = cfg.format == OutputFormat::Csv;
    Ok(match which {
        Experiment::Table => {
            let rows = degree_table(cfg)?;
            if csv {
                rows_to_csv(&rows)
            } else {
                json(&rows)
            }
        }
        Experiment::Ratio => {
            let r = ratio_experiment(cfg)?;
            if csv {
                r.to_csv()
            } else {
                json(&r)
            }
        }
        Experiment::Thm212 => {
            let r = theorem_2_12_check(cfg)?;
            if csv {
                r.to_csv()
            } else {
                json(&r)
            }
        }
        Experiment::Jackson => {
            let r = spline_jackson_check(cfg)?;
            if csv {
                r.to_csv()
            } else {
                json(&r)
            }
        }
        Experiment::Example28 => {
            let r = example_2_8(cfg.mode)?;
            if csv {
                r.to_csv()
            } else {
                json(&r)
            }
        }
    })
}

/// Writes to `path`, or returns the text for stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&str>) -> Result<Option<String>> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map(|_| None)
            .map_err(|e| Error::Io(format!("{p}: {e}"))),
        None => Ok(Some(text.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.25), "0.25");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(2.0e-20), "2e-20");
        assert_eq!(fmt_sig(-0.0), "-0");
        assert_eq!(fmt_sig(123456789012345.0), "123456789012000");
        assert_eq!(fmt_sig(1.0 / 7.0 * 1e20), "1.42857142857e19");
    }

    #[test]
    fn config_roundtrip_and_p_forms() {
        let cfg = ExperimentConfig::from_json(r#"{"fn": "cube", "p": "inf", "n_range": "2:8"}"#).unwrap();
        assert!(cfg.p.is_infinite());
        assert_eq!(cfg.n_range, NRange { m: 2, n: 8 });
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let cfg = ExperimentConfig::from_json(r#"{"p": 3}"#).unwrap();
        assert_eq!(cfg.p, 3.0);
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_range = NRange { m: 3, n: 65 };
        assert!(cfg.validate().is_err());
        cfg.n_range = NRange { m: 0, n: 4 };
        assert!(cfg.validate().is_err());
        cfg.n_range = NRange { m: 1, n: 4 };
        cfg.sigma = 0.0;
        assert!(cfg.validate().is_err());
        assert!("4".parse::<NRange>().is_err());
    }

    #[test]
    fn registry_and_expressions() {
        let f = resolve_function("cube").unwrap();
        assert_eq!(f.inflections, vec![0.0]);
        assert_eq!(f.derivative(2).eval(0.5), 3.0);
        let g = resolve_function("x^2 + 1").unwrap();
        assert!(g.inflections.is_empty());
        assert_eq!(g.func().eval(2.0), 5.0);
        let q = resolve_function("quartic_spline").unwrap();
        assert!(q.derivative(2).eval(0.0) < 0.0 && q.derivative(2).eval(0.5) > 0.0);
        assert!(resolve_function("sin(").is_err());
    }

    #[test]
    fn polynomial_rows_vanish() {
        let cfg = ExperimentConfig {
            function: "cube".into(),
            n_range: NRange { m: 1, n: 6 },
            ..Default::default()
        };
        let rows = degree_table(&cfg).unwrap();
        for r in &rows {
            assert!(r.e_n <= r.e2_n + 2.0 * cfg.tol);
            if r.n >= 4 {
                assert!(r.e_n < 1e-10 && r.e2_n < 1e-10, "{r:?}");
            }
        }
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with(DEGREE_TABLE_HEADER));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn zero_rows_are_flagged() {
        let cfg = ExperimentConfig {
            function: "x^2".into(),
            shape: Some(ShapeKind::Convex),
            n_range: NRange { m: 3, n: 4 },
            ..Default::default()
        };
        let rows = degree_table(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.ratio.is_none() && r.status.ends_with("INDETERMINATE")));
        assert!(rows_to_csv(&rows).contains(",NA,"));
    }

    #[test]
    fn threshold_excludes_small_n() {
        let cfg = ExperimentConfig {
            function: "cube_shift_pos".into(),
            sigma: 4.0,
            n_range: NRange { m: 1, n: 6 },
            ..Default::default()
        };
        let r = ratio_experiment(&cfg).unwrap();
        let t = r.threshold.unwrap();
        assert!((t - (1.0f64 - 0.25).powf(-0.5)).abs() < 1e-15);
        assert_eq!(r.excluded, vec![1]);
    }

    #[test]
    fn inverse_check_on_zero() {
        let cfg = ExperimentConfig {
            function: "zero".into(),
            inflections: Some(vec![0.0]),
            n_range: NRange { m: 2, n: 3 },
            ..Default::default()
        };
        let r = theorem_2_12_check(&cfg).unwrap();
        assert!(r.trivial);
        assert!(r.rows.iter().all(|row| row.flag == "TRIVIAL"));
    }
}
