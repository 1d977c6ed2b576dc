//! Best approximation by piecewise polynomials on a fixed partition.
//!
//! Coefficients of all pieces are stacked into one vector; continuity
//! conditions are linear equalities and are eliminated through an orthonormal
//! basis of their null space, so the same kernels as for polynomials apply.

use nalgebra::{DMatrix, DVector};

use super::kernels::{self, Model};
use super::{ShapeConstraint, SolveStatus, CERTIFICATE_TOL, DEFAULT_SOLVER_TOL, MAX_ROUNDS};
use crate::error::{Error, Result};
use crate::func::Func;
use crate::polynomials::{ChebyshevPolynomial, Continuity, Interval, PiecewisePolynomial};
use crate::shape::InflectionPartition;
use crate::weighted_spaces::{cached_rule, chebyshev_grid, refined_grid_max, JacobiWeight, WeightedNormParams};

const MAX_CUTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineOptions {
    /// Quadrature nodes per piece for finite `p`.
    pub piece_order: usize,
    /// Sample points per piece for `p = ∞`.
    pub sup_points: usize,
    /// Shape-constraint samples per piece; `None` means `max(4k, 16)`.
    pub constraint_points: Option<usize>,
    pub solver_tol: f64,
}

impl Default for SplineOptions {
    fn default() -> Self {
        SplineOptions {
            piece_order: 48,
            sup_points: 257,
            constraint_points: None,
            solver_tol: DEFAULT_SOLVER_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplineSolution {
    pub spline: PiecewisePolynomial,
    pub error: f64,
    pub discretization_error_estimate: f64,
    /// Worst relative shape residual (`None` when unconstrained).
    pub constraint_residual: Option<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
}

struct PieceRule {
    x: Vec<f64>,
    u: Vec<f64>,
    mult: Vec<f64>,
    q: Vec<f64>,
}

/// Discretization of `∫_a^b |w g|^p` on one piece. Endpoint singularities of
/// the weight at ±1 are absorbed into Gauss–Jacobi nodes.
fn piece_rule(iv: Interval, w: JacobiWeight, p: f64, order: usize, sup_points: usize) -> Result<PieceRule> {
    if p.is_infinite() {
        let u = chebyshev_grid(sup_points);
        let x: Vec<f64> = u.iter().map(|&t| iv.from_unit(t)).collect();
        let mult = x.iter().map(|&xi| w.eval(xi)).collect();
        let q = vec![1.0; u.len()];
        return Ok(PieceRule { x, u, mult, q });
    }
    let h = iv.jacobian();
    let left = iv.a == -1.0 && w.alpha != 0.0;
    let right = iv.b == 1.0 && w.beta != 0.0;
    let ea = if left { p * w.alpha } else { 0.0 };
    let eb = if right { p * w.beta } else { 0.0 };
    let rule = cached_rule(order, eb, ea)?;
    let factor = h * if left { h.powf(p * w.alpha) } else { 1.0 } * if right { h.powf(p * w.beta) } else { 1.0 };
    let u = rule.nodes.clone();
    let x: Vec<f64> = u.iter().map(|&t| iv.from_unit(t)).collect();
    let mult = x
        .iter()
        .map(|&xi| {
            let l = if left { 1.0 } else { (1.0 + xi).max(0.0).powf(w.alpha) };
            let r = if right { 1.0 } else { (1.0 - xi).max(0.0).powf(w.beta) };
            l * r
        })
        .collect();
    let q = rule.weights.iter().map(|wi| wi * factor).collect();
    Ok(PieceRule { x, u, mult, q })
}

/// `‖w g‖_p` on `[-1, 1]` computed piece by piece over `knots`, so kinks of
/// `g` at the knots do not spoil the quadrature.
pub fn piecewise_weighted_norm<G: Fn(f64) -> f64>(
    g: G,
    knots: &[f64],
    weight: JacobiWeight,
    p: f64,
    order: usize,
    sup_points: usize,
) -> Result<f64> {
    validate_knots(knots)?;
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p = {p} below 1")));
    }
    if p.is_infinite() {
        let mut best = 0.0f64;
        for win in knots.windows(2) {
            let iv = Interval { a: win[0], b: win[1] };
            let rule = piece_rule(iv, weight, p, order, sup_points)?;
            let local = |u: f64| {
                let x = iv.from_unit(u);
                (weight.eval(x) * g(x)).abs()
            };
            let (v, _) = refined_grid_max(&local, &rule.u)
                .map_err(|u| Error::Evaluation(format!("non-finite value at x = {}", iv.from_unit(u))))?;
            best = best.max(v);
        }
        return Ok(best);
    }
    let mut s = 0.0;
    for win in knots.windows(2) {
        let rule = piece_rule(Interval { a: win[0], b: win[1] }, weight, p, order, sup_points)?;
        for i in 0..rule.x.len() {
            let v = rule.mult[i] * g(rule.x[i]);
            if !v.is_finite() {
                return Err(Error::Evaluation(format!("non-finite value at x = {}", rule.x[i])));
            }
            s += rule.q[i] * v.abs().powf(p);
        }
    }
    Ok(s.powf(1.0 / p))
}

fn validate_knots(knots: &[f64]) -> Result<()> {
    if knots.len() < 2 || knots[0] != -1.0 || knots[knots.len() - 1] != 1.0 {
        return Err(Error::Parameter("knots must run from -1 to 1".into()));
    }
    if knots.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Parameter("knots must be strictly increasing".into()));
    }
    Ok(())
}

fn chebyshev_values(u: f64, k: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(k);
    for l in 0..k {
        t.push(match l {
            0 => 1.0,
            1 => u,
            _ => 2.0 * u * t[l - 1] - t[l - 2],
        });
    }
    t
}

/// Best approximation of `f` from piecewise polynomials of order `k`
/// (degree `k − 1`) on `knots`, with `C0` or `C1` matching and an optional
/// shape constraint. The norm must live on `[-1, 1]`.
pub fn best_spline(
    f: &Func,
    knots: &[f64],
    k: usize,
    continuity: Continuity,
    constraint: &ShapeConstraint,
    norm: &WeightedNormParams,
    opts: &SplineOptions,
) -> Result<SplineSolution> {
    validate_knots(knots)?;
    norm.validate()?;
    if k == 0 {
        return Err(Error::Parameter("spline order k must be at least 1".into()));
    }
    if !(norm.p >= 1.0) {
        return Err(Error::Parameter(format!("solvers require p >= 1 (got {})", norm.p)));
    }
    if !norm.interval.is_unit() {
        return Err(Error::Parameter("spline approximation is defined on [-1, 1]".into()));
    }
    let support = if norm.p.is_infinite() { opts.sup_points } else { opts.piece_order };
    if k > support {
        return Err(Error::Parameter(format!("k = {k} exceeds the {support} nodes per piece")));
    }
    let pieces = knots.len() - 1;
    let ncols = pieces * k;
    let p = norm.p;

    // Objective rows.
    let mut rows_a: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut rhs = Vec::new();
    let mut qs = Vec::new();
    for j in 0..pieces {
        let iv = Interval { a: knots[j], b: knots[j + 1] };
        let rule = piece_rule(iv, norm.weight, p, opts.piece_order, opts.sup_points)?;
        for i in 0..rule.x.len() {
            let fx = f.eval(rule.x[i]);
            if !fx.is_finite() {
                return Err(Error::Evaluation(format!("target is not finite at x = {}", rule.x[i])));
            }
            let m = rule.mult[i];
            rows_a.push((j, chebyshev_values(rule.u[i], k).into_iter().map(|t| m * t).collect()));
            rhs.push(m * fx);
            qs.push(rule.q[i]);
        }
    }
    let mut a = DMatrix::zeros(rows_a.len(), ncols);
    for (i, (j, vals)) in rows_a.iter().enumerate() {
        for (l, v) in vals.iter().enumerate() {
            a[(i, j * k + l)] = *v;
        }
    }

    let null = continuity_null_space(knots, k, continuity);
    let model = Model {
        a: &a * &null,
        b: DVector::from_vec(rhs),
        q: DVector::from_vec(qs),
    };

    let assemble = |y: &DVector<f64>| -> Result<PiecewisePolynomial> {
        let c = &null * y;
        let polys = (0..pieces)
            .map(|j| ChebyshevPolynomial::new(c.rows(j * k, k).iter().copied().collect()))
            .collect::<Result<Vec<_>>>()?;
        PiecewisePolynomial::new(knots.to_vec(), polys, continuity)
    };

    let Some(y) = constraint.partition() else {
        let fit = kernels::fit(&model, p, &DMatrix::zeros(0, model.a.ncols()), opts.solver_tol)?;
        let spline = assemble(&fit.coeffs)?;
        let status = if fit.converged { SolveStatus::Optimal } else { SolveStatus::Degraded };
        return finish(f, spline, norm, opts, None, fit.iterations, status);
    };

    let mut m = opts.constraint_points.unwrap_or(4 * k).max(16);
    let mut cuts: Vec<(f64, f64)> = Vec::new();
    let mut iterations = 0;
    let mut last = None;
    for _round in 0..MAX_ROUNDS {
        let base = sample_points(knots, &y, m);
        for _ in 0..MAX_CUTS {
            let mut pts = base.clone();
            pts.extend_from_slice(&cuts);
            let g = shape_rows(knots, k, continuity, &y, &pts) * &null;
            let fit = kernels::fit(&model, p, &g, opts.solver_tol)?;
            iterations += fit.iterations;
            let spline = assemble(&fit.coeffs)?;
            let (worst, violations) = certify(&spline, &y);
            if violations.is_empty() {
                let status = if fit.converged { SolveStatus::Optimal } else { SolveStatus::Degraded };
                return finish(f, spline, norm, opts, Some(worst), iterations, status);
            }
            let fresh: Vec<(f64, f64)> = violations.into_iter().filter(|c| !cuts.contains(c)).collect();
            last = Some((spline, worst));
            if fresh.is_empty() {
                break;
            }
            cuts.extend(fresh);
        }
        m *= 2;
    }
    let (spline, worst) = last.expect("at least one solve ran");
    finish(f, spline, norm, opts, Some(worst), iterations, SolveStatus::Uncertified)
}

fn finish(
    f: &Func,
    spline: PiecewisePolynomial,
    norm: &WeightedNormParams,
    opts: &SplineOptions,
    residual: Option<f64>,
    iterations: usize,
    status: SolveStatus,
) -> Result<SplineSolution> {
    let err = |x: f64| f.eval(x) - spline.eval(x);
    let knots = spline.knots();
    let error = piecewise_weighted_norm(err, knots, norm.weight, norm.p, opts.piece_order, opts.sup_points)?;
    let fine = piecewise_weighted_norm(err, knots, norm.weight, norm.p, 2 * opts.piece_order, 2 * opts.sup_points - 1)?;
    Ok(SplineSolution {
        error,
        discretization_error_estimate: (fine - error).abs(),
        constraint_residual: residual,
        iterations,
        status,
        spline,
    })
}

/// Orthonormal basis (columns) of the coefficient vectors satisfying the
/// matching conditions at interior knots.
fn continuity_null_space(knots: &[f64], k: usize, continuity: Continuity) -> DMatrix<f64> {
    let pieces = knots.len() - 1;
    let ncols = pieces * k;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for j in 1..pieces {
        let hl = 0.5 * (knots[j] - knots[j - 1]);
        let hr = 0.5 * (knots[j + 1] - knots[j]);
        let mut value = vec![0.0; ncols];
        for l in 0..k {
            value[(j - 1) * k + l] = 1.0;
            value[j * k + l] = -if l % 2 == 0 { 1.0 } else { -1.0 };
        }
        rows.push(value);
        if continuity == Continuity::C1 && k >= 2 {
            let mut slope = vec![0.0; ncols];
            for l in 1..k {
                let l2 = (l * l) as f64;
                slope[(j - 1) * k + l] = l2 / hl;
                // T_l'(-1) = (-1)^{l+1} l²
                slope[j * k + l] = -(if l % 2 == 1 { 1.0 } else { -1.0 }) * l2 / hr;
            }
            rows.push(slope);
        }
    }
    if rows.is_empty() {
        return DMatrix::identity(ncols, ncols);
    }
    let b = DMatrix::from_fn(rows.len(), ncols, |i, c| {
        let norm: f64 = rows[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        rows[i][c] / norm
    });
    let eig = (b.transpose() * &b).symmetric_eigen();
    let top = eig.eigenvalues.amax().max(1.0);
    let keep: Vec<usize> = (0..ncols).filter(|&i| eig.eigenvalues[i] <= 1e-10 * top).collect();
    let mut keep = keep;
    keep.sort_unstable();
    eig.eigenvectors.select_columns(&keep)
}

/// Sample points `(x, sign)` per piece; inflection points lying inside a
/// piece are added with both adjacent signs, which forces `S'' = 0` there.
fn sample_points(knots: &[f64], y: &InflectionPartition, m: usize) -> Vec<(f64, f64)> {
    let t = chebyshev_grid(m);
    let mut pts = Vec::new();
    for w in knots.windows(2) {
        let iv = Interval { a: w[0], b: w[1] };
        for &ti in &t {
            let x = iv.from_unit(ti).clamp(iv.a, iv.b);
            push_signed(&mut pts, y, x);
        }
        for &yi in y.points() {
            if yi > iv.a && yi < iv.b {
                pts.push((yi, 1.0));
                pts.push((yi, -1.0));
            }
        }
    }
    pts
}

fn push_signed(pts: &mut Vec<(f64, f64)>, y: &InflectionPartition, x: f64) {
    let s = y.sign_at(x);
    if s == 0.0 {
        pts.push((x, 1.0));
        pts.push((x, -1.0));
    } else {
        pts.push((x, s));
    }
}

/// Rows of `sign · S''(x) ≥ 0` in the stacked coefficients, plus the slope
/// jump conditions `sign · (S'(x_j+) − S'(x_j−)) ≥ 0` for `C0` splines.
fn shape_rows(knots: &[f64], k: usize, continuity: Continuity, y: &InflectionPartition, pts: &[(f64, f64)]) -> DMatrix<f64> {
    let pieces = knots.len() - 1;
    let ncols = pieces * k;
    let second: Vec<ChebyshevPolynomial> = (0..k).map(|l| ChebyshevPolynomial::basis(l).nth_derivative(2)).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut push = |row: Vec<f64>| {
        let scale = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale > 0.0 {
            rows.push(row.into_iter().map(|v| v / scale).collect());
        }
    };
    if k >= 3 {
        for &(x, s) in pts {
            // a point on a knot constrains both neighbouring pieces
            for j in 0..pieces {
                if x < knots[j] || x > knots[j + 1] {
                    continue;
                }
                let iv = Interval { a: knots[j], b: knots[j + 1] };
                let c = 1.0 / (iv.jacobian() * iv.jacobian());
                let u = iv.to_unit(x).clamp(-1.0, 1.0);
                let mut row = vec![0.0; ncols];
                for l in 0..k {
                    row[j * k + l] = s * c * second[l].eval_unchecked(u);
                }
                push(row);
            }
        }
    }
    if continuity == Continuity::C0 && k >= 2 {
        for j in 1..pieces {
            let s = y.sign_at(knots[j]);
            if s == 0.0 {
                continue;
            }
            let hl = 0.5 * (knots[j] - knots[j - 1]);
            let hr = 0.5 * (knots[j + 1] - knots[j]);
            let mut row = vec![0.0; ncols];
            for l in 1..k {
                let l2 = (l * l) as f64;
                row[(j - 1) * k + l] = -s * l2 / hl;
                row[j * k + l] = s * (if l % 2 == 1 { 1.0 } else { -1.0 }) * l2 / hr;
            }
            push(row);
        }
    }
    DMatrix::from_fn(rows.len(), ncols, |i, c| rows[i][c])
}

/// Exact shape check of a spline. Returns the worst relative residual and the
/// violated locations with their required signs.
fn certify(spline: &PiecewisePolynomial, y: &InflectionPartition) -> (f64, Vec<(f64, f64)>) {
    let knots = spline.knots();
    let segments = y.segments();
    let mut worst = f64::INFINITY;
    let mut violations = Vec::new();
    for (j, piece) in spline.pieces().iter().enumerate() {
        let iv = spline.piece_interval(j);
        let c = 1.0 / (iv.jacobian() * iv.jacobian());
        let p2 = piece.nth_derivative(2);
        for seg in &segments {
            let lo = seg.lo.max(iv.a);
            let hi = seg.hi.min(iv.b);
            if !(lo < hi) {
                continue;
            }
            let e = p2.extrema_on(iv.to_unit(lo).max(-1.0), iv.to_unit(hi).min(1.0));
            let (min, arg) = if seg.sign > 0.0 { (e.min, e.argmin) } else { (-e.max, e.argmax) };
            let scale = 1f64.max(c * e.max.abs().max(e.min.abs()));
            let rel = c * min / scale;
            worst = worst.min(rel);
            if rel < -CERTIFICATE_TOL {
                violations.push((iv.from_unit(arg), seg.sign));
            }
        }
    }
    if spline.continuity() == Continuity::C0 {
        for j in 1..knots.len() - 1 {
            let s = y.sign_at(knots[j]);
            if s == 0.0 {
                continue;
            }
            let left = spline.pieces()[j - 1].derivative().eval_unchecked(1.0) / spline.piece_interval(j - 1).jacobian();
            let right = spline.pieces()[j].derivative().eval_unchecked(-1.0) / spline.piece_interval(j).jacobian();
            let scale = 1f64.max(left.abs()).max(right.abs());
            let rel = s * (right - left) / scale;
            worst = worst.min(rel);
            // jump rows are always present, so a violation here is rounding
            // and cannot be cut further
        }
    }
    (worst, violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomials::chebyshev_knots;

    fn unweighted(p: f64) -> WeightedNormParams {
        WeightedNormParams::unweighted(p).unwrap()
    }

    #[test]
    fn abs_is_a_linear_spline() {
        let part = chebyshev_knots(4).unwrap();
        assert!(part.knots().contains(&0.0));
        for p in [1.0, 2.0, f64::INFINITY] {
            let s = best_spline(
                &Func::new(f64::abs),
                part.knots(),
                2,
                Continuity::C0,
                &ShapeConstraint::None,
                &unweighted(p),
                &SplineOptions::default(),
            )
            .unwrap();
            assert!(s.error < 1e-9, "p = {p}: {}", s.error);
            assert!(s.spline.satisfies_declared(None));
        }
    }

    #[test]
    fn splines_are_reproduced() {
        // C1 piecewise quadratic with a jump in the second derivative at 0
        let f = |x: f64| if x < 0.0 { x * x + x } else { -x * x + x };
        let knots = [-1.0, 0.0, 1.0];
        let s = best_spline(
            &Func::new(f),
            &knots,
            3,
            Continuity::C1,
            &ShapeConstraint::None,
            &unweighted(2.0),
            &SplineOptions::default(),
        )
        .unwrap();
        assert!(s.error < 1e-10, "{}", s.error);
        let y = InflectionPartition::new(vec![0.0]).unwrap();
        let s = best_spline(
            &Func::new(f),
            &knots,
            3,
            Continuity::C1,
            &ShapeConstraint::Coconvex(y),
            &unweighted(f64::INFINITY),
            &SplineOptions::default(),
        );
        // rightmost piece is concave, so the coconvex problem cannot reach 0
        let s = s.unwrap();
        assert!(s.error > 1e-3);
        assert_eq!(s.status, SolveStatus::Optimal);
    }

    #[test]
    fn continuity_is_enforced() {
        let part = chebyshev_knots(5).unwrap();
        for cont in [Continuity::C0, Continuity::C1] {
            let s = best_spline(
                &Func::new(|x: f64| (3.0 * x).sin()),
                part.knots(),
                4,
                cont,
                &ShapeConstraint::None,
                &unweighted(2.0),
                &SplineOptions::default(),
            )
            .unwrap();
            let rep = s.spline.continuity_check(None);
            assert!(rep.c0);
            if cont == Continuity::C1 {
                assert!(rep.c1);
            }
        }
    }

    #[test]
    fn convex_spline_of_convex_function_is_certified() {
        let part = chebyshev_knots(6).unwrap();
        for cont in [Continuity::C0, Continuity::C1] {
            for p in [2.0, f64::INFINITY] {
                let s = best_spline(
                    &Func::new(|x: f64| x.powi(4)),
                    part.knots(),
                    3,
                    cont,
                    &ShapeConstraint::Convex,
                    &unweighted(p),
                    &SplineOptions::default(),
                )
                .unwrap();
                assert_eq!(s.status, SolveStatus::Optimal);
                assert!(s.constraint_residual.unwrap() >= -1e-8);
            }
        }
    }

    #[test]
    fn weighted_piecewise_norm_of_one() {
        let part = chebyshev_knots(7).unwrap();
        // ∫(1−x²)^{-1/2} = π
        let v = piecewise_weighted_norm(|_| 1.0, part.knots(), JacobiWeight::new(-0.5, -0.5), 1.0, 32, 65).unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-12, "{v}");
        let v = piecewise_weighted_norm(|_| 1.0, part.knots(), JacobiWeight::unit(), 2.0, 32, 65).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-13);
    }
}
