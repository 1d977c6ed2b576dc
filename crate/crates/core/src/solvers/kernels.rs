//! Discrete fitting kernels shared by the polynomial and spline solvers.
//!
//! Every kernel solves `min Σ q_i |b_i − (A c)_i|^p` (or `max_i |b_i − (A c)_i|`
//! for `p = ∞`) subject to homogeneous inequalities `G c ≥ 0`. The zero vector
//! always satisfies the constraints, so the problems are never infeasible.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Diagonal regularization relative to the mean diagonal of the normal matrix.
pub(crate) const RIDGE: f64 = 1e-12;
pub(crate) const IRLS_MAX_ITER: usize = 500;
const LP_INITIAL_ROWS: usize = 256;
const LP_MAX_EXCHANGES: usize = 40;

/// Residual model: rows of `a` and `b` already carry the pointwise weight
/// multipliers; `q` holds quadrature weights (unused for `p = ∞`).
#[derive(Debug, Clone)]
pub(crate) struct Model {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub q: DVector<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Fit {
    pub coeffs: DVector<f64>,
    /// Value of the discrete objective (`p`-th root taken for finite `p`).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Model {
    pub fn residual(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.b - &self.a * c
    }

    pub fn objective(&self, c: &DVector<f64>, p: f64) -> f64 {
        let r = self.residual(c);
        if p.is_infinite() {
            r.amax()
        } else {
            let s: f64 = r.iter().zip(self.q.iter()).map(|(ri, qi)| qi * ri.abs().powf(p)).sum();
            s.powf(1.0 / p)
        }
    }
}

pub(crate) fn fit(model: &Model, p: f64, g: &DMatrix<f64>, tol: f64) -> Result<Fit> {
    let (coeffs, iterations, converged) = if p.is_infinite() {
        let (c, it) = minimax(model, g)?;
        (c, it, true)
    } else if p == 1.0 {
        (least_absolute(model, g)?, 1, true)
    } else if p == 2.0 {
        (least_squares(&model.a, &model.b, &model.q, g)?, 1, true)
    } else {
        irls(model, p, g, tol)?
    };
    let objective = model.objective(&coeffs, p);
    Ok(Fit {
        coeffs,
        objective,
        iterations,
        converged,
    })
}

/// Weighted least squares `min Σ w_i (b_i − A_i c)²` with `G c ≥ 0`.
///
/// Unconstrained problems use the regularized normal equations. With
/// constraints the problem is reduced to least distance programming and solved
/// through nonnegative least squares.
pub(crate) fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>, w: &DVector<f64>, g: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let mut aw = a.clone();
    let mut bw = b.clone();
    for i in 0..a.nrows() {
        let s = w[i].max(0.0).sqrt();
        aw.row_mut(i).scale_mut(s);
        bw[i] *= s;
    }
    let h = aw.transpose() * &aw;
    let mean_diag = (h.trace() / n as f64).max(f64::MIN_POSITIVE);
    let lambda = RIDGE * mean_diag;

    if g.nrows() == 0 {
        let mut hr = h;
        for j in 0..n {
            hr[(j, j)] += lambda;
        }
        let rhs = aw.transpose() * &bw;
        let chol = hr
            .cholesky()
            .ok_or_else(|| Error::Solver("normal equations are not positive definite".into()))?;
        return Ok(chol.solve(&rhs));
    }

    // Ridge rows keep R nonsingular.
    let m = aw.nrows();
    let mut aug = DMatrix::zeros(m + n, n);
    aug.view_mut((0, 0), (m, n)).copy_from(&aw);
    let mut baug = DVector::zeros(m + n);
    baug.rows_mut(0, m).copy_from(&bw);
    for j in 0..n {
        aug[(m + j, j)] = lambda.sqrt();
    }
    let qr = aug.qr();
    let r = qr.r();
    let d = qr.q().transpose() * &baug;
    // E = G R⁻¹, h = −E d; then c = R⁻¹ (y + d) with y the LDP solution.
    let rt = r.transpose();
    let et = rt
        .solve_lower_triangular(&g.transpose())
        .ok_or_else(|| Error::Solver("singular triangular factor".into()))?;
    let e = et.transpose();
    let hvec = -(&e * &d);
    let y = least_distance(&e, &hvec)?;
    let c = r
        .solve_upper_triangular(&(y + d))
        .ok_or_else(|| Error::Solver("singular triangular factor".into()))?;
    Ok(c)
}

/// `min ‖y‖ subject to E y ≥ h`.
fn least_distance(e: &DMatrix<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = e.shape();
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let norm = e.row(i).norm();
        if norm == 0.0 {
            if h[i] > 0.0 {
                return Err(Error::Solver("inconsistent constraint row".into()));
            }
            continue;
        }
        rows.push((i, 1.0 / norm));
    }
    if rows.is_empty() {
        return Ok(DVector::zeros(n));
    }
    let mut mat = DMatrix::zeros(n + 1, rows.len());
    for (k, &(i, s)) in rows.iter().enumerate() {
        for j in 0..n {
            mat[(j, k)] = e[(i, j)] * s;
        }
        mat[(n, k)] = h[i] * s;
    }
    let mut f = DVector::zeros(n + 1);
    f[n] = 1.0;
    let u = nnls(&mat, &f);
    let r = &mat * u - f;
    if r.norm() < 1e-14 || r[n].abs() < 1e-300 {
        return Err(Error::Solver("least distance problem is infeasible".into()));
    }
    Ok(DVector::from_fn(n, |j, _| -r[j] / r[n]))
}

/// Lawson–Hanson active-set solver for `min ‖M x − f‖, x ≥ 0`.
pub(crate) fn nnls(m: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let (rows, cols) = m.shape();
    let mut x = DVector::zeros(cols);
    let mut passive = vec![false; cols];
    let mut banned = vec![false; cols];
    let tol = 10.0 * f64::EPSILON * m.norm().max(1.0) * f.norm().max(1.0) * rows.max(cols) as f64;
    let max_outer = 3 * cols + 30;

    for _ in 0..max_outer {
        let w = m.transpose() * (f - m * &x);
        let mut pick = None;
        let mut best = tol;
        for j in 0..cols {
            if !passive[j] && !banned[j] && w[j] > best {
                best = w[j];
                pick = Some(j);
            }
        }
        let Some(t) = pick else { break };
        passive[t] = true;
        let mut first = true;
        loop {
            let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
            let z = passive_solve(m, &idx, f);
            if z.iter().all(|&v| v > 0.0) {
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }
            if first {
                let kt = idx.iter().position(|&j| j == t).unwrap();
                if z[kt] <= 0.0 {
                    // Rounding made the entering column useless; drop it for good.
                    passive[t] = false;
                    banned[t] = true;
                    break;
                }
            }
            first = false;
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[k]));
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

fn passive_solve(m: &DMatrix<f64>, idx: &[usize], f: &DVector<f64>) -> DVector<f64> {
    let sub = m.select_columns(idx);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-13 * idx.len().max(1) as f64;
    svd.solve(f, eps).unwrap_or_else(|_| DVector::zeros(idx.len()))
}

/// Discrete minimax by linear programming with row exchange: the LP starts
/// on a subset of rows and absorbs violated rows until none remain, which
/// gives the optimum over all rows.
fn minimax(model: &Model, g: &DMatrix<f64>) -> Result<(DVector<f64>, usize)> {
    let rows = model.a.nrows();
    let mut active = vec![false; rows];
    let stride = (rows / LP_INITIAL_ROWS).max(1);
    for i in (0..rows).step_by(stride) {
        active[i] = true;
    }
    if rows > 0 {
        active[rows - 1] = true;
    }
    for it in 1..=LP_MAX_EXCHANGES {
        let (c, e) = minimax_lp(model, g, &active)?;
        let r = model.residual(&c);
        let slack = 1e-12 * (1.0 + e) + 1e-9 * e;
        let mut added = 0;
        for i in 0..rows {
            if active[i] {
                continue;
            }
            let v = r[i].abs();
            if v <= e + slack {
                continue;
            }
            let left = if i > 0 { r[i - 1].abs() } else { f64::NEG_INFINITY };
            let right = if i + 1 < rows { r[i + 1].abs() } else { f64::NEG_INFINITY };
            if v >= left && v >= right {
                active[i] = true;
                added += 1;
            }
        }
        if added == 0 {
            // Plateaus of equal violation have no strict local maximum.
            for i in 0..rows {
                if !active[i] && r[i].abs() > e + slack {
                    active[i] = true;
                    added += 1;
                }
            }
        }
        if added == 0 {
            return Ok((c, it));
        }
    }
    let (c, _) = minimax_lp(model, g, &vec![true; rows])?;
    Ok((c, LP_MAX_EXCHANGES + 1))
}

fn minimax_lp(model: &Model, g: &DMatrix<f64>, active: &[bool]) -> Result<(DVector<f64>, f64)> {
    let n = model.a.ncols();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let e = lp.add_var(1.0, (0.0, f64::INFINITY));
    let mut terms = Vec::with_capacity(n + 1);
    for (i, _) in active.iter().enumerate().filter(|(_, &on)| on) {
        for sign in [1.0, -1.0] {
            terms.clear();
            for j in 0..n {
                let v = model.a[(i, j)];
                if v != 0.0 {
                    terms.push((vars[j], sign * v));
                }
            }
            terms.push((e, 1.0));
            lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, sign * model.b[i]);
        }
    }
    add_shape_rows(&mut lp, &vars, g);
    let sol = solve_lp(&lp)?;
    let c = DVector::from_fn(n, |j, _| sol.var_value(vars[j]));
    let ev = sol.var_value(e);
    Ok((c, ev))
}

fn least_absolute(model: &Model, g: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = model.a.ncols();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let mut terms = Vec::with_capacity(n + 1);
    for i in 0..model.a.nrows() {
        let t = lp.add_var(model.q[i], (0.0, f64::INFINITY));
        for sign in [1.0, -1.0] {
            terms.clear();
            for j in 0..n {
                let v = model.a[(i, j)];
                if v != 0.0 {
                    terms.push((vars[j], sign * v));
                }
            }
            terms.push((t, 1.0));
            lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, sign * model.b[i]);
        }
    }
    add_shape_rows(&mut lp, &vars, g);
    let sol = solve_lp(&lp)?;
    Ok(DVector::from_fn(n, |j, _| sol.var_value(vars[j])))
}

fn add_shape_rows(lp: &mut Problem, vars: &[microlp::Variable], g: &DMatrix<f64>) {
    for k in 0..g.nrows() {
        let terms: Vec<_> = (0..vars.len())
            .filter(|&j| g[(k, j)] != 0.0)
            .map(|j| (vars[j], g[(k, j)]))
            .collect();
        if !terms.is_empty() {
            lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, 0.0);
        }
    }
}

fn solve_lp(lp: &Problem) -> Result<microlp::Solution> {
    let outcome = lp.solve().map_err(|e| Error::Solver(format!("linear program failed: {e}")))?;
    outcome
        .into_solution()
        .map_err(|_| Error::Solver("linear program was interrupted".into()))
}

/// Iteratively reweighted least squares for `1 < p < ∞`, `p ≠ 2`.
///
/// For `p > 2` the step is damped by `1/(p−1)`, which turns the reweighted
/// step into a Newton step; for `p < 2` the undamped step is a majorization.
fn irls(model: &Model, p: f64, g: &DMatrix<f64>, tol: f64) -> Result<(DVector<f64>, usize, bool)> {
    let theta = if p > 2.0 { 1.0 / (p - 1.0) } else { 1.0 };
    let mut c = least_squares(&model.a, &model.b, &model.q, g)?;
    let mut best = (model.objective(&c, p), c.clone());
    for it in 1..=IRLS_MAX_ITER {
        let r = model.residual(&c);
        let rmax = r.amax();
        if rmax == 0.0 {
            return Ok((c, it, true));
        }
        let floor = (rmax * 1e-10).max(f64::MIN_POSITIVE);
        let w = DVector::from_fn(r.len(), |i, _| model.q[i] * r[i].abs().max(floor).powf(p - 2.0));
        let target = least_squares(&model.a, &model.b, &w, g)?;
        let next = &c + (&target - &c) * theta;
        let step = (&next - &c).amax();
        c = next;
        let obj = model.objective(&c, p);
        if obj < best.0 {
            best = (obj, c.clone());
        }
        if step <= tol * (1.0 + c.amax()) {
            return Ok((c, it, true));
        }
    }
    Ok((best.1, IRLS_MAX_ITER, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_matches_unconstrained_when_interior() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let f = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = nnls(&m, &f);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_clamps_negative_component() {
        let m = DMatrix::identity(2, 2);
        let f = DVector::from_vec(vec![-1.0, 2.0]);
        let x = nnls(&m, &f);
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constrained_least_squares_projects_onto_halfspace() {
        // min (c0-1)² + (c1+1)² subject to c1 ≥ 0 → (1, 0)
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let w = DVector::from_vec(vec![1.0, 1.0]);
        let g = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let c = least_squares(&a, &b, &w, &g).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-9 && c[1].abs() < 1e-9, "{c}");
    }

    #[test]
    fn minimax_line_through_three_points() {
        // Best constant for data (0, 1, 4) is 2 with error 2.
        let a = DMatrix::from_element(3, 1, 1.0);
        let b = DVector::from_vec(vec![0.0, 1.0, 4.0]);
        let model = Model {
            a,
            b,
            q: DVector::from_element(3, 1.0),
        };
        let f = fit(&model, f64::INFINITY, &DMatrix::zeros(0, 1), 1e-10).unwrap();
        assert!((f.coeffs[0] - 2.0).abs() < 1e-9);
        assert!((f.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn least_absolute_constant_is_median() {
        let model = Model {
            a: DMatrix::from_element(5, 1, 1.0),
            b: DVector::from_vec(vec![0.0, 1.0, 2.0, 10.0, 30.0]),
            q: DVector::from_element(5, 1.0),
        };
        let f = fit(&model, 1.0, &DMatrix::zeros(0, 1), 1e-10).unwrap();
        assert!((f.coeffs[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn irls_constant_minimizes_lp_objective() {
        let data = [0.0, 1.0, 5.0];
        let model = Model {
            a: DMatrix::from_element(3, 1, 1.0),
            b: DVector::from_row_slice(&data),
            q: DVector::from_element(3, 1.0),
        };
        for p in [1.5, 3.0, 4.0] {
            let f = fit(&model, p, &DMatrix::zeros(0, 1), 1e-12).unwrap();
            assert!(f.converged);
            // derivative of Σ|b−c|^p vanishes at the optimum
            let c = f.coeffs[0];
            let d: f64 = data.iter().map(|&b: &f64| (b - c).signum() * (b - c).abs().powf(p - 1.0)).sum();
            assert!(d.abs() < 1e-8, "p = {p}: {d}");
        }
    }
}
