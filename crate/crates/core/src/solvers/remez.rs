//! Remez exchange polish for the unconstrained weighted minimax problem.
//!
//! The discrete LP optimum on a grid is a close starting point; a few exchange
//! steps move it to the continuous equioscillating solution. The polished
//! coefficients are only kept when they lower the refined sup norm.

use nalgebra::{DMatrix, DVector};

use crate::weighted_spaces::{chebyshev_grid, golden_max, JacobiWeight};

const MAX_SWEEPS: usize = 30;

struct Extremum {
    x: f64,
    e: f64,
}

fn cheb_sum(c: &[f64], u: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * u * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    u * b1 - b2 + c.first().copied().unwrap_or(0.0)
}

/// Signed local extrema of the weighted error and the largest magnitude.
fn extrema<F: Fn(f64) -> f64>(f: &F, w: JacobiWeight, c: &[f64], grid: &[f64]) -> (Vec<Extremum>, f64) {
    let err = |u: f64| w.eval(u) * (f(u) - cheb_sum(c, u));
    let vals: Vec<f64> = grid.iter().map(|&u| err(u)).collect();
    let last = vals.len() - 1;
    let mut out = Vec::new();
    let mut top = 0.0f64;
    for k in 0..vals.len() {
        let a = vals[k].abs();
        let left = if k > 0 { vals[k - 1].abs() } else { -1.0 };
        let right = if k < last { vals[k + 1].abs() } else { -1.0 };
        if a == 0.0 || a < left || a < right {
            continue;
        }
        let s = vals[k].signum();
        let (x, v) = golden_max(&|u| s * err(u), grid[k.saturating_sub(1)], grid[(k + 1).min(last)], 60);
        let (x, v) = if v.is_finite() && v > a { (x, v) } else { (grid[k], a) };
        top = top.max(v);
        out.push(Extremum { x, e: s * v });
    }
    (out, top)
}

/// Picks `m` alternating extrema, preferring large magnitudes.
fn alternating(cand: Vec<Extremum>, m: usize) -> Option<Vec<Extremum>> {
    let mut out: Vec<Extremum> = Vec::with_capacity(cand.len());
    for c in cand {
        match out.last_mut() {
            Some(l) if l.e.signum() == c.e.signum() => {
                if c.e.abs() > l.e.abs() {
                    *l = c;
                }
            }
            _ => out.push(c),
        }
    }
    while out.len() > m {
        let last = out.len() - 1;
        if out.len() - m == 1 {
            if out[0].e.abs() < out[last].e.abs() {
                out.remove(0);
            } else {
                out.pop();
            }
            continue;
        }
        let i = (0..out.len()).min_by(|&a, &b| out[a].e.abs().total_cmp(&out[b].e.abs())).unwrap();
        if i == 0 {
            out.remove(0);
        } else if i == last {
            out.pop();
        } else {
            let j = if out[i - 1].e.abs() < out[i + 1].e.abs() { i - 1 } else { i + 1 };
            out.remove(i.max(j));
            out.remove(i.min(j));
        }
    }
    (out.len() == m).then_some(out)
}

/// Refined sup norm of `w (f − Σ c_j T_j)` on the grid.
#[cfg(test)]
pub(crate) fn weighted_sup<F: Fn(f64) -> f64>(f: &F, w: JacobiWeight, c: &[f64], grid_size: usize) -> f64 {
    extrema(f, w, c, &chebyshev_grid(grid_size)).1
}

/// Returns improved coefficients, or `None` when the exchange does not beat
/// `start`. `f` is the target in the unit variable.
pub(crate) fn polish<F: Fn(f64) -> f64>(f: &F, w: JacobiWeight, start: &[f64], grid_size: usize) -> Option<Vec<f64>> {
    let n = start.len();
    let grid = chebyshev_grid(grid_size);
    let (mut ext, start_sup) = extrema(f, w, start, &grid);
    if start_sup == 0.0 {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..MAX_SWEEPS {
        let reference = alternating(ext, n + 1)?;
        let mut mat = DMatrix::zeros(n + 1, n + 1);
        let mut rhs = DVector::zeros(n + 1);
        for (i, r) in reference.iter().enumerate() {
            let wi = w.eval(r.x);
            let (mut t0, mut t1) = (1.0, r.x);
            for j in 0..n {
                let tj = match j {
                    0 => 1.0,
                    1 => r.x,
                    _ => {
                        let t2 = 2.0 * r.x * t1 - t0;
                        t0 = t1;
                        t1 = t2;
                        t2
                    }
                };
                mat[(i, j)] = wi * tj;
            }
            mat[(i, n)] = r.e.signum();
            rhs[i] = wi * f(r.x);
        }
        let sol = mat.lu().solve(&rhs)?;
        let c: Vec<f64> = sol.iter().take(n).copied().collect();
        if c.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let level = sol[n].abs();
        let (next, sup) = extrema(f, w, &c, &grid);
        ext = next;
        if best.as_ref().is_none_or(|(b, _)| sup < *b) {
            best = Some((sup, c));
        }
        if sup - level <= 1e-14 * sup {
            break;
        }
    }
    best.filter(|(s, _)| *s < start_sup).map(|(_, c)| c)
}
