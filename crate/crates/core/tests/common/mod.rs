//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

use std::f64::consts::{E, PI};

// ------------------------------------------------------------- simpson

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || !delta.is_finite() || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `∫_{-1}^{1} g` where `g` may blow up like `(1+x)^{a}` and `(1-x)^{b}` with
/// `a, b > -1`: each half is mapped by `x = ∓1 ± t^q` so the endpoint
/// behaviour becomes bounded, then integrated adaptively. `g` receives
/// `(x, 1 + x, 1 - x)` with the endpoint distance computed exactly as `t^q`,
/// since forming `1 + x` after rounding `x` can give zero.
pub fn endpoint_simpson<F: Fn(f64, f64, f64) -> f64>(g: &F, a: f64, b: f64, tol: f64) -> f64 {
    let q = |e: f64| if e >= 0.0 { 1.0 } else { (3.0 / (e + 1.0)).ceil() };
    let (qa, qb) = (q(a), q(b));
    let left = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let d = t.powf(qa);
        g(-1.0 + d, d, 2.0 - d) * qa * t.powf(qa - 1.0)
    };
    let right = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let d = t.powf(qb);
        g(1.0 - d, 2.0 - d, d) * qb * t.powf(qb - 1.0)
    };
    // Large q crowds the samples near the endpoint, so start from fixed
    // panels to avoid a false early convergence.
    let panels = 64;
    let h = 1.0 / panels as f64;
    let piece_tol = 0.5 * tol / panels as f64;
    (0..panels)
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            simpson(&left, a, b, piece_tol) + simpson(&right, a, b, piece_tol)
        })
        .sum()
}

/// `‖(1+x)^α (1−x)^β f‖_p` on `[-1, 1]` for finite `p`.
pub fn weighted_norm_oracle<F: Fn(f64) -> f64>(f: &F, alpha: f64, beta: f64, p: f64, tol: f64) -> f64 {
    let g = |x: f64, l: f64, r: f64| (l.powf(alpha) * r.powf(beta) * f(x)).abs().powf(p);
    endpoint_simpson(&g, p * alpha, p * beta, tol).powf(1.0 / p)
}

// ---------------------------------------------------------- brute force

/// `max_{x ∈ grid} |f(x) − Σ c_j x^j|` on a uniform grid.
pub fn sup_error<F: Fn(f64) -> f64>(f: &F, c: &[f64], points: usize) -> f64 {
    (0..points)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
            let p = c.iter().rev().fold(0.0, |acc, &cj| acc * x + cj);
            (f(x) - p).abs()
        })
        .fold(0.0, f64::max)
}

/// Minimax error over power-basis coefficients found by shrinking box
/// search: each round scans a `side^n` lattice around the incumbent and then
/// narrows the box. Ends with a lattice step below `step`.
pub fn box_minimax<F: Fn(f64) -> f64>(f: &F, n: usize, radius: f64, step: f64) -> f64 {
    let side = match n {
        1 => 201,
        2 => 41,
        3 => 17,
        _ => 9,
    };
    let mut center = vec![0.0; n];
    let mut half = radius;
    let mut best = sup_error(f, &center, 401);
    loop {
        let h = 2.0 * half / (side - 1) as f64;
        let total = (side as u64).pow(n as u32);
        let mut incumbent = center.clone();
        for idx in 0..total {
            let mut k = idx;
            let c: Vec<f64> = (0..n)
                .map(|j| {
                    let i = (k % side as u64) as f64;
                    k /= side as u64;
                    center[j] - half + i * h
                })
                .collect();
            let e = sup_error(f, &c, 401);
            if e < best {
                best = e;
                incumbent = c;
            }
        }
        center = incumbent;
        if h < step {
            break;
        }
        half = 2.0 * h;
    }
    sup_error(f, &center, 20001)
}

// ------------------------------------------------------------- worked example

pub fn example_target(x: f64) -> f64 {
    (x.powi(4).exp()).cos().tan()
}

pub fn example_power(x: f64) -> f64 {
    x.powi(4) - E.powi(3)
}

pub fn example_piecewise(x: f64) -> f64 {
    let q = (x + 2.0) * (x + 1.0) * (x - 1.0) * (x - 2.0);
    if x > 1.005 && x < 1.981 {
        -q
    } else {
        q
    }
}

fn mapped_weight(x: f64) -> f64 {
    let u = (2.0 * x - 1.0) / 3.0;
    1.0 - u * u
}

/// `∫_{-1}^{2} (1 − u²)|f − p| dx` by adaptive Simpson: directly on
/// `[-1, 1]`, and on `[1, 2]` in `v = exp(x⁴)` over chunks of length `π`
/// that are not aligned with the oscillation. The tolerance is shared out in
/// proportion to chunk length.
pub fn example_distance_oracle(p: fn(f64) -> f64, tol: f64) -> f64 {
    let direct = |x: f64| mapped_weight(x) * (example_target(x) - p(x)).abs();
    let total = simpson(&direct, -1.0, 1.0, 0.1 * tol);
    let (v0, v1) = (1f64.exp(), 16f64.exp());
    let in_v = |v: f64| {
        let x = v.ln().powf(0.25);
        mapped_weight(x) * (v.cos().tan() - p(x)).abs() / (4.0 * v * x.powi(3))
    };
    let cuts = [1.005f64.powi(4).exp(), 1.981f64.powi(4).exp()];
    let chunk = PI;
    let per_len = 0.9 * tol / (v1 - v0);
    let mut a = v0;
    let mut acc = 0.0;
    let mut comp = 0.0;
    while a < v1 {
        let mut b = (a + chunk).min(v1);
        for &c in &cuts {
            if c > a && c < b {
                b = c;
            }
        }
        let piece = simpson(&in_v, a, b, per_len * (b - a));
        // Kahan summation over millions of chunks.
        let y = piece - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        a = b;
    }
    total + acc
}

// ------------------------------------------------------------ Fourier

/// `(1/n) Σ_{m<n} S_m(f)(x)` with coefficients from a fine trapezoid rule.
pub fn cesaro_mean_oracle<F: Fn(f64) -> f64>(f: &F, n: usize, x: f64) -> f64 {
    let pts = 4096;
    let coef = |k: usize| -> (f64, f64) {
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..pts {
            let t = -PI + 2.0 * PI * j as f64 / pts as f64;
            a += f(t) * (k as f64 * t).cos();
            b += f(t) * (k as f64 * t).sin();
        }
        (a * 2.0 / pts as f64, b * 2.0 / pts as f64)
    };
    let coeffs: Vec<(f64, f64)> = (0..n).map(coef).collect();
    let partial = |m: usize| -> f64 {
        let mut s = coeffs[0].0 / 2.0;
        for (k, &(ak, bk)) in coeffs.iter().enumerate().take(m + 1).skip(1) {
            s += ak * (k as f64 * x).cos() + bk * (k as f64 * x).sin();
        }
        s
    };
    (0..n).map(partial).sum::<f64>() / n as f64
}

// ------------------------------------------------------------- QP

/// `min ‖A c − b‖²` subject to `G c ≥ 0` by Hildreth's dual coordinate
/// ascent on the normal equations.
pub fn hildreth_qp(a: &[Vec<f64>], b: &[f64], g: &[Vec<f64>], sweeps: usize) -> Vec<f64> {
    let n = a[0].len();
    // Q = AᵀA, d = Aᵀb
    let mut q = vec![vec![0.0; n]; n];
    let mut d = vec![0.0; n];
    for (row, &bi) in a.iter().zip(b) {
        for i in 0..n {
            d[i] += row[i] * bi;
            for j in 0..n {
                q[i][j] += row[i] * row[j];
            }
        }
    }
    let qinv = invert(&q);
    let mat_vec = |m: &Vec<Vec<f64>>, v: &[f64]| -> Vec<f64> {
        m.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
    };
    let c0 = mat_vec(&qinv, &d);
    // c = c0 + Q⁻¹ Gᵀ λ, λ ≥ 0.
    let h: Vec<Vec<f64>> = g.iter().map(|gi| mat_vec(&qinv, gi)).collect();
    let mut lambda = vec![0.0; g.len()];
    let mut c = c0.clone();
    for _ in 0..sweeps {
        for i in 0..g.len() {
            let gi = &g[i];
            let slack: f64 = gi.iter().zip(&c).map(|(x, y)| x * y).sum();
            let denom: f64 = gi.iter().zip(&h[i]).map(|(x, y)| x * y).sum();
            if denom <= 0.0 {
                continue;
            }
            let new = (lambda[i] - slack / denom).max(0.0);
            let delta = new - lambda[i];
            if delta != 0.0 {
                for (cj, hj) in c.iter_mut().zip(&h[i]) {
                    *cj += delta * hj;
                }
                lambda[i] = new;
            }
        }
    }
    c
}

fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = a[r][col];
                if factor != 0.0 {
                    for k in 0..2 * n {
                        a[r][k] -= factor * a[col][k];
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Values of `T_0..T_{n-1}` at `x`.
pub fn chebyshev_row(x: f64, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n];
    if n > 0 {
        t[0] = 1.0;
    }
    if n > 1 {
        t[1] = x;
    }
    for k in 2..n {
        t[k] = 2.0 * x * t[k - 1] - t[k - 2];
    }
    t
}

/// Second derivatives of `T_0..T_{n-1}` at `x` by the ODE
/// `(1 − x²) T_k'' = x T_k' − k² T_k`, with `T_k' = k U_{k−1}`. At `±1`
/// the closed form `T_k''(±1) = (±1)^k k²(k² − 1)/3` is used instead.
pub fn chebyshev_second_row(x: f64, n: usize) -> Vec<f64> {
    if x.abs() == 1.0 {
        return (0..n)
            .map(|k| {
                let kf = k as f64;
                x.powi(k as i32) * kf * kf * (kf * kf - 1.0) / 3.0
            })
            .collect();
    }
    let mut u = vec![0.0; n.max(1)];
    u[0] = 1.0;
    if n > 1 {
        u[1] = 2.0 * x;
    }
    for k in 2..n {
        u[k] = 2.0 * x * u[k - 1] - u[k - 2];
    }
    let t = chebyshev_row(x, n);
    (0..n)
        .map(|k| {
            if k < 2 {
                return 0.0;
            }
            let kf = k as f64;
            let dt = kf * u[k - 1];
            (x * dt - kf * kf * t[k]) / (1.0 - x * x)
        })
        .collect()
}
