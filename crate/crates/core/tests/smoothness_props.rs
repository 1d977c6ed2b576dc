use coconvex::smoothness::{
    classical_modulus, dt_modulus, dt_modulus_convergence, symmetric_difference, weighted_dt_modulus, MeshPartition,
    ModulusSpec, StepMode,
};
use coconvex::{ChebyshevPolynomial, JacobiWeight};
use proptest::prelude::*;

fn poly(max_len: usize) -> impl Strategy<Value = ChebyshevPolynomial> {
    prop::collection::vec(-1.0f64..1.0, 1..=max_len).prop_map(|c| ChebyshevPolynomial::new(c).unwrap())
}

/// Round-off floor of a `k`-th difference of `f`: `2^k · sup|f| · 64ε`.
fn noise(f: &ChebyshevPolynomial, k: usize) -> f64 {
    let bound: f64 = f.coeffs().iter().map(|c| c.abs()).sum();
    64.0 * f64::EPSILON * 2f64.powi(k as i32) * bound
}

fn p_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY), 1.0f64..4.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn classical_modulus_monotone_in_delta(f in poly(8), k in 1usize..4, p in p_value(), d in 0.01f64..0.3, grow in 1.0f64..3.0) {
        let eps = noise(&f, k);
        let f = |x: f64| f.eval_unchecked(x);
        let lo = classical_modulus(f, k, d, p).unwrap();
        let hi = classical_modulus(f, k, d * grow, p).unwrap();
        prop_assert!(lo <= hi + eps, "{lo} > {hi}");
    }

    #[test]
    fn dt_modulus_monotone_in_t(f in poly(8), k in 1usize..4, p in p_value(), t in 0.01f64..0.3, grow in 1.0f64..2.0) {
        let spec = ModulusSpec::new(k, p);
        let eps = noise(&f, k);
        let f = |x: f64| f.eval_unchecked(x);
        let lo = dt_modulus(f, &spec, t).unwrap();
        let hi = dt_modulus(f, &spec, t * grow).unwrap();
        prop_assert!(lo <= hi + eps, "{lo} > {hi}");
    }

    #[test]
    fn sup_modulus_bounded_by_binomial_sum(f in poly(10), k in 1usize..5, d in 0.01f64..0.5) {
        let g = |x: f64| f.eval_unchecked(x);
        let sup = (0..=4000).map(|i| g(-1.0 + i as f64 / 2000.0).abs()).fold(0.0, f64::max);
        let sup = sup.max(f.extrema_on(-1.0, 1.0).max.abs()).max(f.extrema_on(-1.0, 1.0).min.abs());
        let w = classical_modulus(g, k, d, f64::INFINITY).unwrap();
        prop_assert!(w <= 2f64.powi(k as i32) * sup * (1.0 + 1e-12));
    }

    #[test]
    fn low_degree_annihilated(c in prop::collection::vec(-3.0f64..3.0, 1..4), p in p_value(), t in 0.05f64..0.5) {
        // degree c.len()-1 < k
        let k = c.len();
        let q = ChebyshevPolynomial::new(c).unwrap();
        let f = |x: f64| q.eval_unchecked(x);
        let spec = ModulusSpec::new(k, p);
        let mesh = MeshPartition::chebyshev(8).unwrap();
        prop_assert!(classical_modulus(f, k, t, p).unwrap() < 1e-12);
        prop_assert!(dt_modulus(f, &spec, t).unwrap() < 1e-12);
        prop_assert!(weighted_dt_modulus(f, &spec.with_weight(JacobiWeight::unit()), &mesh).unwrap() < 1e-12);
        prop_assert!(dt_modulus_convergence(f, &spec, t).unwrap().1 < 1e-12);
    }

    #[test]
    fn scaling(f in poly(8), c in -4.0f64..4.0, k in 1usize..4, p in p_value(), t in 0.05f64..0.4) {
        let spec = ModulusSpec::new(k, p);
        // annihilated low degree parts leave only round-off, which does not scale
        let eps = (1.0 + c.abs()) * noise(&f, k);
        let base = dt_modulus(|x| f.eval_unchecked(x), &spec, t).unwrap();
        let scaled = dt_modulus(|x| c * f.eval_unchecked(x), &spec, t).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * (c.abs() * base).max(1e-300) + eps);
        let base = classical_modulus(|x| f.eval_unchecked(x), k, t, p).unwrap();
        let scaled = classical_modulus(|x| c * f.eval_unchecked(x), k, t, p).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * (c.abs() * base).max(1e-300) + eps);
    }

    #[test]
    fn stencil_outside_domain_vanishes(x in -1.0f64..1.0, h in 0.01f64..1.0, k in 1usize..5) {
        let half = 0.5 * k as f64 * h;
        let v = symmetric_difference(|y: f64| y.exp(), x, h, k, StepMode::Constant);
        if x + half > 1.0 + 1e-12 || x - half < -1.0 - 1e-12 {
            prop_assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn second_modulus_of_square() {
    for d in [0.1, 0.25, 0.5] {
        let w = classical_modulus(|x| x * x, 2, d, f64::INFINITY).unwrap();
        assert!((w - 2.0 * d * d).abs() < 1e-12, "{w}");
    }
}

#[test]
fn dt_sup_modulus_of_square_brute_force() {
    // Δ²_{hφ}(x²) = 2h²φ(x)² on the admissible set; sup over h ≤ t and x
    let t = 0.3;
    let spec = ModulusSpec::new(2, f64::INFINITY);
    let w = dt_modulus(|x| x * x, &spec, t).unwrap();
    let mut brute = 0.0f64;
    for i in 0..=300 {
        let h = t * i as f64 / 300.0;
        for j in 0..=2000 {
            let x = -1.0 + j as f64 / 1000.0;
            brute = brute.max(symmetric_difference(|y| y * y, x, h, 2, StepMode::Phi).abs());
        }
    }
    assert!((w - brute).abs() <= 1e-6, "{w} vs {brute}");
    assert!((w - 2.0 * t * t).abs() <= 1e-6, "{w}");
}

#[test]
fn weighted_first_modulus_of_identity() {
    // ‖(1−x²)φ(x)·hφ(x)‖_∞ at h = 0.3 is 0.3·max (1−x²)^{3/2} = 0.3
    let mesh = MeshPartition::new(vec![-1.0, -0.7, -0.4, -0.1, 0.2, 0.5, 0.8, 1.0]).unwrap();
    assert!((mesh.mesh_norm() - 0.3).abs() < 1e-12);
    let spec = ModulusSpec::new(1, f64::INFINITY).with_weight(JacobiWeight::new(1.0, 1.0));
    let w = weighted_dt_modulus(|x| x, &spec, &mesh).unwrap();
    assert!((w - 0.3).abs() < 1e-9, "{w}");
}

#[test]
fn coarse_mesh_rejected() {
    let mesh = MeshPartition::chebyshev(4).unwrap();
    let spec = ModulusSpec::new(3, 2.0).with_weight(JacobiWeight::unit());
    assert!(weighted_dt_modulus(|x| x, &spec, &mesh).is_err());
}

#[test]
fn unit_weight_reduces_to_dt_modulus() {
    let mesh = MeshPartition::chebyshev(10).unwrap();
    let spec = ModulusSpec::new(2, 2.0);
    let f = |x: f64| (3.0 * x).sin();
    let a = weighted_dt_modulus(f, &spec.with_weight(JacobiWeight::unit()), &mesh).unwrap();
    let b = dt_modulus(f, &spec, mesh.mesh_norm()).unwrap();
    assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
}
