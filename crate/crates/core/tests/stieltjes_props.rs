use coconvex::stieltjes::{ls_integral, ls_sums, CellPartition, IntegralOptions, Integrator};
use coconvex::weighted_spaces::QuadratureRule;
use coconvex::{ChebyshevPolynomial, Func};
use proptest::prelude::*;

fn poly() -> impl Strategy<Value = ChebyshevPolynomial> {
    prop::collection::vec(-1.0f64..1.0, 1..7).prop_map(|c| ChebyshevPolynomial::new(c).unwrap())
}

fn breaks() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.999f64..0.999, 0..12).prop_map(|mut v| {
        v.push(-1.0);
        v.push(1.0);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_chain_tightens_sums(p in poly(), b in breaks(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..6)) {
        let f = |x: f64| p.eval_unchecked(x);
        let id = [Integrator::identity()];
        let mut part = CellPartition::new(b).unwrap();
        let mut prev = ls_sums(f, &part, &id).unwrap();
        prop_assert!(prev.lower <= prev.upper);
        for pick in picks {
            let cell = pick.index(part.len());
            part = part.refine_cells(&[cell]);
            let next = ls_sums(f, &part, &id).unwrap();
            prop_assert!(next.lower <= next.upper);
            prop_assert!(next.lower >= prev.lower - 1e-12, "lower fell {} -> {}", prev.lower, next.lower);
            prop_assert!(next.upper <= prev.upper + 1e-12, "upper rose {} -> {}", prev.upper, next.upper);
            prev = next;
        }
    }

    #[test]
    fn uniform_refinement_tightens_sums(p in poly(), cells in 1usize..20) {
        let f = |x: f64| p.eval_unchecked(x);
        let id = [Integrator::identity()];
        let mut part = CellPartition::uniform(-1.0, 1.0, cells).unwrap();
        let mut prev = ls_sums(f, &part, &id).unwrap();
        for _ in 0..4 {
            part = part.refine();
            let next = ls_sums(f, &part, &id).unwrap();
            prop_assert!(next.lower >= prev.lower - 1e-12 && next.upper <= prev.upper + 1e-12);
            prev = next;
        }
    }

    #[test]
    fn identity_integrator_matches_gauss_legendre(p in poly(), w in 0.5f64..3.0) {
        let f = |x: f64| (w * x).sin() + p.eval_unchecked(x);
        let tol = 1e-4;
        let v = ls_integral(f, (-1.0, 1.0), &[Integrator::identity()], IntegralOptions::new(tol))
            .unwrap()
            .value()
            .unwrap();
        let gl = QuadratureRule::gauss_legendre(40).unwrap().integrate(f);
        prop_assert!((v - gl).abs() <= 10.0 * tol, "{v} vs {gl}");
    }

    #[test]
    fn homogeneity(p in poly(), v in prop_oneof![Just(0.5), Just(2.0), Just(7.0)]) {
        let tol = 1e-4;
        let id = [Integrator::identity()];
        let opts = IntegralOptions::new(tol);
        let f = |x: f64| p.eval_unchecked(x);
        let base = ls_integral(f, (0.0, 1.0), &id, opts).unwrap().value().unwrap();
        let scaled = ls_integral(|x| v * f(x), (0.0, 1.0), &id, opts).unwrap().value().unwrap();
        prop_assert!((scaled - v * base).abs() <= 2.0 * tol);
    }

    #[test]
    fn additivity(p in poly(), q in poly()) {
        let tol = 1e-4;
        let id = [Integrator::identity()];
        let opts = IntegralOptions::new(tol);
        let f = |x: f64| p.eval_unchecked(x);
        let g = |x: f64| q.eval_unchecked(x);
        let sum = ls_integral(|x| f(x) + g(x), (0.0, 1.0), &id, opts).unwrap().value().unwrap();
        let a = ls_integral(f, (0.0, 1.0), &id, opts).unwrap().value().unwrap();
        let b = ls_integral(g, (0.0, 1.0), &id, opts).unwrap().value().unwrap();
        prop_assert!((sum - a - b).abs() <= 3.0 * tol);
    }
}

#[test]
fn nonlinear_integrator_on_constant() {
    // L(μ) = μ² on cells of length h: Σ h² = n·(2/n)² → 0 as n grows
    let sq = Integrator::new(Func::new(|m| m * m), 2.0).unwrap();
    let part = CellPartition::uniform(-1.0, 1.0, 8).unwrap();
    let s = ls_sums(|_| 1.0, &part, &[sq]).unwrap();
    assert!((s.lower - 0.5).abs() < 1e-14 && (s.upper - 0.5).abs() < 1e-14);
}

#[test]
fn decreasing_integrator_rejected() {
    assert!(Integrator::new(Func::new(|m| -m), 1.0).is_err());
}

#[test]
fn dirichlet_function_not_integrable() {
    let f = |x: f64| if ((x * 1e6).round() as i64) % 2 == 0 { 1.0 } else { 0.0 };
    let r = ls_integral(
        f,
        (0.0, 1.0),
        &[Integrator::identity()],
        IntegralOptions::new(1e-6).with_max_cells(4096),
    )
    .unwrap();
    assert!(!r.is_integrable());
}
