use proptest::prelude::*;
use schur_lab::geometry::{classify, ClassifyOptions};
use schur_lab::groups::{fourier_multiplier_norm_finite_cyclic, LieAlgebraBasis};
use schur_lab::harmonic::{solve_t, t_residual};
use schur_lab::matcore::{
    multiplier_norm_lower_bound, random_unitary, schatten_norm, schur_product, DenseMatrix, C64,
};
use schur_lab::rng::rng_for;
use schur_lab::symbols::{evaluate_symbol, SymbolSpec};

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY), 1.0f64..8.0]
}

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), rows * cols).prop_map(move |v| {
        DenseMatrix::new(rows, cols, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap()
    })
}

fn pair() -> impl Strategy<Value = (DenseMatrix, DenseMatrix)> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| (complex_matrix(r, c), complex_matrix(r, c)))
}

fn zero_one(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(any::<bool>(), rows * cols).prop_map(move |v| {
        DenseMatrix::new(rows, cols, v.into_iter().map(|b| C64::new(f64::from(u8::from(b)), 0.0)).collect()).unwrap()
    })
}

fn builtins() -> Vec<SymbolSpec> {
    vec![
        SymbolSpec::ball(1, 1.0).unwrap(),
        SymbolSpec::ball(2, 1.0).unwrap(),
        SymbolSpec::ball(3, 0.8).unwrap(),
        SymbolSpec::halfspace(vec![1.0, -0.5], vec![0.3, 2.0], 0.1).unwrap(),
        SymbolSpec::toeplitz_ball(2, 0.5).unwrap(),
        SymbolSpec::triangular(1.0).unwrap(),
        SymbolSpec::sphere_delta(1, 0.5).unwrap(),
        SymbolSpec::sphere_delta(2, 0.3).unwrap(),
        SymbolSpec::sphere_delta(3, 0.0).unwrap(),
    ]
}

fn point_in(spec: &SymbolSpec, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = spec.domain();
    let lerp = |(lo, hi): (f64, f64), t: f64| lo + (hi - lo) * t;
    let x = d.x.iter().zip(u).map(|(b, t)| lerp(*b, *t)).collect();
    let y = d.y.iter().zip(&u[d.x.len()..]).map(|(b, t)| lerp(*b, *t)).collect();
    (x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn schatten_triangle_inequality((a, b) in pair(), p in exponent()) {
        let lhs = schatten_norm(&a.add(&b).unwrap(), p).unwrap();
        let rhs = schatten_norm(&a, p).unwrap() + schatten_norm(&b, p).unwrap();
        prop_assert!(rhs - lhs >= -1e-9, "{lhs} > {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schatten_unitary_invariance(n in 1usize..7, seed in any::<u64>(), p in exponent()) {
        let mut rng = rng_for(seed, 0);
        let a = DenseMatrix::from_fn(n, n, |i, j| C64::new((i as f64 - j as f64).sin(), (i * j) as f64 * 0.1));
        let a = a.add(&random_unitary(n, &mut rng)).unwrap();
        let u = random_unitary(n, &mut rng);
        let v = random_unitary(n, &mut rng);
        let uav = u.matmul(&a).unwrap().matmul(&v).unwrap();
        let before = schatten_norm(&a, p).unwrap();
        prop_assert!((schatten_norm(&uav, p).unwrap() - before).abs() <= 1e-8 * before.max(1.0));
    }

    #[test]
    fn schur_idempotence_and_bilinearity(
        (m, a, b) in (1usize..8, 1usize..8).prop_flat_map(|(r, c)| (zero_one(r, c), complex_matrix(r, c), complex_matrix(r, c))),
        s in -2.0f64..2.0,
    ) {
        let once = schur_product(&m, &a).unwrap();
        prop_assert_eq!(schur_product(&m, &once).unwrap(), once);
        let combo = a.add(&b.scale(s)).unwrap();
        let lhs = schur_product(&m, &combo).unwrap();
        let rhs = schur_product(&m, &a).unwrap().add(&schur_product(&m, &b).unwrap().scale(s)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn p2_bound_is_sup_and_monotone_in_budget(
        m in (2usize..10, 2usize..10).prop_flat_map(|(r, c)| zero_one(r, c)),
        seed in any::<u64>(),
    ) {
        let sup = m.max_abs();
        prop_assert!((multiplier_norm_lower_bound(&m, 2.0, 2, seed).unwrap() - sup).abs() <= 1e-9);
        let mut last = 0.0;
        for budget in 1..5 {
            let v = multiplier_norm_lower_bound(&m, 4.0, budget, seed).unwrap();
            prop_assert!(v >= last, "budget {budget}: {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn transference_bound_ordering(
        n in 2usize..17,
        seed in any::<u64>(),
        p in prop_oneof![Just(4.0 / 3.0), Just(4.0), 1.2f64..6.0],
    ) {
        let mut rng = rng_for(seed, 1);
        let m: Vec<C64> = (0..n).map(|_| C64::new(f64::from(u8::from(rand::Rng::random_bool(&mut rng, 0.5))), 0.0)).collect();
        let r = fourier_multiplier_norm_finite_cyclic(&m, p, 2, seed).unwrap();
        prop_assert!(r.fourier_lb <= r.schur_lb * (1.0 + 1e-9) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn solve_t_constraint(
        d in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = rng_for(seed, 2);
        let mut draw = || -> Vec<f64> {
            (0..d).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect()
        };
        let (n1, n2) = (draw(), draw());
        prop_assume!(n1.iter().any(|v| *v != 0.0) && n2.iter().any(|v| *v != 0.0));
        let t = solve_t(&n1, &n2).unwrap();
        prop_assert!(t_residual(&t, &n1, &n2) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradients_match_finite_differences(u in prop::collection::vec(0.02f64..0.98, 6)) {
        for spec in builtins() {
            let (x, y) = point_in(&spec, &u);
            let (gx, gy) = spec.raw_gradient(&x, &y);
            let (fx, fy) = spec.fd_gradient(&x, &y);
            let analytic: Vec<f64> = gx.iter().chain(&gy).copied().collect();
            let numeric: Vec<f64> = fx.iter().chain(&fy).copied().collect();
            prop_assert_eq!((gx.len(), gy.len()), (spec.m_dim(), spec.n_dim()));
            let scale = analytic.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            let err = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-6 * scale, "{}: {err:e}", spec.id());
        }
    }

    #[test]
    fn symbol_is_zero_one(u in prop::collection::vec(0.0f64..1.0, 6)) {
        for spec in builtins() {
            let (x, y) = point_in(&spec, &u);
            let v = evaluate_symbol(&spec, &x, &y).unwrap();
            prop_assert!(v == 0 || v == 1);
            prop_assert_eq!(v * v, v);
        }
    }
}

#[test]
fn builtin_structure_constants_satisfy_jacobi() {
    for name in ["sl2", "so3", "heisenberg3", "aff", "abelian4"] {
        let alg = LieAlgebraBasis::builtin(name).unwrap();
        assert!(alg.jacobi_defect() <= 1e-10, "{name}");
    }
}

#[test]
fn classify_is_symmetric_under_swap() {
    for spec in builtins() {
        let (x, y) = point_in(&spec, &[0.5; 6]);
        let Ok(pt) = schur_lab::geometry::project_point(&spec, &x, &y) else { continue };
        let opts = ClassifyOptions::with_seed(11);
        let a = classify(&spec, &pt.x, &pt.y, &opts).unwrap();
        let b = classify(&spec.swapped(), &pt.y, &pt.x, &opts).unwrap();
        assert_eq!(a.verdict, b.verdict, "{}", spec.id());
    }
}
