use proptest::prelude::*;

use ozkit::algebra::{AlgebraShape, Element, Tolerances};
use ozkit::bullet::build_bullet;
use ozkit::io::ElementJson;
use ozkit::optim::OptimBudget;
use ozkit::order_units::{min_scale, scaling_factor};
use ozkit::ozmaps::{choi_matrix, is_order_zero, OrderZeroVerdict};
use ozkit::random::{self, OrderZeroOptions, OrderZeroSample};
use ozkit::subspace::Subspace;

fn tol() -> Tolerances {
    Tolerances::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bullet_norm_is_homogeneous(seed in any::<u64>(), lambda in -4.0f64..4.0) {
        prop_assume!(lambda.abs() > 1e-3);
        let mut rng = random::rng(seed);
        let (x, e) = random::bullet_instance::<f64, _>(&mut rng, &tol()).unwrap();
        let s = build_bullet(&x, &e, &tol()).unwrap();
        let v = random::in_subspace(&mut rng, &x);
        let n = s.bullet_norm(&v).unwrap();
        let scaled = s.bullet_norm(&v.scale_real(lambda)).unwrap();
        prop_assert!((scaled - lambda.abs() * n).abs() <= 1e-12 * scaled.max(1.0));
    }

    #[test]
    fn product_is_bilinear_and_distributes(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (x, e) = random::bullet_instance::<f64, _>(&mut rng, &tol()).unwrap();
        let s = build_bullet(&x, &e, &tol()).unwrap();
        let (a, b, c) = (random::in_subspace(&mut rng, &x), random::in_subspace(&mut rng, &x), random::in_subspace(&mut rng, &x));
        let lhs = s.product(&a, &(&b + &c));
        let rhs = &s.product(&a, &b) + &s.product(&a, &c);
        prop_assert!((&lhs - &rhs).operator_norm() <= 1e-10 * (1.0 + rhs.operator_norm()));
        // the product stays inside X
        prop_assert!(x.contains(&lhs, 1e-9).member);
    }

    #[test]
    fn diagonal_scaling_factor_is_inverse_min_entry(d in prop::collection::vec(0.05f64..1.0, 1..5)) {
        let n = d.len();
        let sh = AlgebraShape::diagonal(n);
        let e = Element::<f64>::real_diagonal(&sh, &d).unwrap();
        let basis = (0..n).map(|k| Element::matrix_unit(&sh, k, 0, 0)).collect();
        let x = Subspace::new(&sh, basis, &tol()).unwrap();
        let sf = scaling_factor(&e, &x, &OptimBudget::light(), &tol()).unwrap();
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((sf.estimate - 1.0 / min).abs() <= 1e-9 * sf.estimate);
    }

    #[test]
    fn min_scale_dominates(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (x, e) = random::bullet_instance::<f64, _>(&mut rng, &tol()).unwrap();
        let v = random::self_adjoint_in_subspace(&mut rng, &x);
        let r = min_scale(&e, &v, &tol()).unwrap().expect("e is an order unit for X");
        let gap = &e.scale_real(r) - &v;
        prop_assert!(ozkit::algebra::is_positive(&gap, 1e-9));
    }

    #[test]
    fn kraus_maps_have_psd_choi(seed in any::<u64>(), terms in 1usize..4) {
        let mut rng = random::rng(seed);
        let dom = AlgebraShape::new(vec![1, 2]).unwrap();
        let cod = AlgebraShape::new(vec![2, 2]).unwrap();
        let k = random::kraus_map::<f64, _>(&mut rng, &dom, &cod, terms);
        prop_assert!(choi_matrix(&k).min_eigenvalue >= -1e-10);
    }

    #[test]
    fn generated_maps_are_order_zero(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let smp = OrderZeroSample::<f64>::random(&mut rng, &OrderZeroOptions::default(), &tol()).unwrap();
        let r = is_order_zero(&smp.theta, true, 8, seed, &tol());
        prop_assert_eq!(r.verdict, OrderZeroVerdict::OrderZero);
    }

    #[test]
    fn element_json_round_trips(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let sh = AlgebraShape::new(vec![1, 3, 2]).unwrap();
        let a = random::element::<f64, _>(&mut rng, &sh);
        let text = serde_json::to_string(&ElementJson::from_element(&a)).unwrap();
        let back: Element<f64> = serde_json::from_str::<ElementJson>(&text).unwrap().to_element().unwrap();
        prop_assert_eq!(a, back);
    }
}
