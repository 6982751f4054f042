use dynamo_core::grid::{diffusion_alpha, inner_product_real, laplacian_l};
use dynamo_core::mat2::{identity, sharp, C2};
use dynamo_core::nogo::{k_inverse, k_matrix, structure_functions, AlphaPair, GaugeChoice};
use dynamo_core::operator::j_symmetry_residual;
use dynamo_core::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn poly_profile() -> impl Strategy<Value = AlphaProfile> {
    prop::collection::vec(-3.0..3.0f64, 1..4).prop_map(AlphaProfile::polynomial)
}

fn positive_poly() -> impl Strategy<Value = AlphaProfile> {
    (0.5..3.0f64, -0.4..0.4f64, 0.0..1.0f64).prop_map(|(a, b, c)| AlphaProfile::polynomial(vec![a, b, c]))
}

fn c2() -> impl Strategy<Value = C2> {
    prop::collection::vec(-5.0..5.0f64, 8).prop_map(|v| {
        C2::new(
            Complex64::new(v[0], v[1]),
            Complex64::new(v[2], v[3]),
            Complex64::new(v[4], v[5]),
            Complex64::new(v[6], v[7]),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assembly_is_exactly_j_symmetric(alpha in poly_profile(), l in 1u32..5, n in 8usize..60) {
        let grid = build_grid(n).unwrap();
        let m = DynamoMatrix::assemble(&grid, &alpha, l).unwrap();
        prop_assert_eq!(m.pseudo_hermiticity_residual(), 0.0);
        prop_assert_eq!(j_symmetry_residual(m.matrix()), 0.0);
    }

    #[test]
    fn diffusion_operator_is_green_symmetric(
        alpha in positive_poly(),
        l in 1u32..4,
        seed in prop::collection::vec(-1.0..1.0f64, 64),
    ) {
        let grid = build_grid(32).unwrap();
        let q = diffusion_alpha(&grid, &alpha, l).unwrap();
        let (f, g) = seed.split_at(32);
        let lhs = inner_product_real(&grid, f, &q.apply(g)).unwrap();
        let rhs = inner_product_real(&grid, &q.apply(f), g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * q.norm_inf());
    }

    #[test]
    fn diffusion_is_linear_in_alpha(alpha in positive_poly(), c in 0.1..10.0f64, l in 1u32..4) {
        let grid = build_grid(24).unwrap();
        let x: Vec<f64> = grid.nodes().iter().map(|r| (3.0 * r).sin()).collect();
        let a = diffusion_alpha(&grid, &alpha.scaled(c), l).unwrap().apply(&x);
        let b = diffusion_alpha(&grid, &alpha, l).unwrap().apply(&x);
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - c * v).abs() <= 1e-12 * (c * v).abs().max(1.0));
        }
    }

    #[test]
    fn unit_profile_diffusion_is_minus_laplacian(l in 1u32..5, n in 8usize..50) {
        let grid = build_grid(n).unwrap();
        let q = diffusion_alpha(&grid, &AlphaProfile::constant(1.0), l).unwrap();
        let lap = laplacian_l(&grid, l).unwrap().scaled(-1.0);
        let x: Vec<f64> = (0..n).map(|j| ((j * 7 % 11) as f64) - 5.0).collect();
        prop_assert_eq!(q.apply(&x), lap.apply(&x));
    }

    #[test]
    fn sharp_is_an_antimultiplicative_involution(a in c2(), b in c2()) {
        prop_assert_eq!(sharp(&sharp(&a)), a);
        let d = sharp(&(a * b)) - sharp(&b) * sharp(&a);
        prop_assert!(d.iter().all(|z| z.norm() <= 1e-12 * 100.0));
    }

    #[test]
    fn k_inverse_is_exact(alpha in -10.0..10.0f64) {
        prop_assert_eq!(k_matrix(alpha) * k_inverse(alpha), identity());
        prop_assert_eq!(k_inverse(alpha) * k_matrix(alpha), identity());
    }

    #[test]
    fn rho_shift_by_one_adds_two_over_r_squared(
        t0 in 0.1..1.0f64,
        t1 in 1.1..2.0f64,
        l1 in 2u32..6,
        r in 0.1..1.0f64,
    ) {
        let pair = AlphaPair::new(
            AlphaProfile::polynomial(vec![1.0, 0.0, t0]),
            AlphaProfile::polynomial(vec![1.0, 0.0, t1]),
            l1 - 1,
            l1,
            0.0,
        ).unwrap();
        let gauge = GaugeChoice::default();
        let a = structure_functions(&pair, &gauge).rho(r).unwrap();
        let b = structure_functions(&pair.with_l1(l1 + 1), &gauge).rho(r).unwrap();
        prop_assert!((b - a - 2.0 / (r * r)).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn analytic_profile_derivatives_agree_with_differences(
        coeffs in prop::collection::vec(-2.0..2.0f64, 1..4),
        scale in 0.2..3.0f64,
        rate in -2.0..2.0f64,
        r in 0.05..0.95f64,
    ) {
        let poly = AlphaProfile::polynomial(coeffs);
        prop_assert!(poly.derivative_consistency(&[r]) <= 1e-8);
        let exp = AlphaProfile::exponential(scale, rate);
        prop_assert!(exp.derivative_consistency(&[r]) <= 1e-8);
    }

    #[test]
    fn spline_profile_derivatives_agree_with_differences(w in 0.5..3.0f64, r in 0.05..0.95f64) {
        let xs: Vec<f64> = (0..=50).map(|k| k as f64 / 50.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 0.5 * (w * x).sin()).collect();
        let spline = AlphaProfile::from_samples(xs, ys).unwrap();
        prop_assert!(spline.derivative_consistency(&[r]) <= 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectrum_is_closed_under_conjugation(alpha in poly_profile(), c in 0.5..12.0f64, n in 8usize..30) {
        let grid = build_grid(n).unwrap();
        let m = DynamoMatrix::assemble(&grid, &alpha.scaled(c), 1).unwrap();
        let spec = eigen(&m, false).unwrap();
        let scale = spec.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(spec.conjugation_defect() <= 1e-10 * scale);
        for (i, tag) in spec.classification.iter().enumerate() {
            if let PairTag::ConjugatePair(j) = tag {
                prop_assert_eq!(spec.classification[*j], PairTag::ConjugatePair(i));
                prop_assert!(spec.eigenvalues[*j] == spec.eigenvalues[i].conj());
            }
        }
    }
}
