use num_complex::Complex64;
use preamp_core::amplifiers::{k_amplifier_apply, number_amplify};
use preamp_core::fock::{anti_normal_element, anti_normal_operator, ladder_operators};
use preamp_core::grid::{default_grid, fock_to_grid, grid_to_fock};
use preamp_core::heterodyne::q_function;
use preamp_core::verification::stirling::stirling_first_kind;
use preamp_core::{
    expectation, number_operator, DensityOperator, FockDim, PhaseSpacePolynomial, StateVector,
};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn small_state() -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6).prop_filter_map("non-zero", |v| {
        let amps: Vec<Complex64> = v.into_iter().map(|(a, b)| c(a, b)).collect();
        (amps.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3).then(|| StateVector::from_slice(&amps).unwrap())
    })
}

fn poly() -> impl Strategy<Value = PhaseSpacePolynomial> {
    prop::collection::vec(((0u32..3, 0u32..3), (-1.0f64..1.0, -1.0f64..1.0)), 1..4)
        .prop_map(|t| PhaseSpacePolynomial::from_terms(t.into_iter().map(|(k, (a, b))| (k, c(a, b)))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smearing_is_a_semigroup(p in poly(), a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let twice = p.gaussian_smear(a).gaussian_smear(b);
        let once = p.gaussian_smear(a + b);
        for (m, n, v) in twice.terms() {
            prop_assert!((v - once.coefficient(m, n)).norm() < 1e-10);
        }
        prop_assert_eq!(twice.len(), once.len());
    }

    #[test]
    fn rotation_composes_and_evaluates(p in poly(), x in -2.0f64..2.0, y in -2.0f64..2.0, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let alpha = c(x, y);
        let lhs = p.rotate(t1).rotate(t2).eval(alpha);
        let rhs = p.eval(alpha * Complex64::from_polar(1.0, t1 + t2));
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn polynomial_product_evaluates_pointwise(p in poly(), q in poly(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let alpha = c(x, y);
        prop_assert!((p.mul(&q).eval(alpha) - p.eval(alpha) * q.eval(alpha)).norm() < 1e-10);
    }

    #[test]
    fn antinormal_matrix_matches_elements(p in poly()) {
        let d = FockDim::new(10).unwrap();
        let op = anti_normal_operator(&p, d).unwrap();
        for r in 0..10 {
            for s in 0..10 {
                prop_assert!((op.matrix[(r, s)] - anti_normal_element(&p, r, s)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn number_amplifier_is_an_isometry(psi in small_state(), g in 1u32..6) {
        let rho = psi.density();
        let out = number_amplify(&rho, g).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(out.hermiticity_residual() < 1e-15);
        let n_in = expectation(&number_operator(FockDim::new(rho.dim()).unwrap()), &rho).unwrap().re;
        let n_out = expectation(&number_operator(FockDim::new(out.dim()).unwrap()), &out).unwrap().re;
        prop_assert!((n_out - g as f64 * n_in).abs() < 1e-10);
    }

    #[test]
    fn q_function_is_bounded_by_one_over_pi(psi in small_state(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let q = q_function(&psi.density(), c(x, y)).unwrap();
        prop_assert!((0.0..=1.0 / std::f64::consts::PI + 1e-12).contains(&q));
    }

    #[test]
    fn stirling_rows_sum_to_zero(l in 2usize..25) {
        // Σ_k s_l^{(k)} = (1)_l falling = 0 for l ≥ 2
        let t = stirling_first_kind(l).unwrap();
        prop_assert_eq!(t.rows()[l].iter().sum::<i128>(), 0);
        prop_assert_eq!(t.get(l, l), 1);
        prop_assert_eq!(t.get(l, 0), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn grid_roundtrip_preserves_fock_content(psi in small_state()) {
        let grid = default_grid();
        let back = grid_to_fock(&fock_to_grid(&psi, &grid).unwrap(), 6).unwrap();
        for (a, b) in psi.amplitudes().iter().zip(back.amplitudes().iter()) {
            prop_assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn k_amplifier_preserves_norm(psi in small_state(), g in 1.5f64..8.0) {
        let grid = default_grid();
        let out = k_amplifier_apply(&fock_to_grid(&psi, &grid).unwrap(), g).unwrap();
        prop_assert!(out.norm_drift() < 1e-6);
    }
}

#[test]
fn truncated_ladder_commutator() {
    let d = FockDim::new(12).unwrap();
    let (a, ad) = ladder_operators(d);
    let comm = &a.matrix * &ad.matrix - &ad.matrix * &a.matrix;
    for n in 0..11 {
        assert!((comm[(n, n)] - c(1.0, 0.0)).norm() < 1e-13);
    }
    assert!((comm[(11, 11)] - c(-11.0, 0.0)).norm() < 1e-12);
}

#[test]
fn density_validation_rejects_bad_input() {
    let d = FockDim::new(3).unwrap();
    let mut m = StateVector::number(1, d).unwrap().density().matrix().clone();
    m[(0, 1)] += c(0.1, 0.0);
    assert!(DensityOperator::new(m).is_err());
    let mixed = DensityOperator::diagonal_state(&[0.5, 1.5]).unwrap();
    assert_eq!(mixed.populations(), vec![0.25, 0.75]);
    assert!(DensityOperator::diagonal_state(&[1.2, -0.2]).is_err());
}
