use nalgebra::DMatrix;
use proptest::prelude::*;

use nopo_lqg::gaussian::{
    epr_variance, is_physical, log_negativity, partial_transpose, symmetric_family_invariants,
    symplectic_eigenvalues, symplectic_form, two_mode_blocks, von_neumann_entropy, CovarianceMatrix,
    TwoModeBlocks,
};

fn random_pd(entries: Vec<f64>, scale: f64) -> CovarianceMatrix {
    let a = DMatrix::from_vec(4, 4, entries) * scale;
    CovarianceMatrix::new(&a * a.transpose() + DMatrix::identity(4, 4) * 1e-3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn physicality_matches_symplectic_spectrum(
        entries in prop::collection::vec(-1.0f64..1.0, 16),
        scale in 0.2f64..1.2,
    ) {
        let v = random_pd(entries, scale);
        let nu_min = symplectic_eigenvalues(&v).unwrap().min();
        prop_assume!((nu_min - 0.5).abs() > 1e-6);
        prop_assert_eq!(is_physical(&v, 1e-9), nu_min >= 0.5 - 1e-9);
    }

    #[test]
    fn symmetric_family_log_negativity_matches_invariant_formula(
        g_q in 0.5f64..3.0,
        g_p in 0.5f64..3.0,
        s in 0.0f64..1.0,
        t in 0.0f64..1.0,
    ) {
        let s_q = s * (g_q - 0.25);
        let s_p = -t * (g_p - 0.25);
        let blocks = TwoModeBlocks::symmetric(g_q, g_p, s_q, s_p);
        let v = blocks.assemble();
        prop_assume!(is_physical(&v, 0.0));
        let (_, _, nu_pt) = symmetric_family_invariants(&blocks);
        let closed = (-(2.0 * nu_pt).log2()).max(0.0);
        prop_assert!((log_negativity(&v).unwrap() - closed).abs() <= 1e-10);
    }

    #[test]
    fn epr_variance_is_theta_independent_on_symmetric_family(
        g in 0.5f64..3.0,
        s in 0.0f64..1.0,
    ) {
        let v = TwoModeBlocks::symmetric(g, g, s * (g - 0.25), -s * (g - 0.25)).assemble();
        let values: Vec<f64> = (0..100)
            .map(|k| epr_variance(&v, std::f64::consts::PI * k as f64 / 100.0).unwrap())
            .collect();
        let spread = values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - values.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(spread <= 1e-10);
    }

    #[test]
    fn entropy_vanishes_exactly_for_pure_states(r in 0.0f64..1.5, nu in 0.5f64..2.0) {
        let (c, s) = (r.cosh(), r.sinh());
        let v = TwoModeBlocks::symmetric(nu * c, nu * c, nu * s, -nu * s).assemble();
        let entropy = von_neumann_entropy(&v).unwrap();
        let spectrum = symplectic_eigenvalues(&v).unwrap();
        let pure = spectrum.values.iter().all(|x| (x - 0.5).abs() <= 1e-8);
        prop_assert_eq!(pure, entropy <= 1e-8, "nu = {}, S = {}", nu, entropy);
    }

    #[test]
    fn partial_transpose_is_an_involution(entries in prop::collection::vec(-1.0f64..1.0, 16)) {
        let v = random_pd(entries, 1.0);
        let twice = partial_transpose(&partial_transpose(&v, 1).unwrap(), 1).unwrap();
        prop_assert_eq!(twice, v);
    }

    #[test]
    fn block_roundtrip_is_exact(entries in prop::collection::vec(-1.0f64..1.0, 16)) {
        let v = random_pd(entries, 1.0);
        prop_assert_eq!(two_mode_blocks(&v).unwrap().assemble(), v);
    }

    #[test]
    fn physical_spectra_respect_the_vacuum_bound(r in 0.0f64..2.0, n1 in 0.5f64..3.0, n2 in 0.5f64..3.0) {
        let (c, s) = (r.cosh(), r.sinh());
        // Two thermal modes mixed by a two-mode squeezer.
        let squeeze = nalgebra::dmatrix![
            c, 0.0, s, 0.0;
            0.0, c, 0.0, -s;
            s, 0.0, c, 0.0;
            0.0, -s, 0.0, c
        ];
        let thermal = DMatrix::from_diagonal(&nalgebra::dvector![n1, n1, n2, n2]);
        let v = CovarianceMatrix::new(&squeeze * thermal * squeeze.transpose()).unwrap();
        prop_assert!(is_physical(&v, 1e-9));
        let mut got = symplectic_eigenvalues(&v).unwrap().values;
        got.sort_by(f64::total_cmp);
        let mut want = vec![n1, n2];
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9 * w.max(1.0));
        }
    }
}

#[test]
fn symplectic_form_is_orthogonal_and_antisymmetric() {
    for n in 1..=4 {
        let s = symplectic_form(n);
        assert_eq!(s.transpose(), -&s);
        assert_eq!(&s * s.transpose(), DMatrix::identity(2 * n, 2 * n));
        assert_eq!(&s * &s, -DMatrix::identity(2 * n, 2 * n));
    }
}

#[test]
fn separable_product_states_have_no_negativity() {
    for (a, b) in [(0.5, 0.5), (0.7, 1.3), (2.0, 0.6)] {
        let v = TwoModeBlocks {
            gamma1: nalgebra::Matrix2::new(a, 0.0, 0.0, 0.25 / a),
            gamma2: nalgebra::Matrix2::new(b, 0.1, 0.1, 1.0),
            sigma: nalgebra::Matrix2::zeros(),
        }
        .assemble();
        assert_eq!(log_negativity(&v).unwrap(), 0.0);
    }
}

#[test]
fn sub_vacuum_matrix_is_rejected_by_entropy() {
    let v = CovarianceMatrix::new(DMatrix::identity(4, 4) * 0.25).unwrap();
    assert!(!is_physical(&v, 1e-9));
    assert!(von_neumann_entropy(&v).is_err());
}
