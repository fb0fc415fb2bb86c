use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nopo_lqg::dynamics::{integrate_moments, is_hurwitz, lyapunov_residual, lyapunov_steady};
use nopo_lqg::gaussian::{is_physical, CovarianceMatrix};
use nopo_lqg::linalg::{max_abs, max_abs_diff, min_eigenvalue};
use nopo_lqg::nopo::{build_plant, open_loop_v, NopoParams};

#[test]
fn printed_drift_and_diffusion_for_random_couplings() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let chi = rng.random_range(0.0..0.49);
        let dd = build_plant(NopoParams::new(chi).unwrap()).drift_diffusion();
        let a = nalgebra::dmatrix![
            -0.5, 0.0, chi, 0.0;
            0.0, -0.5, 0.0, -chi;
            chi, 0.0, -0.5, 0.0;
            0.0, -chi, 0.0, -0.5
        ];
        assert!(max_abs_diff(&dd.a, &a) <= 1e-15, "chi = {chi}");
        assert!(max_abs_diff(&dd.d, &(DMatrix::identity(4, 4) * 0.5)) <= 1e-15);
        assert!(min_eigenvalue(&dd.d) >= -1e-10);
    }
}

#[test]
fn lyapunov_matches_open_loop_closed_form() {
    for k in 0..20 {
        let p = NopoParams::new(0.0225 * k as f64).unwrap();
        let dd = build_plant(p).drift_diffusion();
        let v = lyapunov_steady(&dd.a, &dd.d).unwrap();
        assert!(max_abs_diff(v.matrix(), open_loop_v(p).matrix()) <= 1e-10);
        assert!(is_physical(&v, 1e-9));
    }
}

#[test]
fn lyapunov_residual_for_random_hurwitz_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 50 {
        let m = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let a = &m - DMatrix::identity(4, 4) * rng.random_range(0.0..2.0);
        if !is_hurwitz(&a, 1e-3) {
            continue;
        }
        let b = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let d = &b * b.transpose();
        let v = lyapunov_steady(&a, &d).unwrap();
        let scale = max_abs(&d).max(max_abs(&a) * max_abs(v.matrix()));
        assert!(max_abs(&lyapunov_residual(&a, &d, v.matrix())) <= 1e-10 * scale);
        checked += 1;
    }
}

#[test]
fn moments_relax_to_the_steady_state() {
    for k in 0..=9 {
        let p = NopoParams::new(0.05 * k as f64).unwrap();
        let dd = build_plant(p).drift_diffusion();
        let horizon = 30.0 / (1.0 - 2.0 * p.chi());
        let v = integrate_moments(&dd.a, &dd.d, &CovarianceMatrix::vacuum(2), 1e-2, horizon).unwrap();
        assert!(max_abs_diff(v.matrix(), open_loop_v(p).matrix()) <= 1e-6, "chi = {}", p.chi());
    }
}

#[test]
fn moments_from_the_fixed_point_stay_put() {
    let p = NopoParams::new(0.25).unwrap();
    let dd = build_plant(p).drift_diffusion();
    let v0 = open_loop_v(p);
    let v = integrate_moments(&dd.a, &dd.d, &v0, 1e-3, 5.0).unwrap();
    assert!(max_abs_diff(v.matrix(), v0.matrix()) <= 1e-9);
}

#[test]
fn non_hurwitz_drift_has_no_steady_state() {
    let a = DMatrix::identity(2, 2) * 0.1;
    assert!(lyapunov_steady(&a, &DMatrix::identity(2, 2)).is_err());
    assert!(is_hurwitz(&(-DMatrix::<f64>::identity(3, 3)), 1e-9));
}
