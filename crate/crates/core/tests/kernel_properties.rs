use proptest::prelude::*;
use weathercat::seasonal::{k1, k2, quad_exp_kernel, Kernel};
use weathercat::FourCoeffs;

fn coeffs() -> impl Strategy<Value = FourCoeffs> {
    (-20.0..20.0f64, -0.05..0.05f64, -15.0..15.0f64, -15.0..15.0f64)
        .prop_map(|(a, b, c, d)| FourCoeffs::new(a, b, c, d))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || (a - b).abs() < 1e-14
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn k1_agrees_with_quadrature(c in coeffs(), alpha in 0.01..2.0f64, t in 0.0..730.0f64) {
        let exact = k1(t, alpha, &c).unwrap();
        let q = quad_exp_kernel(|u| c.eval(u), alpha, t, Kernel::Decaying).unwrap();
        // Relative to the size of the integrand contributions, since the
        // integral itself can cancel to near zero.
        let scale = quad_exp_kernel(|u| c.eval(u).abs(), alpha, t, Kernel::Decaying).unwrap();
        prop_assert!((exact - q).abs() <= 1e-10 * scale.max(1e-300), "{} vs {}", exact, q);
    }

    #[test]
    fn k2_agrees_with_quadrature(c0 in 1.0..5.0f64, c1 in 0.0..0.002f64, c2 in -0.5..0.5f64,
                                 c3 in -0.5..0.5f64, alpha in 0.01..0.95f64, t in 0.0..730.0f64) {
        let vol = FourCoeffs::new(c0, c1, c2, c3);
        let exact = k2(t, alpha, &vol).unwrap();
        let q = quad_exp_kernel(|u| vol.eval(u), alpha, t, Kernel::Growing).unwrap();
        prop_assert!(rel_close(exact, q, 1e-10), "{} vs {}", exact, q);
    }

    #[test]
    fn k1_is_linear(u in coeffs(), v in coeffs(), alpha in 0.01..2.0f64, t in 0.0..730.0f64) {
        let sum = FourCoeffs::from_array([u.k0 + v.k0, u.k1 + v.k1, u.k2 + v.k2, u.k3 + v.k3]);
        let lhs = k1(t, alpha, &sum).unwrap();
        let rhs = k1(t, alpha, &u).unwrap() + k1(t, alpha, &v).unwrap();
        let scale = k1(t, alpha, &FourCoeffs::new(
            u.k0.abs() + v.k0.abs(), u.k1.abs() + v.k1.abs(),
            u.k2.abs() + v.k2.abs(), u.k3.abs() + v.k3.abs())).unwrap().abs().max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn seasonal_is_annual_without_trend(k0 in -20.0..20.0f64, k2 in -15.0..15.0f64,
                                        k3 in -15.0..15.0f64, t in 0.0..1000.0f64) {
        let s = FourCoeffs::new(k0, 0.0, k2, k3);
        prop_assert!((s.eval(t) - s.eval(t + 365.0)).abs() < 1e-12 * (1.0 + k0.abs() + k2.abs() + k3.abs()));
    }
}

#[test]
fn reference_seasonal_at_origin() {
    let beta = FourCoeffs::new(7.9733, 0.0008223, -5.8796, -12.866);
    assert!((beta.eval(0.0) - (-4.8927)).abs() < 1e-12);
}

#[test]
fn growing_kernel_of_identity() {
    let v = quad_exp_kernel(|u| u, 1.0, 1.0, Kernel::Growing).unwrap();
    assert!((v - 1.0).abs() < 1e-12);
}
