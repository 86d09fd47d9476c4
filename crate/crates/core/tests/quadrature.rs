use num_complex::Complex64;

use sphdeg::geometry::SpherePoint;
use sphdeg::quadrature::{mc_integrate, MCConfig, ProductDomain};

fn smooth(p: &[SpherePoint<f64>]) -> Option<Complex64> {
    let a = p[0].ambient();
    Some(Complex64::new(a[0] * a[0] + a[1] + 0.5, 0.0))
}

#[test]
fn stderr_shrinks_like_root_n() {
    let d = ProductDomain::probability(1, 1);
    let a = mc_integrate(smooth, &d, &MCConfig::new(50_000, 3)).unwrap();
    let b = mc_integrate(smooth, &d, &MCConfig::new(100_000, 3)).unwrap();
    let ratio = a.stderr / b.stderr;
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.15, "ratio {ratio}");
    // E[s0²] = 1/3 on S²
    assert!((b.value - (1.0 / 3.0 + 0.5)).abs() < 4.0 * b.stderr);
}

#[test]
fn worker_count_does_not_change_the_result() {
    let d = ProductDomain::volume(4, 1);
    let f = |p: &[SpherePoint<f64>]| {
        let c = p[0].chordal_distance(&p[1]) * p[2].chordal_distance(&p[3]);
        Some(Complex64::new(c.powf(-0.5), c))
    };
    let base = MCConfig::new(30_000, 11).with_importance(1.0);
    let one = mc_integrate(f, &d, &base).unwrap();
    for w in [2, 3, 4] {
        let many = mc_integrate(f, &d, &base.clone().with_workers(w)).unwrap();
        assert!((one.value - many.value).abs() <= 1e-12 * one.value.abs());
        assert!((one.stderr - many.stderr).abs() <= 1e-12 * one.stderr);
        assert!((one.imag - many.imag).abs() <= 1e-12 * one.imag.abs());
    }
}

#[test]
fn importance_weights_are_unbiased() {
    for beta in [0.0, 1.0, 1.5] {
        let d = ProductDomain::probability(4, 1);
        let e = mc_integrate(|_| Some(Complex64::new(1.0, 0.0)), &d, &MCConfig::new(40_000, 5).with_importance(beta))
            .unwrap();
        assert!((e.value - 1.0).abs() < 5.0 * e.stderr.max(1e-12), "β = {beta}: {} ± {}", e.value, e.stderr);
    }
}

#[test]
fn stratification_is_unbiased() {
    let d = ProductDomain::probability(4, 1);
    let f = |p: &[SpherePoint<f64>]| Some(Complex64::new(p[0].chordal_distance(&p[1]).powi(2), 0.0));
    let e = mc_integrate(f, &d, &MCConfig::new(40_000, 8).with_importance(1.0).with_strata(8)).unwrap();
    // E|x − y|² = 2 for independent uniform points
    assert!((e.value - 2.0).abs() < 5.0 * e.stderr, "{} ± {}", e.value, e.stderr);
}
