use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use sphdeg::exterior::{expanded_supertrace, ftilde, h_kernel, k1, q_factor, ExteriorOperator, KernelConstants};
use sphdeg::gamma::{enumerate_gamma, generate_gamma_blocks};
use sphdeg::geometry::{conformal_volume_factor, sphere_to_stereo, stereo_to_sphere, ChartPoint};
use sphdeg::maps;
use sphdeg::projections::{cyclic_chern_product, p0, p_t, p_y, BallChart, ExtComplex};
use sphdeg::schatten::{russo_check, schatten_from_singular_values, singular_values, DiscretizedKernel};

fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn ext() -> impl Strategy<Value = ExtComplex<f64>> {
    prop_oneof![
        1 => Just(ExtComplex::Infinity),
        8 => (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(a, b)| ExtComplex::finite(a, b)),
        2 => (-1e-5..1e-5f64, -1e-5..1e-5f64).prop_map(|(a, b)| ExtComplex::finite(a, b)),
        1 => (-1e6..1e6f64, -1e6..1e6f64).prop_map(|(a, b)| ExtComplex::finite(a, b)),
    ]
}

fn finite_point(n: usize, scale: f64) -> impl Strategy<Value = ChartPoint<f64>> {
    prop::collection::vec(-scale..scale, 2 * n).prop_map(ChartPoint::Finite)
}

fn is_projection(m: &DMatrix<Complex64>) -> bool {
    max_entry(&(m * m - m)) < 1e-12 && max_entry(&(m - m.adjoint())) < 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn stereographic_round_trip(x in (1usize..4).prop_flat_map(|n| finite_point(n, 20.0))) {
        let n = x.coords().unwrap().len() / 2;
        let back = sphere_to_stereo(&stereo_to_sphere(&x, n));
        let (a, b) = (x.coords().unwrap(), back.coords().unwrap());
        let scale = 1.0 + x.norm_sq().unwrap();
        for (u, v) in a.iter().zip(b) {
            prop_assert!((u - v).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn conformal_factor_is_the_jacobian_volume(x in (1usize..4).prop_flat_map(|n| finite_point(n, 3.0))) {
        let c = x.coords().unwrap().to_vec();
        let d = c.len();
        let n = d / 2;
        let h = 1e-6;
        let mut jac = DMatrix::<f64>::zeros(d + 1, d);
        for j in 0..d {
            let (mut p, mut m) = (c.clone(), c.clone());
            p[j] += h;
            m[j] -= h;
            let (sp, sm) = (stereo_to_sphere(&ChartPoint::Finite(p), n), stereo_to_sphere(&ChartPoint::Finite(m), n));
            for i in 0..=d {
                jac[(i, j)] = (sp.ambient()[i] - sm.ambient()[i]) / (2.0 * h);
            }
        }
        let gram = (jac.transpose() * &jac).determinant().sqrt();
        let rho = conformal_volume_factor(&x, n).unwrap();
        prop_assert!((gram - rho).abs() < 1e-6 * rho.max(1e-3), "{} vs {}", gram, rho);
    }

    #[test]
    fn projections_are_projections(z in ext(), zs in prop::collection::vec(ext(), 1..4), y in (1usize..4).prop_flat_map(|n| finite_point(n, 4.0))) {
        prop_assert!(is_projection(p0(z).matrix()));
        prop_assert!(is_projection(p_t(&zs).matrix()));
        let n = y.coords().unwrap().len() / 2;
        prop_assert!(is_projection(p_y(&y, &BallChart::new(n)).matrix()));
    }

    #[test]
    fn cyclic_chern_product_is_a_matrix_trace(
        (k, pts, shift) in (1usize..4, 1usize..4).prop_flat_map(|(k, n)| {
            (Just(k), prop::collection::vec(prop::collection::vec(ext(), n), 2 * k + 1), 0..2 * k + 1)
        })
    ) {
        let a = cyclic_chern_product(&pts, k).unwrap();
        let mut m = p_t(&pts[0]).into_matrix();
        for p in &pts[1..] {
            m *= p_t(p).matrix();
        }
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        prop_assert!((a - m.trace() / fact).norm() < 1e-10);
        let mut rot = pts.clone();
        rot.rotate_left(shift);
        prop_assert!((a - cyclic_chern_product(&rot, k).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn q_factor_is_a_matrix_trace(
        (i, mapped) in (1usize..3).prop_flat_map(|k| (0usize..100, prop::collection::vec(prop::collection::vec(ext(), 1), 2 * k)))
    ) {
        let k = mapped.len() / 2;
        let seqs = enumerate_gamma(k).unwrap();
        let seq = &seqs[i % seqs.len()];
        let q = q_factor(seq, &mapped).unwrap();
        let mut m = p_t(&mapped[0]).into_matrix();
        for idx in seq.index_map() {
            m *= p_t(&mapped[idx - 1]).matrix();
        }
        prop_assert!((q - m.trace()).norm() < 1e-10);
    }

    #[test]
    fn k1_is_antisymmetric(x in finite_point(2, 3.0), y in finite_point(2, 3.0)) {
        let c = KernelConstants::analytic(2).c_n;
        let (a, b) = (k1(&x, &y, 2, c).unwrap(), k1(&y, &x, 2, c).unwrap());
        prop_assert_eq!(max_entry(&(a.matrix() + b.matrix())), 0.0);
    }

    #[test]
    fn kernel_product_matches_expansion(i in 0usize..29, pts in prop::collection::vec(finite_point(1, 2.0), 4)) {
        let consts = KernelConstants::analytic(1);
        let seq = &enumerate_gamma(2).unwrap()[i];
        let a = h_kernel(seq, &pts, &consts).unwrap();
        let b = expanded_supertrace(seq, &pts, &consts).unwrap();
        prop_assert!((a - b).norm() <= 1e-9 * a.norm().max(b.norm()).max(1e-300));
    }

    #[test]
    fn graded_trace(n in 1usize..3, seed in prop::collection::vec(-1.0..1.0f64, 512), pa in 0usize..2, pb in 0usize..2) {
        // parity with respect to τ: A = (M ± τMτ)/2
        let d = 1usize << (2 * n);
        let tau = ExteriorOperator::<f64>::tau(n);
        let homogeneous = |off: usize, parity: usize| {
            let m = ExteriorOperator::from_matrix(n, DMatrix::from_fn(d, d, |i, j| {
                Complex64::new(seed[(off + i * d + j) % 512], seed[(off + 7 * i + 3 * j + 1) % 512])
            }));
            let conj = &(&tau * &m) * &tau;
            let s = if parity == 0 { 1.0 } else { -1.0 };
            ExteriorOperator::from_matrix(n, (m.matrix() + conj.matrix() * Complex64::new(s, 0.0)) * Complex64::new(0.5, 0.0))
        };
        let a = homogeneous(0, pa);
        let b = homogeneous(101, pb);
        let sign = if pa * pb == 1 { -1.0 } else { 1.0 };
        let lhs = (&a * &b).supertrace();
        let rhs = (&b * &a).supertrace() * sign;
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn schatten_norm_decreases_in_q(vals in prop::collection::vec(-3.0..3.0f64, 36), q1 in 1.0..6.0f64, dq in 0.0..6.0f64) {
        let m = DMatrix::from_fn(6, 6, |i, j| Complex64::new(vals[6 * i + j], vals[(6 * j + i + 5) % 36]));
        let sv = singular_values(&m);
        prop_assert!(schatten_from_singular_values(&sv, q1 + dq) <= schatten_from_singular_values(&sv, q1) * (1.0 + 1e-12));
    }

    #[test]
    fn russo_bound_holds(n in 3usize..12, vals in prop::collection::vec(-2.0..2.0f64, 288), q in 2.1..6.0f64) {
        let k = DiscretizedKernel::on_unit_square(n, |x, y| {
            let i = ((x * 97.0) as usize * 13 + (y * 89.0) as usize) % 144;
            Complex64::new(vals[i], vals[i + 144])
        });
        prop_assert!(russo_check(&k, q).unwrap().holds);
    }
}

#[test]
fn gamma_generator_matches_filter() {
    for k in 1..=3 {
        assert_eq!(enumerate_gamma(k).unwrap(), generate_gamma_blocks(k).unwrap());
    }
}

#[test]
fn gamma_weights_partition() {
    for k in 1..=4 {
        let all = enumerate_gamma(k).unwrap();
        let mut counted = 0;
        for w in 0..=k {
            counted += all.iter().filter(|g| g.weight() == w).count();
        }
        assert_eq!(counted, all.len());
        assert!(all.iter().all(|g| g.weight() <= k));
    }
}

#[test]
fn iota_parity_ignores_the_cyclic_identification() {
    for k in 1..=4 {
        for g in enumerate_gamma(k).unwrap() {
            let raw: i64 = g.index_map_raw().iter().enumerate().map(|(l, &i)| i as i64 - l as i64 - 1).sum();
            let ident: i64 = g.index_map().iter().enumerate().map(|(l, &i)| i as i64 - l as i64 - 1).sum();
            assert_eq!(raw.rem_euclid(2), ident.rem_euclid(2), "{:?}", g.entries());
        }
    }
}

#[test]
fn exterior_generator_relations() {
    for n in 1..=3 {
        let id = ExteriorOperator::<f64>::identity(n);
        for j in 0..2 * n {
            let (e, c) = (ExteriorOperator::<f64>::wedge(n, j), ExteriorOperator::<f64>::contract(n, j));
            assert!((&e * &e).max_abs() < 1e-14);
            assert!(max_entry(&(e.anticommutator(&c).matrix() - id.matrix())) < 1e-14);
        }
        let t = ExteriorOperator::<f64>::tau(n);
        assert!(max_entry(&((&t * &t).matrix() - id.matrix())) < 1e-14);
    }
}

/// log|f̃| against log of the distance between two adjacent points as they merge.
fn approach_slope(f: &maps::SampledMap, base: [f64; 2], dir: [f64; 2]) -> f64 {
    let consts = KernelConstants::analytic(1);
    let others = [ChartPoint::Finite(vec![0.9, -0.4]), ChartPoint::Finite(vec![-0.7, 0.8])];
    let eps: Vec<f64> = (0..6).map(|i| 1e-2 * 0.25f64.powi(i)).collect();
    let vals: Vec<f64> = eps
        .iter()
        .map(|e| {
            let pts = vec![
                ChartPoint::Finite(base.to_vec()),
                ChartPoint::Finite(vec![base[0] + e * dir[0], base[1] + e * dir[1]]),
                others[0].clone(),
                others[1].clone(),
            ];
            ftilde(f, 2, &pts, &consts).unwrap().total().norm()
        })
        .collect();
    sphdeg::specmod::log_log_slope(&eps, &vals)
}

#[test]
fn ftilde_singularity_is_integrable() {
    // bound |x_l − x_{l+1}|^{α−2n} on a single merging pair
    let smooth = approach_slope(&maps::identity(1), [0.2, 0.1], [0.6, 0.8]);
    assert!(smooth >= 1.0 - 2.0 - 0.1, "identity slope {smooth}");
    let snow = maps::snowflake(2, 0.6).unwrap();
    let rough = approach_slope(&snow, [0.0, 0.0], [0.6, 0.8]);
    assert!(rough >= 0.6 - 2.0 - 0.1, "snowflake slope {rough}");
}
