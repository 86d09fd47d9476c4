use nalgebra::DMatrix;
use num_complex::Complex64;

use sphdeg::linalg::SplitMatrix;
use sphdeg::maps;
use sphdeg::specmod::{
    build_signature_module, connes_pairing, multiplication_block, ProjectionField, SampledField, SpectralGrid,
};

#[test]
fn grading_anticommutes_with_f_and_commutes_with_multiplication() {
    let l = 8;
    let grid = SpectralGrid::new(l).unwrap();
    let field = SampledField::pullback(&grid, &maps::power(2)).unwrap();
    for t in [0.3, 1.0, 7.0] {
        let module = build_signature_module(l, t).unwrap();
        for sector in field.sectors(l) {
            let op = module.operators(&sector);
            let g = &op.grading;
            assert!(g.mul(&op.f_tilde).add(&op.f_tilde.mul(g)).max_abs() < 1e-10, "t = {t}");
            let p = multiplication_block(&grid, &field, &sector);
            let zero = SplitMatrix::zeros(sector.len(), sector.len());
            let pp = SplitMatrix::blocks(&p, &zero, &zero, &zero);
            assert!(g.mul(&pp).sub(&pp.mul(g)).max_abs() < 1e-10, "t = {t}");
        }
    }
}

#[test]
fn f_tilde_is_an_odd_involution() {
    let module = build_signature_module(6, 2.0).unwrap();
    for sector in &module.sectors {
        let op = module.operators(sector);
        let sq = op.f_tilde.mul(&op.f_tilde);
        assert!(sq.sub(&SplitMatrix::identity(sq.nrows())).max_abs() < 1e-12);
        assert!(op.f_tilde.sub(&op.f_tilde.adjoint()).max_abs() < 1e-14);
    }
}

#[test]
fn pairing_does_not_depend_on_t() {
    let p = ProjectionField::Pullback(maps::identity(1));
    let base = connes_pairing(&p, 2, 16, 1.0).unwrap().degree;
    for t in [0.5, 2.0, 4.0] {
        let d = connes_pairing(&p, 2, 16, t).unwrap().degree;
        assert!((d - base).abs() < 0.05, "t = {t}: {d} vs {base}");
    }
}

#[test]
fn pairing_is_stable_under_suspension() {
    let p = ProjectionField::Pullback(maps::identity(1));
    let k2 = connes_pairing(&p, 2, 32, 1.0).unwrap().degree;
    let k3 = connes_pairing(&p, 3, 32, 1.0).unwrap().degree;
    assert!((k2 - k3).abs() < 0.1, "{k2} vs {k3}");
}

#[test]
fn pairing_recovers_fixture_degrees() {
    for (f, d) in [(maps::antipodal(1), -1.0), (maps::power(2), 2.0), (maps::power(-1), -1.0)] {
        let r = connes_pairing(&ProjectionField::Pullback(f.clone()), 2, 24, 1.0).unwrap();
        assert!((r.degree - d).abs() < 0.2, "{}: {}", f.label(), r.degree);
    }
}

#[test]
fn pairing_of_trivial_projections_vanishes() {
    let one = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    assert!(connes_pairing(&ProjectionField::Constant(one), 2, 16, 1.0).unwrap().raw.abs() < 1e-8);
    let v = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
    let rank_one = DMatrix::from_fn(2, 2, |i, j| v[i] * v[j].conj());
    assert!(connes_pairing(&ProjectionField::Constant(rank_one), 2, 16, 1.0).unwrap().raw.abs() < 1e-8);
}
