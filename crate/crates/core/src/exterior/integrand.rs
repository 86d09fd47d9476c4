use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};

use super::kernels::KernelConstants;
use super::supertrace::h_kernel;
use crate::error::{Error, Result};
use crate::gamma::{enumerate_gamma, GammaSequence};
use crate::geometry::ChartPoint;
use crate::maps::SampledMap;
use crate::projections::{cyclic_trace, p_t, ExtComplex};
use crate::scalar::Real;

/// Q_I = tr(p(x₁) ∏_l p(x_{i_l})) with p = p_T at the mapped points.
pub fn q_factor<T: Real>(seq: &GammaSequence, mapped: &[Vec<ExtComplex<T>>]) -> Result<Complex<T>> {
    if mapped.len() != seq.entries().len() {
        return Err(Error::Dimension { expected: seq.entries().len(), got: mapped.len() });
    }
    let mut chain = Vec::with_capacity(mapped.len() + 1);
    chain.push(mapped[0].clone());
    for i in seq.index_map() {
        chain.push(mapped[i - 1].clone());
    }
    Ok(cyclic_trace(&chain))
}

/// f̃_k split by weight w(I); entry w is Σ_{I ∈ Γ_k^w} ι(I) Q_I H_I.
#[derive(Clone, Debug, PartialEq)]
pub struct FtildeTerms {
    pub by_weight: Vec<Complex64>,
}

impl FtildeTerms {
    pub fn total(&self) -> Complex64 {
        self.by_weight.iter().sum()
    }

    pub fn weight_zero(&self) -> Complex64 {
        self.by_weight[0]
    }
}

/// Γ_k with the supertrace kernels grouped by slot pattern: H_I depends on I only
/// through which slots hold the harmonic kernel.
#[derive(Clone, Debug)]
pub struct GammaCache {
    k: usize,
    sequences: Vec<GammaSequence>,
    pattern_of: Vec<usize>,
    patterns: Vec<GammaSequence>,
}

impl GammaCache {
    pub fn new(k: usize) -> Result<Self> {
        let sequences = enumerate_gamma(k)?;
        let mut index: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut patterns = Vec::new();
        let mut pattern_of = Vec::with_capacity(sequences.len());
        for s in &sequences {
            let key: Vec<bool> = (0..s.entries().len()).map(|l| s.is_harmonic_slot(l)).collect();
            let id = *index.entry(key).or_insert_with(|| {
                patterns.push(s.clone());
                patterns.len() - 1
            });
            pattern_of.push(id);
        }
        Ok(Self { k, sequences, pattern_of, patterns })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sequences(&self) -> &[GammaSequence] {
        &self.sequences
    }

    /// Σ_I ι(I) Q_I(mapped) H_I(points), split by weight.
    pub fn evaluate(
        &self,
        points: &[ChartPoint<f64>],
        mapped: &[Vec<ExtComplex<f64>>],
        consts: &KernelConstants,
    ) -> Result<FtildeTerms> {
        let h: Vec<Complex64> = self.patterns.iter().map(|p| h_kernel(p, points, consts)).collect::<Result<_>>()?;
        let mut by_weight = vec![Complex64::new(0.0, 0.0); self.k + 1];
        for (s, &pid) in self.sequences.iter().zip(&self.pattern_of) {
            if h[pid] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let q = q_factor(s, mapped)?;
            by_weight[s.weight()] += s.iota().to_complex() * q * h[pid];
        }
        Ok(FtildeTerms { by_weight })
    }
}

fn check_hypothesis(map: &SampledMap, k: usize) -> Result<()> {
    let n = map.n() as f64;
    if (k as f64) <= n / map.alpha() {
        return Err(Error::Precondition(format!(
            "k = {k} must exceed n/α = {:.3} for map `{}`",
            n / map.alpha(),
            map.label()
        )));
    }
    Ok(())
}

/// f̃_k(x₁, …, x_{2k}) on the chart with Lebesgue measure.
pub fn ftilde(map: &SampledMap, k: usize, points: &[ChartPoint<f64>], consts: &KernelConstants) -> Result<FtildeTerms> {
    check_hypothesis(map, k)?;
    if points.len() != 2 * k {
        return Err(Error::Dimension { expected: 2 * k, got: points.len() });
    }
    let mapped: Vec<Vec<ExtComplex<f64>>> = points.iter().map(|x| map.target(x)).collect();
    GammaCache::new(k)?.evaluate(points, &mapped, consts)
}

/// The weight-zero part of f̃_k in factorized form: all Γ⁰ kernels coincide, and
/// Σ_{I∈Γ⁰} ι(I)Q_I telescopes to tr(p₁ ∏_l (p_l − p_{l+1})).
pub fn weight_zero_factorized(
    points: &[ChartPoint<f64>],
    mapped: &[Vec<ExtComplex<f64>>],
    consts: &KernelConstants,
) -> Result<Complex64> {
    let m = points.len();
    let all_singular = GammaSequence::new(vec![1; m])?;
    let h = h_kernel(&all_singular, points, consts)?;
    Ok(projection_difference_trace(mapped) * h)
}

/// tr(p₁ ∏_{l=1}^{m} (p_l − p_{l+1})) with cyclic indices.
pub fn projection_difference_trace(mapped: &[Vec<ExtComplex<f64>>]) -> Complex64 {
    let ps: Vec<DMatrix<Complex64>> = mapped.iter().map(|z| p_t(z).into_matrix()).collect();
    let m = ps.len();
    let mut acc = ps[0].clone();
    for l in 0..m {
        acc *= &ps[l] - &ps[(l + 1) % m];
    }
    acc.trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;

    fn pts(v: &[[f64; 2]]) -> Vec<ChartPoint<f64>> {
        v.iter().map(|p| ChartPoint::Finite(p.to_vec())).collect()
    }

    #[test]
    fn q_equal_points_is_one() {
        let z = vec![ExtComplex::finite(0.2, -0.7)];
        for s in enumerate_gamma(2).unwrap() {
            let q = q_factor(&s, &vec![z.clone(); 4]).unwrap();
            assert!((q - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn factorized_weight_zero_matches_enumeration() {
        let c = KernelConstants::analytic(1);
        let f = maps::identity(1);
        let p = pts(&[[0.1, 0.4], [-0.3, 0.2], [0.7, -0.5], [0.2, 0.9]]);
        let mapped: Vec<_> = p.iter().map(|x| f.target(x)).collect();
        let full = ftilde(&f, 2, &p, &c).unwrap();
        let fact = weight_zero_factorized(&p, &mapped, &c).unwrap();
        assert!((full.weight_zero() - fact).norm() < 1e-12 * (1.0 + fact.norm()));
    }

    #[test]
    fn constant_map_weight_zero_vanishes() {
        let c = KernelConstants::analytic(1);
        let f = maps::constant(1);
        let p = pts(&[[0.1, 0.4], [-0.3, 0.2], [0.7, -0.5], [0.2, 0.9]]);
        let t = ftilde(&f, 2, &p, &c).unwrap();
        assert!(t.weight_zero().norm() < 1e-14);
    }

    #[test]
    fn hypothesis_enforced() {
        let c = KernelConstants::analytic(1);
        let f = maps::identity(1);
        let p = pts(&[[0.1, 0.4], [-0.3, 0.2]]);
        assert!(matches!(ftilde(&f, 1, &p, &c), Err(Error::Precondition(_))));
    }
}
