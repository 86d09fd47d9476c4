use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::algebra::ExteriorOperator;
use crate::error::{Error, Result};
use crate::geometry::{norm, sphere_volume, ChartPoint};
use crate::scalar::Real;

/// The kernel constants c_n (singular part) and c_n' (harmonic part).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub n: usize,
    pub c_n: f64,
    pub c_n_prime: f64,
    pub provenance: String,
}

impl KernelConstants {
    /// c_n = −√2 Γ(n+½)/π^{n+½} normalizes K₁ to the Riesz transform matrix of the
    /// symbol i(ξ∧ − ξ⌐)/|ξ|; c_n' = 2ⁿ/√Vol(S^{2n}) makes ∫ g² dx = 1.
    pub fn analytic(n: usize) -> Self {
        Self {
            n,
            c_n: riesz_constant(n),
            c_n_prime: harmonic_constant(n),
            provenance: "analytic: Riesz Fourier normalization and L² normalization of g".into(),
        }
    }

    /// c_n/√2, the factor in front of c(x−y)/|x−y|^{2n+1}.
    pub fn k1_prefactor(&self) -> f64 {
        self.c_n / std::f64::consts::SQRT_2
    }
}

pub fn riesz_constant(n: usize) -> f64 {
    let h = n as f64 + 0.5;
    -std::f64::consts::SQRT_2 * statrs::function::gamma::gamma(h) / std::f64::consts::PI.powf(h)
}

pub fn harmonic_constant(n: usize) -> f64 {
    2f64.powi(n as i32) / sphere_volume(2 * n).sqrt()
}

fn finite<T: Real>(x: &ChartPoint<T>) -> Result<&[T]> {
    x.coords().ok_or(Error::InfiniteChartPoint)
}

/// K₁(x,y) = c_n c(x−y) / (√2 |x−y|^{2n+1}).
pub fn k1<T: Real>(x: &ChartPoint<T>, y: &ChartPoint<T>, n: usize, c_n: T) -> Result<ExteriorOperator<T>> {
    let (x, y) = (finite(x)?, finite(y)?);
    let d: Vec<T> = x.iter().zip(y).map(|(a, b)| *a - *b).collect();
    let r = norm(&d);
    if r == T::zero() {
        return Err(Error::DiagonalSingularity { distance: 0.0 });
    }
    let s = c_n / (T::lit(std::f64::consts::SQRT_2) * r.powi(2 * n as i32 + 1));
    Ok(ExteriorOperator::wedge_minus_contract(&d).scale(Complex::new(s, T::zero())))
}

/// g(x) = c_n'(1+|x|²)^{−n}.
pub fn harmonic_weight<T: Real>(x: &[T], n: usize, c_n_prime: T) -> T {
    let r2 = x.iter().fold(T::zero(), |acc, v| acc + *v * *v);
    c_n_prime / (T::one() + r2).powi(n as i32)
}

/// K₃(x,y) = g(x)g(y)(P₀ + P_top).
pub fn k3<T: Real>(x: &ChartPoint<T>, y: &ChartPoint<T>, n: usize, c_n_prime: T) -> Result<ExteriorOperator<T>> {
    let (x, y) = (finite(x)?, finite(y)?);
    let s = harmonic_weight(x, n, c_n_prime) * harmonic_weight(y, n, c_n_prime);
    Ok(ExteriorOperator::harmonic_projector(n).scale(Complex::new(s, T::zero())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_n1() {
        let k = KernelConstants::analytic(1);
        assert!((k.c_n + std::f64::consts::SQRT_2 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!((k.c_n_prime - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn k3_at_origin() {
        let o = ChartPoint::<f64>::origin(1);
        let k = k3(&o, &o, 1, 0.7).unwrap();
        let m = k.matrix();
        assert!((m[(0, 0)].re - 0.49).abs() < 1e-15);
        assert!((m[(3, 3)].re - 0.49).abs() < 1e-15);
        assert_eq!(m[(1, 1)].re, 0.0);
    }

    #[test]
    fn k1_diagonal_is_an_error() {
        let x = ChartPoint::Finite(vec![0.2, 0.1]);
        assert!(matches!(k1(&x, &x, 1, 1.0), Err(Error::DiagonalSingularity { .. })));
        assert!(k1(&x, &ChartPoint::Infinity, 1, 1.0).is_err());
    }
}
