//! Stereographic charts on S^{2n}, conformal factors and uniform sampling.
//!
//! The chart is λ(x) = ((|x|²−1)/(|x|²+1), 2x/(|x|²+1)), so the origin goes to
//! the south pole (−1,0,…,0) and ∞ to the north pole (1,0,…,0).

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Unit vector in ℝ^{2n+1}.
#[derive(Clone, Debug, PartialEq)]
pub struct SpherePoint<T> {
    ambient: Vec<T>,
}

impl<T: Real> SpherePoint<T> {
    /// Accepts vectors whose norm is within 1e-6 of one and renormalizes them.
    pub fn new(ambient: Vec<T>) -> Result<Self> {
        if ambient.len() < 3 || ambient.len().is_multiple_of(2) {
            return Err(Error::Precondition(format!("ambient length {} is not 2n+1 with n ≥ 1", ambient.len())));
        }
        let norm = norm(&ambient);
        if !norm.is_finite() || (norm - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::Precondition(format!("ambient norm {norm} is not 1")));
        }
        Ok(Self::normalized(ambient))
    }

    pub(crate) fn normalized(mut ambient: Vec<T>) -> Self {
        let norm = norm(&ambient);
        for a in ambient.iter_mut() {
            *a /= norm;
        }
        Self { ambient }
    }

    pub fn ambient(&self) -> &[T] {
        &self.ambient
    }

    /// Half the sphere dimension.
    pub fn n(&self) -> usize {
        (self.ambient.len() - 1) / 2
    }

    pub fn north_pole(n: usize) -> Self {
        let mut ambient = vec![T::zero(); 2 * n + 1];
        ambient[0] = T::one();
        Self { ambient }
    }

    pub fn chordal_distance(&self, other: &Self) -> T {
        self.ambient
            .iter()
            .zip(&other.ambient)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .fold(T::zero(), |acc, x| acc + x)
            .sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.ambient.iter().zip(&other.ambient).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    }
}

/// Stereographic chart value: finite coordinates in ℝ^{2n}, or ∞.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartPoint<T> {
    Finite(Vec<T>),
    Infinity,
}

impl<T: Real> ChartPoint<T> {
    pub fn origin(n: usize) -> Self {
        ChartPoint::Finite(vec![T::zero(); 2 * n])
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ChartPoint::Infinity)
    }

    pub fn coords(&self) -> Option<&[T]> {
        match self {
            ChartPoint::Finite(x) => Some(x),
            ChartPoint::Infinity => None,
        }
    }

    pub fn norm_sq(&self) -> Option<T> {
        self.coords().map(norm_sq)
    }

    /// Reads consecutive coordinate pairs as z_j = x_{2j−1} + i x_{2j}.
    pub fn complex_coords(&self) -> Option<Vec<Complex<T>>> {
        self.coords().map(to_complex)
    }

    pub fn from_complex(z: &[Complex<T>]) -> Self {
        ChartPoint::Finite(z.iter().flat_map(|c| [c.re, c.im]).collect())
    }
}

pub(crate) fn norm_sq<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, v| acc + *v * *v)
}

pub(crate) fn norm<T: Real>(x: &[T]) -> T {
    norm_sq(x).sqrt()
}

pub(crate) fn to_complex<T: Real>(x: &[T]) -> Vec<Complex<T>> {
    x.chunks_exact(2).map(|c| Complex::new(c[0], c[1])).collect()
}

pub fn stereo_to_sphere<T: Real>(x: &ChartPoint<T>, n: usize) -> SpherePoint<T> {
    match x {
        ChartPoint::Infinity => SpherePoint::north_pole(n),
        ChartPoint::Finite(x) => {
            debug_assert_eq!(x.len(), 2 * n);
            let r2 = norm_sq(x);
            let denom = r2 + T::one();
            let mut ambient = Vec::with_capacity(2 * n + 1);
            ambient.push((r2 - T::one()) / denom);
            let two = T::lit(2.0);
            ambient.extend(x.iter().map(|v| two * *v / denom));
            SpherePoint::normalized(ambient)
        }
    }
}

/// Inverse chart; the north pole maps to ∞.
pub fn sphere_to_stereo<T: Real>(s: &SpherePoint<T>) -> ChartPoint<T> {
    let a = s.ambient();
    let s0 = a[0];
    let tail = &a[1..];
    let t2 = norm_sq(tail);
    if s0 > T::zero() {
        // 1 − s0 = |tail|²/(1 + s0) avoids cancellation near the pole
        if t2 == T::zero() {
            return ChartPoint::Infinity;
        }
        let f = (T::one() + s0) / t2;
        ChartPoint::Finite(tail.iter().map(|v| *v * f).collect())
    } else {
        let f = T::one() / (T::one() - s0);
        ChartPoint::Finite(tail.iter().map(|v| *v * f).collect())
    }
}

/// Density of the round metric's volume with respect to Lebesgue measure in the chart.
pub fn conformal_volume_factor<T: Real>(x: &ChartPoint<T>, n: usize) -> Result<T> {
    let r2 = x.norm_sq().ok_or(Error::InfiniteChartPoint)?;
    Ok((T::lit(2.0) / (T::one() + r2)).powi(2 * n as i32))
}

/// Volume of the unit sphere S^d.
pub fn sphere_volume(d: usize) -> f64 {
    let h = (d as f64 + 1.0) / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h)
}

pub fn sample_sphere_point<T, R>(rng: &mut R, n: usize) -> SpherePoint<T>
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    loop {
        let v: Vec<T> = (0..2 * n + 1).map(|_| StandardNormal.sample(rng)).collect();
        let r = norm(&v);
        if r > T::lit(1e-12) {
            return SpherePoint::normalized(v);
        }
    }
}

/// Uniform point on S^{2n}, returned in chart coordinates.
pub fn sample_sphere<T, R>(rng: &mut R, n: usize) -> ChartPoint<T>
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    sphere_to_stereo(&sample_sphere_point(rng, n))
}
