//! The projection tower p₀ → p_T → p_Y and the Chern density of p_T.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::geometry::{norm_sq, to_complex, ChartPoint};
use crate::scalar::Real;

/// A point of the Riemann sphere ℂ ∪ {∞}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtComplex<T> {
    Finite(Complex<T>),
    Infinity,
}

impl<T: Real> ExtComplex<T> {
    pub fn finite(re: T, im: T) -> Self {
        ExtComplex::Finite(Complex::new(re, im))
    }

    /// Normalized vector v(z) = (z, 1)/√(1+|z|²), with v(∞) = (1, 0).
    pub fn unit_vector(&self) -> [Complex<T>; 2] {
        match self {
            ExtComplex::Infinity => [Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero())],
            ExtComplex::Finite(z) => {
                let r2 = z.norm_sqr();
                if r2 > T::one() {
                    // scale by 1/z to keep large values accurate
                    let w = z.inv();
                    let s = T::one() / (T::one() + w.norm_sqr()).sqrt();
                    let phase = *z * Complex::new(z.norm().recip(), T::zero());
                    [phase * s, (w * phase) * s]
                } else {
                    let s = T::one() / (T::one() + r2).sqrt();
                    [*z * s, Complex::new(s, T::zero())]
                }
            }
        }
    }
}

/// Hermitian projection matrix of size 2ⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianProjection<T: Real> {
    entries: DMatrix<Complex<T>>,
}

impl<T: Real> HermitianProjection<T> {
    pub fn from_matrix_unchecked(entries: DMatrix<Complex<T>>) -> Self {
        Self { entries }
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> Complex<T> {
        self.entries.trace()
    }

    /// max |(p² − p)_{ij}|
    pub fn idempotence_defect(&self) -> T {
        let sq = &self.entries * &self.entries;
        max_abs_entry(&(sq - &self.entries))
    }

    /// max |(p − p*)_{ij}|
    pub fn hermiticity_defect(&self) -> T {
        max_abs_entry(&(&self.entries - self.entries.map(|z| z.conj()).transpose()))
    }
}

pub(crate) fn max_abs_entry<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
}

fn outer<T: Real>(v: &[Complex<T>]) -> DMatrix<Complex<T>> {
    DMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
}

/// Tensor product of the unit vectors v(z_j), z₁ outermost.
pub fn tensor_unit_vector<T: Real>(z: &[ExtComplex<T>]) -> Vec<Complex<T>> {
    let mut v = vec![Complex::new(T::one(), T::zero())];
    for zj in z {
        let u = zj.unit_vector();
        let mut next = Vec::with_capacity(v.len() * 2);
        for a in &v {
            next.push(*a * u[0]);
            next.push(*a * u[1]);
        }
        v = next;
    }
    v
}

pub fn p0<T: Real>(z: ExtComplex<T>) -> HermitianProjection<T> {
    HermitianProjection { entries: outer(&z.unit_vector()) }
}

pub fn p_t<T: Real>(z: &[ExtComplex<T>]) -> HermitianProjection<T> {
    assert!(!z.is_empty(), "p_T needs at least one coordinate");
    HermitianProjection { entries: outer(&tensor_unit_vector(z)) }
}

/// Ball chart on the target S^{2n}: U is the open southern hemisphere, which is the
/// stereographic ball |x| < 1, and τ(x) = x/(1−|x|²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallChart {
    pub n: usize,
}

impl BallChart {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    /// ν(x) for a target point given in stereographic coordinates, None outside U.
    pub fn nu<T: Real>(&self, x: &ChartPoint<T>) -> Option<Vec<T>> {
        let c = x.coords()?;
        if norm_sq(c) < T::one() {
            Some(c.to_vec())
        } else {
            None
        }
    }

    pub fn tau<T: Real>(&self, b: &[T]) -> Vec<Complex<T>> {
        let s = T::one() / (T::one() - norm_sq(b));
        let scaled: Vec<T> = b.iter().map(|v| *v * s).collect();
        to_complex(&scaled)
    }

    /// ν̃ = τ∘ν on U and ∞ elsewhere.
    pub fn nu_tilde<T: Real>(&self, x: &ChartPoint<T>) -> Vec<ExtComplex<T>> {
        match self.nu(x) {
            Some(b) => self.tau(&b).into_iter().map(ExtComplex::Finite).collect(),
            None => vec![ExtComplex::Infinity; self.n],
        }
    }
}

/// p_Y at a target point given in stereographic coordinates.
pub fn p_y<T: Real>(x: &ChartPoint<T>, chart: &BallChart) -> HermitianProjection<T> {
    p_t(&chart.nu_tilde(x))
}

/// Density of the top Chern form of p_T on ℂⁿ: π^{−n} ∏ (1+|z_j|²)^{−2}.
pub fn chern_top_density<T: Real>(z: &[Complex<T>]) -> T {
    let pi = T::PI();
    z.iter().fold(T::one(), |acc, zj| acc / (pi * (T::one() + zj.norm_sqr()).powi(2)))
}

/// Cyclic Chern product (k!)^{−1} ∏_j ∏_l ⟨v(z_{j,l}), v(z_{j,l+1})⟩ over 2k+1 points,
/// which equals (k!)^{−1} tr(p_T(z_0) ⋯ p_T(z_{2k})).
pub fn cyclic_chern_product<T: Real>(points: &[Vec<ExtComplex<T>>], k: usize) -> Result<Complex<T>> {
    if points.len() != 2 * k + 1 {
        return Err(Error::Dimension { expected: 2 * k + 1, got: points.len() });
    }
    Ok(cyclic_trace(points) / T::from_u64(factorial(k)).unwrap())
}

/// tr(p_T(z_0) ⋯ p_T(z_m)) for any number of points.
pub fn cyclic_trace<T: Real>(points: &[Vec<ExtComplex<T>>]) -> Complex<T> {
    let m = points.len();
    let n = points.first().map_or(0, |p| p.len());
    let mut acc = Complex::new(T::one(), T::zero());
    for j in 0..n {
        let vs: Vec<[Complex<T>; 2]> = points.iter().map(|p| p[j].unit_vector()).collect();
        for l in 0..m {
            let a = &vs[l];
            let b = &vs[(l + 1) % m];
            acc *= a[0].conj() * b[0] + a[1].conj() * b[1];
        }
    }
    acc
}

pub(crate) fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

/// How the Chern normalization integral is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum ChernQuadrature {
    /// Adaptive Simpson on the radial profile after mapping [0, R) to a finite interval.
    Radial { tol: f64, radius: Option<f64> },
    /// Importance-sampled Monte Carlo over ℂⁿ.
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChernIntegral {
    pub value: f64,
    /// Error estimate: quadrature error bound or Monte Carlo standard error.
    pub error: f64,
    pub evaluations: u64,
}

/// ∫_{ℂⁿ} chern_top_density. The integrand is a product of n identical factors on ℂ,
/// so the radial route integrates one factor and raises it to the n-th power.
pub fn integrate_chern_top(n: usize, config: &ChernQuadrature) -> Result<ChernIntegral> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    match config {
        ChernQuadrature::Radial { tol, radius } => {
            let r_max = radius.unwrap_or(f64::INFINITY);
            // r = u/(1−u) maps [0,1) onto [0,∞)
            let u_max = if r_max.is_finite() { r_max / (1.0 + r_max) } else { 1.0 };
            let f = |u: f64| {
                if u >= 1.0 {
                    return 0.0;
                }
                let r = u / (1.0 - u);
                let dr = 1.0 / ((1.0 - u) * (1.0 - u));
                2.0 * r / (1.0 + r * r).powi(2) * dr
            };
            let mut evals = 0;
            let one = adaptive_simpson(&f, 0.0, u_max, *tol / n as f64, 50, &mut evals)?;
            Ok(ChernIntegral { value: one.0.powi(n as i32), error: n as f64 * one.1, evaluations: evals })
        }
        ChernQuadrature::MonteCarlo { samples, seed } => Ok(chern_monte_carlo(n, *samples, *seed)),
    }
}

/// Proposal per coordinate: the pushforward of the uniform measure on S² under a chart
/// scaled by s, density s²/(π(s²+|z|²)²). The weight stays bounded for s > 1.
fn chern_monte_carlo(n: usize, samples: u64, seed: u64) -> ChernIntegral {
    const SCALE: f64 = 1.5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0f64, 1.0).unwrap();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let mut w = 1.0;
        for _ in 0..n {
            // radial CDF of the proposal: 1 − s²/(s²+r²)
            let u: f64 = unit.sample(&mut rng);
            let r2 = SCALE * SCALE * u / (1.0 - u).max(f64::MIN_POSITIVE);
            let q = SCALE * SCALE / (std::f64::consts::PI * (SCALE * SCALE + r2).powi(2));
            let target = 1.0 / (std::f64::consts::PI * (1.0 + r2).powi(2));
            w *= target / q;
        }
        sum += w;
        sum_sq += w * w;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = (sum_sq / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
    ChernIntegral { value: mean, error: (var / m).sqrt(), evaluations: samples * n as u64 }
}

/// Adaptive Simpson quadrature; returns (value, error estimate).
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
    evals: &mut u64,
) -> Result<(f64, f64)> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        evals: &mut u64,
    ) -> Result<(f64, f64)> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        *evals += 2;
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok((left + right + delta / 15.0, delta.abs() / 15.0));
        }
        if depth == 0 {
            return Err(Error::Quadrature(format!(
                "adaptive Simpson hit depth limit on [{a}, {b}] with local error {:e}",
                delta.abs()
            )));
        }
        let l = recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, evals)?;
        let r = recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, evals)?;
        Ok((l.0 + r.0, l.1 + r.1))
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    *evals += 3;
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> ExtComplex<f64> {
        ExtComplex::finite(re, im)
    }

    #[test]
    fn p0_examples() {
        let p = p0(c(0.0, 0.0));
        assert_eq!(p.matrix()[(1, 1)].re, 1.0);
        assert_eq!(p.matrix()[(0, 0)].re, 0.0);
        let p = p0::<f64>(ExtComplex::Infinity);
        assert_eq!(p.matrix()[(0, 0)].re, 1.0);
        let p = p0(c(1.0, 0.0));
        for e in p.matrix().iter() {
            assert!((e.re - 0.5).abs() < 1e-15 && e.im.abs() < 1e-15);
        }
    }

    #[test]
    fn unit_vector_is_continuous_at_large_modulus() {
        let z = c(3.0e8, -4.0e8);
        let v = z.unit_vector();
        assert!((v[0] - Complex::new(0.6, -0.8)).norm() < 1e-15);
        assert!((v[1].re - 2.0e-9).abs() < 1e-22);
        let p = p0(z);
        let q = p0::<f64>(ExtComplex::Infinity);
        let diff = p.matrix() - q.matrix();
        assert!(max_abs_entry(&diff) < 1e-8);
    }

    #[test]
    fn pt_tensor_order() {
        let p = p_t(&[c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.matrix()[(3, 3)].re, 1.0);
        assert!((p.trace().re - 1.0).abs() < 1e-15);
        // z₁ outermost: p_T(∞, 0) lives on the basis vector e₀ ⊗ e₁
        let p = p_t(&[ExtComplex::Infinity, c(0.0, 0.0)]);
        assert_eq!(p.matrix()[(1, 1)].re, 1.0);
    }

    #[test]
    fn py_outside_and_centre() {
        let chart = BallChart::new(1);
        let out = p_y(&ChartPoint::Finite(vec![1.5, 0.0]), &chart);
        assert_eq!(out, p0(ExtComplex::Infinity));
        let centre = p_y(&ChartPoint::<f64>::origin(1), &chart);
        assert_eq!(centre, p0(c(0.0, 0.0)));
        let inf = p_y(&ChartPoint::<f64>::Infinity, &chart);
        assert_eq!(inf, p0(ExtComplex::Infinity));
    }

    #[test]
    fn chern_density_examples() {
        let pi = std::f64::consts::PI;
        assert!((chern_top_density(&[Complex::new(0.0, 0.0)]) - 1.0 / pi).abs() < 1e-15);
        assert!((chern_top_density(&[Complex::new(0.0, 1.0)]) - 1.0 / (4.0 * pi)).abs() < 1e-15);
        let z = [Complex::new(0.0, 0.0); 2];
        assert!((chern_top_density(&z) - 1.0 / (pi * pi)).abs() < 1e-15);
    }

    #[test]
    fn cyclic_product_zero_example() {
        let pts = vec![vec![c(0.0, 0.0)], vec![c(1.0, 0.0)], vec![ExtComplex::Infinity]];
        assert!(cyclic_chern_product(&pts, 1).unwrap().norm() < 1e-15);
        let same = vec![vec![c(0.3, -0.2)]; 5];
        assert!((cyclic_chern_product(&same, 2).unwrap().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn radial_chern_restricted() {
        for r in [0.5, 1.0, 3.0] {
            let v = integrate_chern_top(1, &ChernQuadrature::Radial { tol: 1e-10, radius: Some(r) }).unwrap();
            assert!((v.value - (1.0 - 1.0 / (1.0 + r * r))).abs() < 1e-9);
        }
    }
}
