//! Monte Carlo over products of spheres, with a diagonal-singularity importance
//! sampler, reproducible chunked parallel reduction, and Gauss–Legendre rules.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{inv_beta_reg, ln_beta};

use crate::error::{Error, Result};
use crate::geometry::{sample_sphere_point, sphere_volume, SpherePoint};

/// Adjacent points closer than this are treated as lying on the diagonal.
pub const DIAGONAL_GUARD: f64 = 1e-9;
/// Largest tolerated fraction of rejected samples.
pub const MAX_REJECTION_RATE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    /// β of the chain proposal; 0 gives the uniform product sampler.
    pub importance_exponent: f64,
    pub strata: Option<usize>,
    /// Samples per RNG stream. Results depend on it, not on `workers`.
    pub chunk_size: u64,
}

impl Default for MCConfig {
    fn default() -> Self {
        Self { samples: 100_000, seed: 0, workers: 1, importance_exponent: 0.0, strata: None, chunk_size: 4096 }
    }
}

impl MCConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, ..Self::default() }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_importance(mut self, beta: f64) -> Self {
        self.importance_exponent = beta;
        self
    }

    pub fn with_strata(mut self, strata: usize) -> Self {
        self.strata = Some(strata);
        self
    }

    pub fn validate(&self, sphere_dim: usize) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Configuration("samples must be at least 1".into()));
        }
        if self.workers == 0 || self.chunk_size == 0 {
            return Err(Error::Configuration("workers and chunk_size must be positive".into()));
        }
        let b = self.importance_exponent;
        if !(0.0..sphere_dim as f64).contains(&b) {
            return Err(Error::Configuration(format!("importance exponent {b} outside [0, {sphere_dim})")));
        }
        if self.strata == Some(0) {
            return Err(Error::Configuration("strata must be positive".into()));
        }
        Ok(())
    }
}

/// (S^{2n})^copies, with either the product volume measure or its normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductDomain {
    pub copies: usize,
    pub n: usize,
    pub normalized: bool,
}

impl ProductDomain {
    pub fn volume(copies: usize, n: usize) -> Self {
        Self { copies, n, normalized: false }
    }

    pub fn probability(copies: usize, n: usize) -> Self {
        Self { copies, n, normalized: true }
    }

    pub fn sphere_dim(&self) -> usize {
        2 * self.n
    }

    pub fn total_measure(&self) -> f64 {
        if self.normalized {
            1.0
        } else {
            sphere_volume(self.sphere_dim()).powi(self.copies as i32)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub imag: f64,
    pub imag_stderr: f64,
    pub n_samples: u64,
    /// Kish effective sample size of the importance weights.
    pub n_effective: f64,
    pub rejected: u64,
    pub max_abs_sample: f64,
}

impl Estimate {
    pub fn rejection_rate(&self) -> f64 {
        self.rejected as f64 / self.n_samples as f64
    }

    /// Half-width of the normal 95% interval.
    pub fn half_width(&self) -> f64 {
        1.959_963_984_540_054 * self.stderr
    }
}

/// One draw from a proposal: the points and the importance weight
/// (uniform density over proposal density).
#[derive(Clone, Debug)]
pub struct WeightedTuple {
    pub points: Vec<SpherePoint<f64>>,
    pub weight: f64,
}

/// Cyclic-chain proposal on (S^D)^m. A rotation r is chosen uniformly, x_r is uniform
/// (or stratified in its first coordinate), and x_{r+1}, …, x_{r+m−1} follow by steps
/// whose chordal length d has density ∝ d^{−β} relative to uniform.
#[derive(Clone, Debug)]
pub struct ChainSampler {
    copies: usize,
    dim: usize,
    beta: f64,
    log_norm: f64,
    step: Option<Beta<f64>>,
}

impl ChainSampler {
    pub fn new(domain: &ProductDomain, beta: f64) -> Result<Self> {
        let d = domain.sphere_dim() as f64;
        if !(0.0..d).contains(&beta) {
            return Err(Error::Configuration(format!("importance exponent {beta} outside [0, {d})")));
        }
        if domain.copies == 0 {
            return Err(Error::Configuration("domain needs at least one copy".into()));
        }
        let step = if beta > 0.0 {
            Some(Beta::new((d - beta) / 2.0, d / 2.0).map_err(|e| Error::Configuration(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { copies: domain.copies, dim: domain.sphere_dim(), beta, log_norm: step_log_normalizer(d, beta), step })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Draws a tuple; `stratum = Some((j, s))` confines the chain base to the j-th of s
    /// equal-probability bands in the first ambient coordinate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, stratum: Option<(usize, usize)>) -> WeightedTuple {
        let m = self.copies;
        let r = if m > 1 && self.beta > 0.0 { rng.random_range(0..m) } else { 0 };
        let base = match stratum {
            Some((j, s)) => self.stratified_point(rng, j, s),
            None => sample_sphere_point(rng, self.dim / 2),
        };
        let mut points = vec![base.clone(); m];
        let mut prev = base;
        for i in 1..m {
            let next = self.step(rng, &prev);
            points[(r + i) % m] = next.clone();
            prev = next;
        }
        let weight = self.weight(&points);
        WeightedTuple { points, weight }
    }

    /// Uniform density over proposal density at `points`.
    pub fn weight(&self, points: &[SpherePoint<f64>]) -> f64 {
        let m = points.len();
        if self.beta == 0.0 || m < 2 {
            return 1.0;
        }
        let log_g: Vec<f64> = (0..m)
            .map(|l| -self.beta * points[l].chordal_distance(&points[(l + 1) % m]).ln() - self.log_norm)
            .collect();
        let total: f64 = log_g.iter().sum();
        // chain starting at r uses every cyclic link except (r−1, r)
        let terms: Vec<f64> = (0..m).map(|r| total - log_g[(r + m - 1) % m]).collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = terms.iter().map(|t| (t - top).exp()).sum::<f64>() / m as f64;
        (-(top + mean.ln())).exp()
    }

    fn step<R: Rng + ?Sized>(&self, rng: &mut R, x: &SpherePoint<f64>) -> SpherePoint<f64> {
        let Some(step) = &self.step else {
            return sample_sphere_point(rng, self.dim / 2);
        };
        let w: f64 = step.sample(rng);
        let d = 2.0 * w.sqrt();
        let xa = x.ambient();
        // unit direction orthogonal to x
        let mut u: Vec<f64> = (0..xa.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let proj: f64 = u.iter().zip(xa).map(|(a, b)| a * b).sum();
        u.iter_mut().zip(xa).for_each(|(a, b)| *a -= proj * b);
        let un = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let c = 1.0 - d * d / 2.0;
        let s = d * (1.0 - d * d / 4.0).max(0.0).sqrt();
        SpherePoint::normalized(xa.iter().zip(&u).map(|(a, b)| c * a + s * b / un).collect())
    }

    fn stratified_point<R: Rng + ?Sized>(&self, rng: &mut R, j: usize, s: usize) -> SpherePoint<f64> {
        let half = self.dim as f64 / 2.0;
        let u = (j as f64 + rng.random::<f64>()) / s as f64;
        // (1 + s₀)/2 ~ Beta(D/2, D/2) for the uniform measure on S^D
        let s0 = 2.0 * inv_beta_reg(half, half, u) - 1.0;
        let mut rest: Vec<f64> = (0..self.dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let rn = rest.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = (1.0 - s0 * s0).max(0.0).sqrt() / rn;
        rest.iter_mut().for_each(|a| *a *= scale);
        let mut amb = Vec::with_capacity(self.dim + 1);
        amb.push(s0);
        amb.extend(rest);
        SpherePoint::normalized(amb)
    }
}

/// log E_u[d^{−β}] for u uniform on S^D and d the chordal distance to a fixed point.
pub fn step_log_normalizer(dim: f64, beta: f64) -> f64 {
    -beta * std::f64::consts::LN_2 + ln_beta((dim - beta) / 2.0, dim / 2.0) - ln_beta(dim / 2.0, dim / 2.0)
}

/// One weighted draw from the diagonal-singularity proposal.
pub fn diagonal_importance_sampler<R: Rng + ?Sized>(
    domain: &ProductDomain,
    beta: f64,
    rng: &mut R,
) -> Result<WeightedTuple> {
    Ok(ChainSampler::new(domain, beta)?.sample(rng, None))
}

/// Running moments of one stratum: count, mean and centred sum of squares per
/// component, merged with Chan's pairwise update.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    count: f64,
    mean: [f64; 2],
    m2: [f64; 2],
}

impl Moments {
    fn push(&mut self, v: [f64; 2]) {
        self.count += 1.0;
        for c in 0..2 {
            let delta = v[c] - self.mean[c];
            self.mean[c] += delta / self.count;
            self.m2[c] += delta * (v[c] - self.mean[c]);
        }
    }

    fn merge(&self, o: &Self) -> Self {
        if self.count == 0.0 {
            return *o;
        }
        if o.count == 0.0 {
            return *self;
        }
        let count = self.count + o.count;
        let mut out = Self { count, ..Self::default() };
        for c in 0..2 {
            let delta = o.mean[c] - self.mean[c];
            out.mean[c] = self.mean[c] + delta * o.count / count;
            out.m2[c] = self.m2[c] + o.m2[c] + delta * delta * self.count * o.count / count;
        }
        out
    }
}

#[derive(Clone, Debug)]
struct Partial {
    strata: Vec<Moments>,
    weight_sum: f64,
    weight_sq_sum: f64,
    rejected: u64,
    max_abs: f64,
}

impl Partial {
    fn new(strata: usize) -> Self {
        Self {
            strata: vec![Moments::default(); strata],
            weight_sum: 0.0,
            weight_sq_sum: 0.0,
            rejected: 0,
            max_abs: 0.0,
        }
    }

    fn merge(&self, o: &Self) -> Self {
        Self {
            strata: self.strata.iter().zip(&o.strata).map(|(a, b)| a.merge(b)).collect(),
            weight_sum: self.weight_sum + o.weight_sum,
            weight_sq_sum: self.weight_sq_sum + o.weight_sq_sum,
            rejected: self.rejected + o.rejected,
            max_abs: self.max_abs.max(o.max_abs),
        }
    }
}

fn pairwise_merge(mut parts: Vec<Partial>) -> Partial {
    while parts.len() > 1 {
        parts = parts.chunks(2).map(|c| if c.len() == 2 { c[0].merge(&c[1]) } else { c[0].clone() }).collect();
    }
    parts.pop().expect("at least one chunk")
}

fn has_near_diagonal(points: &[SpherePoint<f64>]) -> bool {
    let m = points.len();
    m > 1 && (0..m).any(|l| points[l].chordal_distance(&points[(l + 1) % m]) < DIAGONAL_GUARD)
}

/// ∫ integrand over the domain. The integrand returns `None` where it is undefined;
/// such samples and near-diagonal proposals count as rejections contributing zero.
pub fn mc_integrate<F>(integrand: F, domain: &ProductDomain, config: &MCConfig) -> Result<Estimate>
where
    F: Fn(&[SpherePoint<f64>]) -> Option<Complex64> + Sync,
{
    config.validate(domain.sphere_dim())?;
    let sampler = ChainSampler::new(domain, config.importance_exponent)?;
    let n_strata = config.strata.unwrap_or(1);
    let n_chunks = config.samples.div_ceil(config.chunk_size);

    let run_chunk = |c: u64| -> Partial {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(c);
        let start = c * config.chunk_size;
        let end = (start + config.chunk_size).min(config.samples);
        let mut part = Partial::new(n_strata);
        for i in start..end {
            let j = (i % n_strata as u64) as usize;
            let stratum = config.strata.map(|s| (j, s));
            let t = sampler.sample(&mut rng, stratum);
            let value = if has_near_diagonal(&t.points) { None } else { integrand(&t.points) };
            let v = match value {
                Some(v) if v.re.is_finite() && v.im.is_finite() => v * t.weight,
                _ => {
                    part.rejected += 1;
                    Complex64::new(0.0, 0.0)
                }
            };
            part.strata[j].push([v.re, v.im]);
            part.weight_sum += t.weight;
            part.weight_sq_sum += t.weight * t.weight;
            part.max_abs = part.max_abs.max(v.norm());
        }
        part
    };

    let parts: Vec<Partial> = if config.workers == 1 {
        (0..n_chunks).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Configuration(e.to_string()))?;
        pool.install(|| (0..n_chunks).into_par_iter().map(run_chunk).collect())
    };
    let total = pairwise_merge(parts);

    if total.rejected as f64 > MAX_REJECTION_RATE * config.samples as f64 {
        return Err(Error::Rejections { rejected: total.rejected, samples: config.samples });
    }

    // equal-probability strata: mean of stratum means, variance Σ σ_j²/(n_j S²)
    let s = n_strata as f64;
    let mut value = [0.0; 2];
    let mut var = [0.0; 2];
    for m in &total.strata {
        for c in 0..2 {
            value[c] += m.mean[c] / s;
            if m.count > 1.0 {
                var[c] += m.m2[c] / (m.count - 1.0) / m.count / (s * s);
            }
        }
    }
    let scale = domain.total_measure();
    Ok(Estimate {
        value: value[0] * scale,
        stderr: var[0].sqrt() * scale,
        imag: value[1] * scale,
        imag_stderr: var[1].sqrt() * scale,
        n_samples: config.samples,
        n_effective: total.weight_sum * total.weight_sum / total.weight_sq_sum,
        rejected: total.rejected,
        max_abs_sample: total.max_abs * scale,
    })
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    (x.iter().map(|t| a + h * (t + 1.0)).collect(), w.iter().map(|v| v * h).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7);
        for p in 0..14 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
        let (_, w) = gauss_legendre(200);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn constant_integrand_is_exact() {
        let d = ProductDomain::probability(4, 1);
        let cfg = MCConfig::new(1000, 3).with_importance(0.0);
        let e = mc_integrate(|_| Some(Complex64::new(2.5, 0.0)), &d, &cfg).unwrap();
        assert_eq!(e.value, 2.5);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn normalizer_matches_radial_quadrature() {
        // E[d^{−β}] on S^D from the chordal-distance density ∝ d^{D−1}(1 − d²/4)^{(D−2)/2}
        for (dim, beta) in [(2.0, 1.0), (2.0, 1.5), (4.0, 2.5), (6.0, 1.0)] {
            let (x, w) = gauss_legendre_on(0.0, 2.0, 400);
            let dens = |d: f64| d.powf(dim - 1.0) * (1.0 - d * d / 4.0).max(0.0).powf((dim - 2.0) / 2.0);
            let z: f64 = x.iter().zip(&w).map(|(d, w)| w * dens(*d)).sum();
            let (y, v) = gauss_legendre_on(0.0, 1.0, 400);
            // substitute d = 2 s^{1/(D−β)} to remove the endpoint singularity
            let e = dim - beta;
            let m: f64 = y
                .iter()
                .zip(&v)
                .map(|(s, v)| {
                    let d = 2.0 * s.powf(1.0 / e);
                    let jac = 2.0 / e * s.powf(1.0 / e - 1.0);
                    v * d.powf(-beta) * dens(d) * jac
                })
                .sum();
            let exact = step_log_normalizer(dim, beta).exp();
            assert!((m / z - exact).abs() < 1e-6 * exact, "D={dim} β={beta}: {} vs {exact}", m / z);
        }
    }

    #[test]
    fn chain_steps_have_the_tilted_distance_law() {
        let d = ProductDomain::probability(2, 1);
        let s = ChainSampler::new(&d, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // on S² the tilted law of d is uniform on [0, 2]
        let n = 20000;
        let mean: f64 = (0..n)
            .map(|_| {
                let t = s.sample(&mut rng, None);
                t.points[0].chordal_distance(&t.points[1])
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn rejections_are_reported() {
        let d = ProductDomain::probability(1, 1);
        let cfg = MCConfig::new(1000, 0);
        let err = mc_integrate(
            |p| {
                if p[0].ambient()[0] > 0.9 {
                    None
                } else {
                    Some(1.0.into())
                }
            },
            &d,
            &cfg,
        );
        assert!(matches!(err, Err(Error::Rejections { .. })));
    }

    #[test]
    fn stratification_reduces_error_for_latitude_integrand() {
        let d = ProductDomain::probability(1, 1);
        let f = |p: &[SpherePoint<f64>]| Some(Complex64::new(p[0].ambient()[0].powi(2), 0.0));
        let plain = mc_integrate(f, &d, &MCConfig::new(20000, 5)).unwrap();
        let strat = mc_integrate(f, &d, &MCConfig::new(20000, 5).with_strata(16)).unwrap();
        assert!((plain.value - 1.0 / 3.0).abs() < 4.0 * plain.stderr);
        assert!((strat.value - 1.0 / 3.0).abs() < 4.0 * strat.stderr);
        assert!(strat.stderr < 0.2 * plain.stderr);
    }
}
