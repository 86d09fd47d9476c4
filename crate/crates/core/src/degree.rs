//! Degrees of maps S^{2n} → S^{2n}: the de Rham pullback of the Chern form, the
//! Hölder kernel integral, the operator-level pairing, and signed preimage counting.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{projection_difference_trace, CliffordEvaluator, GammaCache, KernelConstants};
use crate::geometry::{
    conformal_volume_factor, norm, sample_sphere_point, sphere_to_stereo, stereo_to_sphere, ChartPoint, SpherePoint,
};
use crate::maps::SampledMap;
use crate::projections::chern_top_density;
use crate::quadrature::{mc_integrate, MCConfig, ProductDomain};
use crate::specmod::{connes_pairing, ProjectionField};

/// sign(S^{2n}): the signature of every even sphere vanishes.
pub const SPHERE_SIGNATURE: i64 = 0;

/// 95% normal quantile used for every reported interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DeRham,
    HolderKernel,
    ConnesPairing,
    PreimageOracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::DeRham => "de_rham",
            Self::HolderKernel => "holder_kernel",
            Self::ConnesPairing => "connes_pairing",
            Self::PreimageOracle => "preimage_oracle",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "de_rham" | "smooth" => Ok(Self::DeRham),
            "holder_kernel" | "holder" => Ok(Self::HolderKernel),
            "connes_pairing" | "pairing" => Ok(Self::ConnesPairing),
            "preimage_oracle" | "preimage" | "oracle" => Ok(Self::PreimageOracle),
            _ => Err(Error::Configuration(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Conclusive,
    /// The 95% interval is too wide to single out an integer.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub method: Method,
    pub map: String,
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub rounded: i64,
    /// |estimate − rounded|
    pub deviation: f64,
    pub status: Status,
    pub k: Option<usize>,
    pub alpha: f64,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub truncation: Option<usize>,
    pub declared_degree: Option<i64>,
    pub agrees_with_declared: Option<bool>,
    pub wall_time: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl DegreeReport {
    fn new(method: Method, map: &SampledMap, estimate: f64, stderr: f64, started: Instant) -> Self {
        let rounded = estimate.round() as i64;
        let status = if Z95 * stderr < 0.5 && estimate.is_finite() { Status::Conclusive } else { Status::Inconclusive };
        let declared = map.declared_degree();
        Self {
            method,
            map: map.label().to_string(),
            n: map.n(),
            estimate,
            stderr,
            rounded,
            deviation: (estimate - rounded as f64).abs(),
            status,
            k: None,
            alpha: map.alpha(),
            samples: None,
            seed: None,
            truncation: None,
            declared_degree: declared,
            agrees_with_declared: declared.filter(|_| status == Status::Conclusive).map(|d| d == rounded),
            wall_time: started.elapsed().as_secs_f64(),
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn half_width(&self) -> f64 {
        Z95 * self.stderr
    }

    pub fn is_conclusive(&self) -> bool {
        self.status == Status::Conclusive
    }

    /// The integer claimed by the report, if any.
    pub fn degree(&self) -> Option<i64> {
        self.is_conclusive().then_some(self.rounded)
    }

    pub fn interval_contains(&self, d: f64) -> bool {
        (self.estimate - d).abs() <= self.half_width()
    }
}

/// F = τ∘ν∘f in real coordinates, or None where f leaves the ball chart.
fn ball_coordinates(f: &SampledMap, x: &[f64]) -> Option<Vec<f64>> {
    let y = f.eval(&ChartPoint::Finite(x.to_vec()));
    let b = f.chart().nu(&y)?;
    Some(f.chart().tau(&b).iter().flat_map(|z| [z.re, z.im]).collect())
}

/// Central-difference Jacobian of g at x; None if any stencil point is undefined.
fn fd_jacobian(g: impl Fn(&[f64]) -> Option<Vec<f64>>, x: &[f64]) -> Option<DMatrix<f64>> {
    let d = x.len();
    let h = 1e-6 * (1.0 + norm(x));
    let mut jac = DMatrix::zeros(d, d);
    let mut xp = x.to_vec();
    for j in 0..d {
        xp[j] = x[j] + h;
        let fp = g(&xp)?;
        xp[j] = x[j] - h;
        let fm = g(&xp)?;
        xp[j] = x[j];
        for i in 0..d {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Some(jac)
}

/// Density of f*(top Chern form of p_Y) with respect to Lebesgue measure in the chart.
/// Returns None when the finite differences produce non-finite values.
pub fn pullback_density(f: &SampledMap, x: &[f64]) -> Option<f64> {
    let Some(center) = ball_coordinates(f, x) else {
        return Some(0.0);
    };
    // stencils straddling the edge of the ball chart see a density that vanishes there
    let Some(jac) = fd_jacobian(|y| ball_coordinates(f, y), x) else {
        return Some(0.0);
    };
    let z: Vec<Complex64> = center.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    let v = chern_top_density(&z) * jac.determinant();
    v.is_finite().then_some(v)
}

/// deg f = ∫ f* ch[p_Y], sampled uniformly on the source sphere.
pub fn smooth_degree(f: &SampledMap, config: &MCConfig) -> Result<DegreeReport> {
    let started = Instant::now();
    let n = f.n();
    let domain = ProductDomain::volume(1, n);
    let cfg = MCConfig { importance_exponent: 0.0, ..config.clone() };
    let est = mc_integrate(
        |p: &[SpherePoint<f64>]| {
            let x = sphere_to_stereo(&p[0]);
            let c = x.coords()?;
            let rho = conformal_volume_factor(&x, n).ok()?;
            pullback_density(f, c).map(|v| Complex64::new(v / rho, 0.0))
        },
        &domain,
        &cfg,
    )?;
    let mut r = DegreeReport::new(Method::DeRham, f, est.value, est.stderr, started);
    r.samples = Some(cfg.samples);
    r.seed = Some(cfg.seed);
    r.diagnostics.insert("rejection_rate".into(), est.rejection_rate());
    r.diagnostics.insert("max_abs_sample".into(), est.max_abs_sample);
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preimage {
    pub point: Vec<f64>,
    pub sign: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreimageCount {
    pub degree: i64,
    pub preimages: Vec<Preimage>,
    pub starts: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub starts: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { starts: 256, seed: 17 }
    }
}

/// Preimages where Df shrinks the round metric below this are treated as critical.
pub const MIN_SPHERE_STRETCH: f64 = 1e-4;

/// A fixed value with no special position relative to any fixture.
pub fn default_regular_value(n: usize) -> ChartPoint<f64> {
    const V: [f64; 8] = [0.3127, -0.2659, 0.1487, 0.5531, -0.6874, 0.2291, -0.1853, 0.4066];
    ChartPoint::Finite(V.iter().cycle().take(2 * n).copied().collect())
}

/// Source parametrizations used by Newton: the chart itself near the south pole and
/// its inversion u ↦ u/|u|² near ∞.
#[derive(Clone, Copy, PartialEq)]
enum SourceChart {
    Direct,
    Inverted,
}

fn inverted(u: &[f64]) -> ChartPoint<f64> {
    let r2: f64 = u.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        ChartPoint::Infinity
    } else {
        ChartPoint::Finite(u.iter().map(|v| v / r2).collect())
    }
}

fn source_point(chart: SourceChart, u: &[f64]) -> ChartPoint<f64> {
    match chart {
        SourceChart::Direct => ChartPoint::Finite(u.to_vec()),
        SourceChart::Inverted => inverted(u),
    }
}

fn residual(f: &SampledMap, chart: SourceChart, u: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let v = f.eval(&source_point(chart, u));
    let c = v.coords()?;
    let r: Vec<f64> = c.iter().zip(y).map(|(a, b)| a - b).collect();
    r.iter().all(|v| v.is_finite()).then_some(r)
}

fn newton(f: &SampledMap, chart: SourceChart, start: Vec<f64>, y: &[f64]) -> Option<Vec<f64>> {
    let tol = 1e-11 * (1.0 + norm(y));
    let mut u = start;
    let mut r = residual(f, chart, &u, y)?;
    for _ in 0..100 {
        let rn = norm(&r);
        if rn < tol {
            return Some(u);
        }
        let jac = fd_jacobian(|v| residual(f, chart, v, y), &u)?;
        let step = jac.lu().solve(&DVector::from_vec(r.iter().map(|v| -v).collect()))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + lambda * b).collect();
            if let Some(rt) = residual(f, chart, &trial, y) {
                if norm(&rt) < rn {
                    u = trial;
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return None;
            }
        }
    }
    (norm(&r) < tol).then_some(u)
}

/// Σ sign det Df over the preimages of `value`, found by multi-start Newton.
pub fn preimage_oracle(f: &SampledMap, value: &ChartPoint<f64>, options: &OracleOptions) -> Result<PreimageCount> {
    let n = f.n();
    let y = value
        .coords()
        .ok_or_else(|| Error::NonRegularValue("value at the chart's point at infinity; choose another".into()))?;
    if y.len() != 2 * n {
        return Err(Error::Dimension { expected: 2 * n, got: y.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut found: Vec<(SpherePoint<f64>, i64)> = Vec::new();
    for _ in 0..options.starts {
        let s: SpherePoint<f64> = sample_sphere_point(&mut rng, n);
        let x = sphere_to_stereo(&s);
        let (chart, start) = match (&x, s.ambient()[0] <= 0.0) {
            (ChartPoint::Finite(c), true) => (SourceChart::Direct, c.clone()),
            (ChartPoint::Finite(c), false) => {
                let r2: f64 = c.iter().map(|v| v * v).sum();
                (SourceChart::Inverted, c.iter().map(|v| v / r2).collect())
            }
            (ChartPoint::Infinity, _) => (SourceChart::Inverted, vec![0.0; 2 * n]),
        };
        let Some(root) = newton(f, chart, start, y) else {
            continue;
        };
        let point = stereo_to_sphere(&source_point(chart, &root), n);
        if found.iter().any(|(p, _)| p.chordal_distance(&point) < 1e-6) {
            continue;
        }
        let jac = fd_jacobian(|v| residual(f, chart, v, y), &root)
            .ok_or_else(|| Error::NonRegularValue("Jacobian undefined at a preimage".into()))?;
        // smallest singular value of Df measured in the round metric on both sides
        let stretch = (1.0 + root.iter().map(|v| v * v).sum::<f64>()) / (1.0 + y.iter().map(|v| v * v).sum::<f64>());
        let smin = jac.clone().singular_values().min() * stretch;
        if !(smin > MIN_SPHERE_STRETCH) {
            return Err(Error::NonRegularValue(format!(
                "near-singular Jacobian at a preimage (σ_min = {smin:.2e}); redraw the value"
            )));
        }
        // the inversion u ↦ u/|u|² reverses orientation
        let mut sign = jac.determinant().signum() as i64;
        if chart == SourceChart::Inverted {
            sign = -sign;
        }
        found.push((point, sign));
    }
    let degree = found.iter().map(|(_, s)| s).sum();
    let preimages = found.into_iter().map(|(p, sign)| Preimage { point: p.ambient().to_vec(), sign }).collect();
    Ok(PreimageCount { degree, preimages, starts: options.starts })
}

pub fn oracle_report(f: &SampledMap, value: &ChartPoint<f64>, options: &OracleOptions) -> Result<DegreeReport> {
    let started = Instant::now();
    let c = preimage_oracle(f, value, options)?;
    let mut r = DegreeReport::new(Method::PreimageOracle, f, c.degree as f64, 0.0, started);
    r.seed = Some(options.seed);
    r.diagnostics.insert("preimages".into(), c.preimages.len() as f64);
    r.diagnostics.insert("starts".into(), c.starts as f64);
    Ok(r)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HolderOptions {
    /// Also estimate the integral of the terms carrying the harmonic kernel.
    pub harmonic_diagnostic: bool,
}

/// The weight-zero part of f̃_k on (S^{2n})^{2k} with the round volume measure:
/// (c_n/√2)^{2k} ∏ chord_l^{−2n} str(∏ c(u_l)) tr(p₁ ∏ (p_l − p_{l+1})), u_l the unit
/// chart direction of x_l − x_{l+1}. The conformal factors of the chart cancel.
pub struct HolderIntegrand<'a> {
    map: &'a SampledMap,
    prefactor: f64,
    clifford: CliffordEvaluator,
}

impl<'a> HolderIntegrand<'a> {
    pub fn new(map: &'a SampledMap, k: usize, consts: &KernelConstants) -> Self {
        Self { map, prefactor: consts.k1_prefactor().powi(2 * k as i32), clifford: CliffordEvaluator::new(map.n()) }
    }

    pub fn eval(&self, pts: &[SpherePoint<f64>]) -> Option<Complex64> {
        let n = self.map.n();
        let m = pts.len();
        let xs: Vec<ChartPoint<f64>> = pts.iter().map(sphere_to_stereo).collect();
        let coords: Vec<&[f64]> = xs.iter().map(|x| x.coords()).collect::<Option<_>>()?;
        let mut scale = self.prefactor;
        let mut dirs = Vec::with_capacity(m);
        for l in 0..m {
            let d: Vec<f64> = coords[l].iter().zip(coords[(l + 1) % m]).map(|(a, b)| a - b).collect();
            let r = norm(&d);
            if r == 0.0 {
                return None;
            }
            dirs.push(d.iter().map(|v| v / r).collect::<Vec<f64>>());
            scale *= pts[l].chordal_distance(&pts[(l + 1) % m]).powi(-2 * n as i32);
        }
        let mapped: Vec<_> = xs.iter().map(|x| self.map.target(x)).collect();
        let q = projection_difference_trace(&mapped);
        if q == Complex64::new(0.0, 0.0) {
            return Some(q);
        }
        let s = self.clifford.supertrace(dirs.iter().map(|d| d.as_slice()));
        Some(s * q * scale)
    }
}

/// deg f = −sign(S^{2n}) + (−1)^k ∫ f̃_k, with the index of the twisted signature
/// operator divided by 2ⁿ and only the weight-zero terms integrated.
pub fn holder_degree(
    f: &SampledMap,
    k: usize,
    consts: &KernelConstants,
    config: &MCConfig,
    options: &HolderOptions,
) -> Result<DegreeReport> {
    let started = Instant::now();
    let n = f.n();
    if (k as f64) <= n as f64 / f.alpha() {
        return Err(Error::Precondition(format!(
            "k = {k} must exceed n/α = {:.3} for map `{}`",
            n as f64 / f.alpha(),
            f.label()
        )));
    }
    if consts.n != n {
        return Err(Error::Dimension { expected: n, got: consts.n });
    }
    let domain = ProductDomain::volume(2 * k, n);
    let integrand = HolderIntegrand::new(f, k, consts);
    let est = mc_integrate(|p| integrand.eval(p), &domain, config)?;
    let sign_k = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let norm_factor = 2f64.powi(n as i32);
    let estimate = -SPHERE_SIGNATURE as f64 - sign_k * est.value / norm_factor;
    let mut r = DegreeReport::new(Method::HolderKernel, f, estimate, est.stderr / norm_factor, started);
    r.k = Some(k);
    r.samples = Some(config.samples);
    r.seed = Some(config.seed);
    r.diagnostics.insert("importance_exponent".into(), config.importance_exponent);
    r.diagnostics.insert("raw_integral".into(), sign_k * est.value);
    r.diagnostics.insert("imag".into(), -sign_k * est.imag / norm_factor);
    r.diagnostics.insert("imag_stderr".into(), est.imag_stderr / norm_factor);
    r.diagnostics.insert("n_effective".into(), est.n_effective);
    r.diagnostics.insert("rejection_rate".into(), est.rejection_rate());
    r.diagnostics.insert("max_abs_sample".into(), est.max_abs_sample);
    if options.harmonic_diagnostic {
        let cache = GammaCache::new(k)?;
        let h = mc_integrate(
            |p: &[SpherePoint<f64>]| {
                let xs: Vec<ChartPoint<f64>> = p.iter().map(sphere_to_stereo).collect();
                let mapped: Vec<_> = xs.iter().map(|x| f.target(x)).collect();
                let terms = cache.evaluate(&xs, &mapped, consts).ok()?;
                let rho: f64 = xs.iter().map(|x| conformal_volume_factor(x, n)).product::<Result<f64>>().ok()?;
                Some((terms.total() - terms.weight_zero()) / rho)
            },
            &domain,
            config,
        )?;
        r.diagnostics.insert("harmonic_part".into(), -sign_k * h.value / norm_factor);
        r.diagnostics.insert("harmonic_part_stderr".into(), h.stderr / norm_factor);
    }
    r.wall_time = started.elapsed().as_secs_f64();
    Ok(r)
}

/// The pairing route as a degree report; the truncation drift between L and L/2
/// stands in for the standard error.
pub fn pairing_degree(f: &SampledMap, k: usize, l: usize, t: f64) -> Result<DegreeReport> {
    let started = Instant::now();
    let p = connes_pairing(&ProjectionField::Pullback(f.clone()), k, l, t)?;
    let drift = p.drift.map(f64::abs).unwrap_or(f64::INFINITY);
    let mut r = DegreeReport::new(Method::ConnesPairing, f, p.degree, drift, started);
    r.k = Some(k);
    r.truncation = Some(l);
    r.diagnostics.insert("raw".into(), p.raw);
    r.diagnostics.insert("raw_imag".into(), p.raw_imag);
    r.diagnostics.insert("t".into(), t);
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySettings {
    pub mc: MCConfig,
    pub holder_k: Option<usize>,
    pub pairing_k: usize,
    pub pairing_l: usize,
    pub oracle: OracleOptions,
}

impl Default for ConsistencySettings {
    fn default() -> Self {
        Self {
            mc: MCConfig::new(200_000, 1),
            holder_k: None,
            pairing_k: 2,
            pairing_l: 16,
            oracle: OracleOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub map: String,
    pub reports: Vec<DegreeReport>,
    pub skipped: Vec<(Method, String)>,
    pub agree: bool,
    pub degree: Option<i64>,
    pub discrepancy: Option<String>,
}

/// Runs each method and checks that all conclusive reports round to the same integer.
pub fn degree_consistency(
    f: &SampledMap,
    methods: &[Method],
    settings: &ConsistencySettings,
) -> Result<ConsistencyReport> {
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for &m in methods {
        let r = match m {
            Method::DeRham => smooth_degree(f, &settings.mc),
            Method::PreimageOracle => oracle_report(f, &default_regular_value(f.n()), &settings.oracle),
            Method::ConnesPairing if f.n() != 1 => {
                skipped.push((m, "pairing is implemented on S² only".into()));
                continue;
            }
            Method::ConnesPairing => pairing_degree(f, settings.pairing_k, settings.pairing_l, 1.0),
            Method::HolderKernel => {
                let k = settings.holder_k.unwrap_or((f.n() as f64 / f.alpha()).floor() as usize + 1).max(2);
                holder_degree(f, k, &KernelConstants::analytic(f.n()), &settings.mc, &HolderOptions::default())
            }
        };
        match r {
            Ok(r) => reports.push(r),
            Err(e) => skipped.push((m, e.to_string())),
        }
    }
    if reports.len() < 2 {
        return Err(Error::Precondition(format!(
            "degree_consistency needs at least two applicable methods, got {}",
            reports.len()
        )));
    }
    let conclusive: Vec<&DegreeReport> = reports.iter().filter(|r| r.is_conclusive()).collect();
    let first = conclusive.first().map(|r| r.rounded);
    let agree = conclusive.len() == reports.len() && conclusive.iter().all(|r| Some(r.rounded) == first);
    let discrepancy = (!agree).then(|| {
        reports
            .iter()
            .map(|r| format!("{}: {:.4} ± {:.4} ({:?})", r.method.name(), r.estimate, r.half_width(), r.status))
            .collect::<Vec<_>>()
            .join("; ")
    });
    Ok(ConsistencyReport {
        map: f.label().to_string(),
        reports,
        skipped,
        agree,
        degree: if agree { first } else { None },
        discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;

    #[test]
    fn holder_integrand_matches_chart_form() {
        // sphere-picture integrand times the conformal factors is the chart-picture
        // weight-zero term computed from the kernels
        use crate::exterior::weight_zero_factorized;
        let f = maps::power(2);
        let c = KernelConstants::analytic(1);
        let pts: Vec<ChartPoint<f64>> =
            [[0.1, 0.4], [-0.3, 0.2], [0.7, -0.5], [1.2, 0.9]].iter().map(|p| ChartPoint::Finite(p.to_vec())).collect();
        let sph: Vec<SpherePoint<f64>> = pts.iter().map(|x| stereo_to_sphere(x, 1)).collect();
        let a = HolderIntegrand::new(&f, 2, &c).eval(&sph).unwrap();
        let mapped: Vec<_> = pts.iter().map(|x| f.target(x)).collect();
        let rho: f64 = pts.iter().map(|x| conformal_volume_factor(x, 1).unwrap()).product();
        let b = weight_zero_factorized(&pts, &mapped, &c).unwrap() / rho;
        assert!((a - b).norm() < 1e-10 * b.norm().max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn pullback_density_of_identity_is_the_chern_density() {
        let f = maps::identity(1);
        let x = [0.3, -0.2];
        let r2: f64 = 0.13;
        // τ(x) = x/(1−r²); Jacobian determinant (1+r²)/(1−r²)³ in two dimensions
        let z = 0.13f64.sqrt() / (1.0 - r2);
        let expect = 1.0 / (std::f64::consts::PI * (1.0 + z * z).powi(2)) * (1.0 + r2) / (1.0 - r2).powi(3);
        assert!((pullback_density(&f, &x).unwrap() - expect).abs() < 1e-7 * expect);
    }

    #[test]
    fn oracle_counts_fixture_degrees() {
        let v = default_regular_value(1);
        let o = OracleOptions::default();
        for d in -2..=3 {
            assert_eq!(preimage_oracle(&maps::power(d), &v, &o).unwrap().degree, d, "z^{d}");
        }
        assert_eq!(preimage_oracle(&maps::antipodal(1), &v, &o).unwrap().degree, -1);
        assert_eq!(preimage_oracle(&maps::constant(1), &v, &o).unwrap().preimages.len(), 0);
        assert_eq!(preimage_oracle(&maps::antipodal(2), &default_regular_value(2), &o).unwrap().degree, -1);
    }

    #[test]
    fn critical_value_is_rejected() {
        // 0 is a critical value of z²
        let r = preimage_oracle(&maps::power(2), &ChartPoint::origin(1), &OracleOptions::default());
        assert!(matches!(r, Err(Error::NonRegularValue(_))));
    }

    #[test]
    fn holder_hypothesis_is_enforced() {
        let f = maps::snowflake(2, 0.6).unwrap();
        let r = holder_degree(&f, 1, &KernelConstants::analytic(1), &MCConfig::new(10, 0), &HolderOptions::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn report_status_follows_interval_width() {
        let f = maps::identity(1);
        let t = Instant::now();
        assert!(DegreeReport::new(Method::DeRham, &f, 1.02, 0.1, t).is_conclusive());
        let r = DegreeReport::new(Method::DeRham, &f, 1.02, 0.3, t);
        assert_eq!(r.status, Status::Inconclusive);
        assert_eq!(r.degree(), None);
    }
}
