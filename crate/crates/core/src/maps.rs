//! Maps S^{2n} → S^{2n} in stereographic coordinates and the fixture registry.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ChartPoint;
use crate::projections::{p_y, BallChart, ExtComplex, HermitianProjection};

type MapFn = dyn Fn(&ChartPoint<f64>) -> ChartPoint<f64> + Send + Sync;

/// A map between stereographic charts with declared Hölder exponent, target ball
/// chart, and optional metadata used by the oracles.
#[derive(Clone)]
pub struct SampledMap {
    label: String,
    n: usize,
    alpha: f64,
    degree: Option<i64>,
    charge: Option<i64>,
    smooth: bool,
    chart: BallChart,
    f: Arc<MapFn>,
}

impl fmt::Debug for SampledMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledMap")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("alpha", &self.alpha)
            .field("degree", &self.degree)
            .field("charge", &self.charge)
            .finish()
    }
}

impl SampledMap {
    pub fn new<F>(label: impl Into<String>, n: usize, alpha: f64, f: F) -> Result<Self>
    where
        F: Fn(&ChartPoint<f64>) -> ChartPoint<f64> + Send + Sync + 'static,
    {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Precondition(format!("Hölder exponent {alpha} outside (0, 1]")));
        }
        if n == 0 {
            return Err(Error::Precondition("n must be at least 1".into()));
        }
        Ok(Self {
            label: label.into(),
            n,
            alpha,
            degree: None,
            charge: None,
            smooth: alpha == 1.0,
            chart: BallChart::new(n),
            f: Arc::new(f),
        })
    }

    /// Declared degree, used only for reporting and tests.
    pub fn with_degree(mut self, d: i64) -> Self {
        self.degree = Some(d);
        self
    }

    /// Rotation charge q for n = 1: f(e^{iθ}z) = e^{iqθ} f(z).
    pub fn with_charge(mut self, q: i64) -> Self {
        self.charge = Some(q);
        self
    }

    pub fn with_smooth(mut self, smooth: bool) -> Self {
        self.smooth = smooth;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn declared_degree(&self) -> Option<i64> {
        self.degree
    }

    pub fn charge(&self) -> Option<i64> {
        self.charge
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn chart(&self) -> &BallChart {
        &self.chart
    }

    pub fn eval(&self, x: &ChartPoint<f64>) -> ChartPoint<f64> {
        (self.f)(x)
    }

    /// ν̃(f(x)): target ball-chart coordinates, ∞ outside the ball.
    pub fn target(&self, x: &ChartPoint<f64>) -> Vec<ExtComplex<f64>> {
        self.chart.nu_tilde(&self.eval(x))
    }

    /// f*p_Y at x.
    pub fn projection(&self, x: &ChartPoint<f64>) -> HermitianProjection<f64> {
        p_y(&self.eval(x), &self.chart)
    }
}

fn complex_map<F>(f: F) -> impl Fn(&ChartPoint<f64>) -> ChartPoint<f64> + Send + Sync
where
    F: Fn(Complex64) -> Option<Complex64> + Send + Sync,
{
    move |x| match x.complex_coords() {
        None => f_at_infinity(&f),
        Some(z) => match f(z[0]) {
            Some(w) if w.re.is_finite() && w.im.is_finite() => ChartPoint::from_complex(&[w]),
            _ => ChartPoint::Infinity,
        },
    }
}

fn f_at_infinity<F: Fn(Complex64) -> Option<Complex64>>(f: &F) -> ChartPoint<f64> {
    // every fixture is continuous at ∞; probe along the real axis
    match f(Complex64::new(1e300, 0.0)) {
        Some(w) if w.norm() < 1e-100 => ChartPoint::from_complex(&[Complex64::new(0.0, 0.0)]),
        Some(w) if w.norm() < 1e100 => ChartPoint::from_complex(&[w]),
        _ => ChartPoint::Infinity,
    }
}

pub fn identity(n: usize) -> SampledMap {
    SampledMap::new("identity", n, 1.0, |x| x.clone()).unwrap().with_degree(1).with_charge(1)
}

/// x ↦ −x/|x|², the antipodal map in the chart (degree −1 on even spheres).
pub fn antipodal(n: usize) -> SampledMap {
    SampledMap::new("antipodal", n, 1.0, move |x| match x {
        ChartPoint::Infinity => ChartPoint::Finite(vec![0.0; 2 * n]),
        ChartPoint::Finite(c) => {
            let r2: f64 = c.iter().map(|v| v * v).sum();
            if r2 == 0.0 {
                ChartPoint::Infinity
            } else {
                ChartPoint::Finite(c.iter().map(|v| -v / r2).collect())
            }
        }
    })
    .unwrap()
    .with_degree(-1)
    .with_charge(1)
}

/// Constant map onto the chart point (0.3, 0, …, 0), which lies inside the ball.
pub fn constant(n: usize) -> SampledMap {
    let mut target = vec![0.0; 2 * n];
    target[0] = 0.3;
    SampledMap::new("constant", n, 1.0, move |_| ChartPoint::Finite(target.clone()))
        .unwrap()
        .with_degree(0)
        .with_charge(0)
}

/// z ↦ z^d for d ≥ 0 and z ↦ z̄^{|d|} for d < 0 on S²; degree d.
pub fn power(d: i64) -> SampledMap {
    let e = d.unsigned_abs() as i32;
    let m = complex_map(move |z: Complex64| {
        let w = if d >= 0 { z.powi(e) } else { z.conj().powi(e) };
        Some(w)
    });
    let f = move |x: &ChartPoint<f64>| {
        if d == 0 {
            return ChartPoint::Finite(vec![1.0, 0.0]);
        }
        m(x)
    };
    SampledMap::new(format!("power:{d}"), 1, 1.0, f).unwrap().with_degree(d).with_charge(d)
}

/// w ↦ w|w|^{β−1} after z ↦ z^d: Hölder of exponent β at 0 and ∞, degree d.
pub fn snowflake(d: i64, beta: f64) -> Result<SampledMap> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Precondition(format!("snowflake exponent {beta} outside (0, 1]")));
    }
    if d <= 0 {
        return Err(Error::Precondition("snowflake fixture needs d ≥ 1".into()));
    }
    let e = d as i32;
    let m = complex_map(move |z: Complex64| {
        let w = z.powi(e);
        let r = w.norm();
        if r == 0.0 {
            Some(w)
        } else {
            Some(w * r.powf(beta - 1.0))
        }
    });
    Ok(SampledMap::new(format!("snowflake:{d}:{beta}"), 1, beta, m)?.with_degree(d).with_charge(d).with_smooth(false))
}

/// x ↦ x + ε e₁: a smooth map near the identity without rotational symmetry.
pub fn shift(n: usize, eps: f64) -> SampledMap {
    SampledMap::new(format!("shift:{eps}"), n, 1.0, move |x| match x {
        ChartPoint::Infinity => ChartPoint::Infinity,
        ChartPoint::Finite(c) => {
            let mut c = c.clone();
            c[0] += eps;
            ChartPoint::Finite(c)
        }
    })
    .unwrap()
    .with_degree(1)
}

pub const FIXTURE_NAMES: &[&str] =
    &["identity", "antipodal", "constant", "power:D", "z^D", "snowflake:D:BETA", "shift:EPS"];

/// Looks up a fixture by name; see [`FIXTURE_NAMES`] for the accepted forms.
pub fn fixture(name: &str, n: usize) -> Result<SampledMap> {
    let unknown = || Error::UnknownMap(name.to_string());
    let needs_s2 = |m: SampledMap| {
        if n == 1 {
            Ok(m)
        } else {
            Err(Error::Precondition(format!("`{name}` is only defined on S²")))
        }
    };
    let parts: Vec<&str> = name.split(':').collect();
    match parts.as_slice() {
        ["identity"] | ["id"] => Ok(identity(n)),
        ["antipodal"] => Ok(antipodal(n)),
        ["constant"] | ["const"] => Ok(constant(n)),
        ["power", d] => needs_s2(power(d.parse().map_err(|_| unknown())?)),
        ["snowflake", d, b] => {
            needs_s2(snowflake(d.parse().map_err(|_| unknown())?, b.parse().map_err(|_| unknown())?)?)
        }
        ["shift", e] => Ok(shift(n, e.parse().map_err(|_| unknown())?)),
        [s] if s.starts_with("z^") => needs_s2(power(s[2..].parse().map_err(|_| unknown())?)),
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antipodal_swaps_zero_and_infinity() {
        let a = antipodal(1);
        assert!(a.eval(&ChartPoint::origin(1)).is_infinite());
        assert_eq!(a.eval(&ChartPoint::Infinity), ChartPoint::origin(1));
        assert_eq!(a.eval(&ChartPoint::Finite(vec![2.0, 0.0])), ChartPoint::Finite(vec![-0.5, -0.0]));
    }

    #[test]
    fn power_maps() {
        let p = power(2);
        assert_eq!(p.eval(&ChartPoint::Finite(vec![0.0, 1.0])), ChartPoint::Finite(vec![-1.0, 0.0]));
        assert!(p.eval(&ChartPoint::Infinity).is_infinite());
        let q = power(-1);
        assert_eq!(q.eval(&ChartPoint::Finite(vec![0.0, 1.0])), ChartPoint::Finite(vec![0.0, -1.0]));
    }

    #[test]
    fn registry() {
        assert_eq!(fixture("z^3", 1).unwrap().declared_degree(), Some(3));
        assert_eq!(fixture("power:-2", 1).unwrap().declared_degree(), Some(-2));
        assert_eq!(fixture("snowflake:2:0.6", 1).unwrap().alpha(), 0.6);
        assert!(fixture("power:2", 2).is_err());
        assert!(matches!(fixture("nope", 1), Err(Error::UnknownMap(_))));
    }

    #[test]
    fn snowflake_is_continuous_at_the_singular_points() {
        let s = snowflake(2, 0.6).unwrap();
        assert_eq!(s.eval(&ChartPoint::origin(1)), ChartPoint::origin(1));
        assert!(s.eval(&ChartPoint::Infinity).is_infinite());
        let tiny = s.eval(&ChartPoint::Finite(vec![1e-6, 0.0]));
        assert!(tiny.norm_sq().unwrap() < 1e-12);
    }
}
