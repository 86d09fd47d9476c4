//! Mixed (p,q)-norms of kernels, Schatten norms, Russo's kernel bound, the trace
//! formula for products of kernel operators, and the Hölder-commutator experiment.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;
use crate::specmod::{sign_commutator_singular_values, SampledField, SpectralGrid};

/// Values k(x_i, y_j) of an integral kernel on a product quadrature grid. The operator
/// (Kf)(x) = ∫ k(x,y) f(y) dy is discretized as W_x^{1/2} K W_y^{1/2}.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedKernel {
    x_nodes: Vec<f64>,
    x_weights: Vec<f64>,
    y_nodes: Vec<f64>,
    y_weights: Vec<f64>,
    values: DMatrix<Complex64>,
}

impl DiscretizedKernel {
    pub fn new(
        x_nodes: Vec<f64>,
        x_weights: Vec<f64>,
        y_nodes: Vec<f64>,
        y_weights: Vec<f64>,
        values: DMatrix<Complex64>,
    ) -> Result<Self> {
        if x_nodes.len() != x_weights.len() || y_nodes.len() != y_weights.len() {
            return Err(Error::Precondition("nodes and weights differ in length".into()));
        }
        if values.nrows() != x_nodes.len() || values.ncols() != y_nodes.len() {
            return Err(Error::Dimension { expected: x_nodes.len() * y_nodes.len(), got: values.len() });
        }
        if x_weights.iter().chain(&y_weights).any(|w| !(*w > 0.0)) {
            return Err(Error::Precondition("quadrature weights must be positive".into()));
        }
        Ok(Self { x_nodes, x_weights, y_nodes, y_weights, values })
    }

    /// k sampled on the n-point Gauss–Legendre grid of [0, 1] in both variables.
    pub fn on_unit_square(n: usize, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let (x, w) = gauss_legendre_on(0.0, 1.0, n);
        Self::on_grid(&x, &w, f)
    }

    pub fn on_grid(nodes: &[f64], weights: &[f64], f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = DMatrix::from_fn(nodes.len(), nodes.len(), |i, j| f(nodes[i], nodes[j]));
        Self::new(nodes.to_vec(), weights.to_vec(), nodes.to_vec(), weights.to_vec(), values)
            .expect("square grid is consistent")
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub fn x_weights(&self) -> &[f64] {
        &self.x_weights
    }

    pub fn y_weights(&self) -> &[f64] {
        &self.y_weights
    }

    /// k*(x, y) = conj(k(y, x)).
    pub fn adjoint(&self) -> Self {
        Self {
            x_nodes: self.y_nodes.clone(),
            x_weights: self.y_weights.clone(),
            y_nodes: self.x_nodes.clone(),
            y_weights: self.x_weights.clone(),
            values: self.values.adjoint(),
        }
    }

    pub fn operator_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.values.nrows(), self.values.ncols(), |i, j| {
            self.values[(i, j)] * (self.x_weights[i] * self.y_weights[j]).sqrt()
        })
    }
}

/// (∫ (∫ |k(x,y)|^p dx)^{q/p} dy)^{1/q}
pub fn mixed_norm(k: &DiscretizedKernel, p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0 && q >= 1.0 && p.is_finite() && q.is_finite()) {
        return Err(Error::Precondition(format!("mixed norm needs 1 ≤ p, q < ∞ (got p = {p}, q = {q})")));
    }
    let mut outer = 0.0;
    for (j, wy) in k.y_weights.iter().enumerate() {
        let inner: f64 = k.x_weights.iter().enumerate().map(|(i, wx)| wx * k.values[(i, j)].norm().powf(p)).sum();
        outer += wy * inner.powf(q / p);
    }
    Ok(outer.powf(1.0 / q))
}

pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    m.singular_values().iter().copied().collect()
}

pub fn schatten_from_singular_values(sv: &[f64], q: f64) -> f64 {
    sv.iter().map(|s| s.powf(q)).sum::<f64>().powf(1.0 / q)
}

/// (Σ σ_i^q)^{1/q}
pub fn schatten_norm(m: &DMatrix<Complex64>, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Precondition(format!("Schatten exponent q = {q} must be at least 1")));
    }
    Ok(schatten_from_singular_values(&singular_values(m), q))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RussoCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// ‖K‖_q ≤ (‖k‖_{q',q} ‖k*‖_{q',q})^{1/2} for q > 2, q' = q/(q−1).
pub fn russo_check(k: &DiscretizedKernel, q: f64) -> Result<RussoCheck> {
    if !(q > 2.0) {
        return Err(Error::Precondition(format!("Russo's bound needs q > 2 (got {q})")));
    }
    let qc = q / (q - 1.0);
    let lhs = schatten_norm(&k.operator_matrix(), q)?;
    let rhs = (mixed_norm(k, qc, q)? * mixed_norm(&k.adjoint(), qc, q)?).sqrt();
    Ok(RussoCheck { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-8) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceComparison {
    pub matrix_trace: Complex64,
    pub integral_value: Complex64,
}

impl TraceComparison {
    pub fn difference(&self) -> f64 {
        (self.matrix_trace - self.integral_value).norm()
    }
}

/// tr(K₁⋯K_m) from the product of discretized operators, against the explicit sum
/// Σ ∏_j w_{i_j} k_j(x_{i_j}, x_{i_{j+1}}) over all index cycles.
pub fn trace_product_check(kernels: &[DiscretizedKernel], q: f64) -> Result<TraceComparison> {
    let m = kernels.len();
    if !(q > 2.0 && m as f64 >= q) {
        return Err(Error::Precondition(format!("trace formula needs m ≥ q > 2 (m = {m}, q = {q})")));
    }
    let w = kernels[0].x_weights.clone();
    let n = w.len();
    for k in kernels {
        if k.x_weights != w || k.y_weights != w {
            return Err(Error::Precondition("kernels must share one quadrature grid".into()));
        }
    }
    let mut prod = DMatrix::<Complex64>::identity(n, n);
    for k in kernels {
        prod *= k.operator_matrix();
    }
    let matrix_trace = prod.trace();

    fn walk(
        kernels: &[DiscretizedKernel],
        w: &[f64],
        first: usize,
        cur: usize,
        depth: usize,
        acc: Complex64,
    ) -> Complex64 {
        let k = &kernels[depth];
        if depth + 1 == kernels.len() {
            return acc * k.values[(cur, first)] * w[cur];
        }
        (0..w.len()).map(|next| walk(kernels, w, first, next, depth + 1, acc * k.values[(cur, next)] * w[cur])).sum()
    }
    let integral_value = (0..n).map(|i| walk(kernels, &w, i, i, 0, Complex64::new(1.0, 0.0))).sum();
    Ok(TraceComparison { matrix_trace, integral_value })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummabilityDomain {
    /// Fourier modes |m| ≤ N on S¹ with F = sign of the frequency (F = 1 at m = 0).
    Circle,
    /// The spectral module on S² truncated at L = N with F = sgn Ã.
    Sphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummabilityRow {
    pub n: usize,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummabilityTable {
    pub domain: SummabilityDomain,
    pub alpha: f64,
    pub q: f64,
    pub rows: Vec<SummabilityRow>,
    /// max over rows of |norm/norm_finest − 1|
    pub spread: f64,
    /// every row within 10% of the finest grid
    pub plateau: bool,
}

/// ‖[F, a]‖_q for a(x) = (chordal distance to a base point)^α across grid sizes.
pub fn commutator_summability(
    domain: SummabilityDomain,
    alpha: f64,
    sizes: &[usize],
    q: f64,
) -> Result<SummabilityTable> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Precondition(format!("α = {alpha} outside (0, 1]")));
    }
    if !(q >= 1.0) || sizes.is_empty() {
        return Err(Error::Precondition("need q ≥ 1 and at least one grid size".into()));
    }
    let rows: Vec<SummabilityRow> = sizes
        .iter()
        .map(|&n| {
            let sv = match domain {
                SummabilityDomain::Circle => circle_commutator_singular_values(alpha, n),
                SummabilityDomain::Sphere => {
                    let grid = SpectralGrid::new(n)?;
                    // θ is the polar angle from the north pole, so the chord is 2 sin(θ/2)
                    let field = SampledField::axisymmetric(&grid, |t| (2.0 * (t / 2.0).sin()).powf(alpha))?;
                    sign_commutator_singular_values(&grid, &field)
                }
            };
            Ok(SummabilityRow { n, norm: schatten_from_singular_values(&sv, q) })
        })
        .collect::<Result<_>>()?;
    let finest = rows.iter().max_by_key(|r| r.n).map(|r| r.norm).unwrap_or(1.0);
    let spread = rows.iter().map(|r| (r.norm / finest - 1.0).abs()).fold(0.0, f64::max);
    Ok(SummabilityTable { domain, alpha, q, rows, spread, plateau: spread <= 0.1 })
}

fn circle_commutator_singular_values(alpha: f64, n: usize) -> Vec<f64> {
    // Fourier coefficients of the even function (2 sin(|θ|/2))^α, θ = πu² to resolve
    // the cusp at 0
    let (u, w) = gauss_legendre_on(0.0, 1.0, 4000);
    let th: Vec<f64> = u.iter().map(|u| std::f64::consts::PI * u * u).collect();
    let dth: Vec<f64> = u.iter().zip(&w).map(|(u, w)| 2.0 * std::f64::consts::PI * u * w).collect();
    let a: Vec<f64> = th.iter().map(|t| (2.0 * (t / 2.0).sin()).powf(alpha)).collect();
    let coeff = |j: i64| -> f64 {
        th.iter().zip(&dth).zip(&a).map(|((t, d), a)| a * (j as f64 * t).cos() * d).sum::<f64>() / std::f64::consts::PI
    };
    let ni = n as i64;
    let c: Vec<f64> = (-2 * ni..=2 * ni).map(coeff).collect();
    let dim = 2 * n + 1;
    let sign = |i: usize| if i as i64 - ni >= 0 { 1.0 } else { -1.0 };
    let comm = DMatrix::from_fn(dim, dim, |i, j| {
        let aij = c[(i as i64 - j as i64 + 2 * ni) as usize];
        (sign(i) - sign(j)) * aij
    });
    comm.singular_values().iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn mixed_norm_examples() {
        let one = DiscretizedKernel::on_unit_square(12, |_, _| c(1.0));
        assert!((mixed_norm(&one, 1.5, 3.0).unwrap() - 1.0).abs() < 1e-13);
        // separable kernel factorizes into ‖g‖_p ‖h‖_q
        let k = DiscretizedKernel::on_unit_square(40, |x, y| c((1.0 + x) * y * y));
        let (p, q) = (1.5, 3.0);
        let g: f64 = (2f64.powf(p + 1.0) - 1.0) / (p + 1.0);
        let h: f64 = 1.0 / (2.0 * q + 1.0);
        let expect = g.powf(1.0 / p) * h.powf(1.0 / q);
        assert!((mixed_norm(&k, p, q).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn schatten_examples() {
        let id = DMatrix::<Complex64>::identity(7, 7);
        assert!((schatten_norm(&id, 3.0).unwrap() - 7f64.powf(1.0 / 3.0)).abs() < 1e-12);
        let u = nalgebra::DVector::from_vec(vec![c(1.0), c(2.0), Complex64::new(0.0, 2.0)]);
        let v = nalgebra::DVector::from_vec(vec![c(0.5), c(-1.0)]);
        let r1 = &u * v.adjoint();
        assert!((schatten_norm(&r1, 4.0).unwrap() - u.norm() * v.norm()).abs() < 1e-12);
    }

    #[test]
    fn constant_kernel_is_russo_equality() {
        let one = DiscretizedKernel::on_unit_square(16, |_, _| c(1.0));
        let r = russo_check(&one, 3.0).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-10 && (r.rhs - 1.0).abs() < 1e-10 && r.holds);
    }

    #[test]
    fn rank_one_chain_trace() {
        // tr(∏ g_j ⊗ h_j) = ∏ ⟨h_j, g_{j+1}⟩
        let g = [|x: f64| 1.0 + x, |x: f64| x * x, |x: f64| (x * 3.0).cos(), |x: f64| 2.0 - x];
        let h = [|x: f64| x, |_: f64| 1.0, |x: f64| x.exp(), |x: f64| 1.0 - x * x];
        let ks: Vec<DiscretizedKernel> =
            (0..4).map(|j| DiscretizedKernel::on_unit_square(14, |x, y| c(g[j](x) * h[j](y)))).collect();
        let (x, w) = gauss_legendre_on(0.0, 1.0, 14);
        let ip = |a: &dyn Fn(f64) -> f64, b: &dyn Fn(f64) -> f64| -> f64 {
            x.iter().zip(&w).map(|(x, w)| w * a(*x) * b(*x)).sum()
        };
        let expect: f64 = (0..4).map(|j| ip(&h[j], &g[(j + 1) % 4])).product();
        let t = trace_product_check(&ks, 3.0).unwrap();
        assert!((t.matrix_trace.re - expect).abs() < 1e-12 && t.difference() < 1e-12);
    }
}
