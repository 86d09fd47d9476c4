//! The signature operator on S² discretized in a spherical-harmonic basis of forms,
//! its doubled Fredholm module, and the operator-level Connes pairing.
//!
//! Forms are written in the chart-oriented orthonormal frame (e_φ, e_θ) with
//! components [deg 0, e_φ, e_θ, top]. For each (l, m) the basis is Y, Y·vol, dY/√λ and
//! ⋆dY/√λ with λ = l(l+1), so the odd operator Ã (d + d* from even to odd forms and
//! back) acts by 2×2 blocks with entries ±√λ and every function of Ã is exact.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChartPoint;
use crate::linalg::SplitMatrix;
use crate::maps::SampledMap;
use crate::quadrature::gauss_legendre_on;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormKind {
    Function,
    Exact,
    Coexact,
    Volume,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    /// Index into ℂ^r when the module is tensored with a rank-r bundle.
    pub component: usize,
    pub l: usize,
    pub m: i64,
    pub kind: FormKind,
}

/// θ-quadrature and normalized Legendre functions up to degree L + 1.
///
/// θ uses two Gauss–Legendre panels split at the equator (where the ball chart of the
/// target ends), each graded by the smoothstep 3u² − 2u³ towards its endpoints. The
/// weights include sin θ and the full φ-integral 2π.
#[derive(Clone, Debug)]
pub struct SpectralGrid {
    l: usize,
    theta: Vec<f64>,
    weights: Vec<f64>,
    pbar: Vec<Vec<f64>>,
}

impl SpectralGrid {
    pub fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::Precondition(format!("truncation degree L = {l} must be at least 2")));
        }
        let nq = 4 * l + 40;
        let mut theta = Vec::with_capacity(2 * nq);
        let mut weights = Vec::with_capacity(2 * nq);
        let (u, w) = gauss_legendre_on(0.0, 1.0, nq);
        for (a, b) in [(0.0, std::f64::consts::FRAC_PI_2), (std::f64::consts::FRAC_PI_2, std::f64::consts::PI)] {
            for (u, w) in u.iter().zip(&w) {
                let s = 3.0 * u * u - 2.0 * u * u * u;
                let ds = 6.0 * u * (1.0 - u);
                let th = a + (b - a) * s;
                theta.push(th);
                weights.push((b - a) * ds * w * th.sin() * std::f64::consts::TAU);
            }
        }
        let lmax = l + 1;
        let nt = theta.len();
        let x: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let st: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let idx = |l: usize, m: usize| l * (lmax + 1) + m;
        let mut pbar = vec![vec![0.0; nt]; (lmax + 1) * (lmax + 1)];
        pbar[idx(0, 0)] = vec![std::f64::consts::FRAC_1_SQRT_2; nt];
        for m in 1..=lmax {
            let c = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            pbar[idx(m, m)] = (0..nt).map(|i| c * st[i] * pbar[idx(m - 1, m - 1)][i]).collect();
        }
        for m in 0..lmax {
            let c = ((2 * m + 3) as f64).sqrt();
            pbar[idx(m + 1, m)] = (0..nt).map(|i| c * x[i] * pbar[idx(m, m)][i]).collect();
            for ll in m + 2..=lmax {
                let (lf, mf) = (ll as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                pbar[idx(ll, m)] =
                    (0..nt).map(|i| a * (x[i] * pbar[idx(ll - 1, m)][i] - b * pbar[idx(ll - 2, m)][i])).collect();
            }
        }
        Ok(Self { l, theta, weights, pbar })
    }

    pub fn truncation(&self) -> usize {
        self.l
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn pbar(&self, l: usize, m: usize) -> &[f64] {
        &self.pbar[l * (self.l + 2) + m]
    }

    /// The basis element at φ = 0 as four component profiles over the θ nodes.
    pub fn profile(&self, label: &BasisLabel) -> [Vec<Complex64>; 4] {
        let nt = self.theta.len();
        let am = label.m.unsigned_abs() as usize;
        let norm = 1.0 / std::f64::consts::TAU.sqrt();
        let y: Vec<f64> = self.pbar(label.l, am).iter().map(|p| p * norm).collect();
        let zero = vec![ZERO; nt];
        let real = |v: &[f64]| v.iter().map(|&a| Complex64::new(a, 0.0)).collect::<Vec<_>>();
        match label.kind {
            FormKind::Function => [real(&y), zero.clone(), zero.clone(), zero],
            FormKind::Volume => [zero.clone(), zero.clone(), zero, real(&y)],
            FormKind::Exact | FormKind::Coexact => {
                let (l, mf) = (label.l as f64, am as f64);
                let s = (l * (l + 1.0)).sqrt();
                let c = ((2.0 * l + 1.0) * (l + 1.0 + mf) * (l + 1.0 - mf) / (2.0 * l + 3.0)).sqrt();
                let next = self.pbar(label.l + 1, am);
                let mut v_phi = Vec::with_capacity(nt);
                let mut v_theta = Vec::with_capacity(nt);
                for (i, th) in self.theta.iter().enumerate() {
                    let (x, st) = (th.cos(), th.sin());
                    let dy = -((l + 1.0) * x * y[i] - c * next[i] * norm) / st;
                    v_phi.push(I * (label.m as f64) * y[i] / st / s);
                    v_theta.push(Complex64::new(dy / s, 0.0));
                }
                if label.kind == FormKind::Exact {
                    [zero.clone(), v_phi, v_theta, zero]
                } else {
                    [zero.clone(), v_theta.iter().map(|v| -v).collect(), v_phi, zero]
                }
            }
        }
    }

    /// Stereographic chart point with polar angle θ from the pole at ∞ and azimuth φ.
    pub fn chart_point(theta: f64, phi: f64) -> ChartPoint<f64> {
        let r = (theta / 2.0).cos() / (theta / 2.0).sin();
        ChartPoint::Finite(vec![r * phi.cos(), r * phi.sin()])
    }
}

/// A symmetric real operator with at most one off-diagonal entry per row; every
/// function of Ã in the spectral basis has this form.
#[derive(Clone, Debug, PartialEq)]
pub struct PairOperator {
    diag: Vec<f64>,
    partner: Vec<Option<usize>>,
    off: Vec<f64>,
}

impl PairOperator {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diag.clone()));
        for a in 0..d {
            if let Some(b) = self.partner[a] {
                m[(a, b)] = self.off[a];
            }
        }
        m
    }

    /// self · x
    pub fn left_mul(&self, x: &SplitMatrix) -> SplitMatrix {
        let mut out = SplitMatrix::zeros(x.nrows(), x.ncols());
        for (src, dst) in [(&x.re, &mut out.re), (&x.im, &mut out.im)] {
            for j in 0..src.ncols() {
                for a in 0..self.dim() {
                    let mut v = self.diag[a] * src[(a, j)];
                    if let Some(b) = self.partner[a] {
                        v += self.off[a] * src[(b, j)];
                    }
                    dst[(a, j)] = v;
                }
            }
        }
        out
    }

    /// x · self
    pub fn right_mul(&self, x: &SplitMatrix) -> SplitMatrix {
        let mut out = SplitMatrix::zeros(x.nrows(), x.ncols());
        for b in 0..self.dim() {
            let mut c = out.re.column_mut(b);
            c.axpy(self.diag[b], &x.re.column(b), 0.0);
            if let Some(a) = self.partner[b] {
                c.axpy(self.off[b], &x.re.column(a), 1.0);
            }
            let mut c = out.im.column_mut(b);
            c.axpy(self.diag[b], &x.im.column(b), 0.0);
            if let Some(a) = self.partner[b] {
                c.axpy(self.off[b], &x.im.column(a), 1.0);
            }
        }
        out
    }
}

/// A set of basis labels closed under Ã and τ, e.g. one angular-momentum block.
#[derive(Clone, Debug)]
pub struct Sector {
    labels: Vec<BasisLabel>,
    index: HashMap<BasisLabel, usize>,
}

impl Sector {
    /// All labels with the given (component, m) pairs, l ≤ L.
    pub fn modes(modes: &[(usize, i64)], l_max: usize) -> Self {
        let mut labels = Vec::new();
        for &(component, m) in modes {
            let am = m.unsigned_abs() as usize;
            for l in am..=l_max {
                labels.push(BasisLabel { component, l, m, kind: FormKind::Function });
                labels.push(BasisLabel { component, l, m, kind: FormKind::Volume });
                if l >= 1 {
                    labels.push(BasisLabel { component, l, m, kind: FormKind::Exact });
                    labels.push(BasisLabel { component, l, m, kind: FormKind::Coexact });
                }
            }
        }
        let index = labels.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        Self { labels, index }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    fn find(&self, b: &BasisLabel, kind: FormKind) -> usize {
        self.index[&BasisLabel { kind, ..*b }]
    }

    /// g(Ã). Ã = √λ σ_x on (Y, dY/√λ) and −√λ σ_x on (⋆dY/√λ, Y·vol).
    pub fn function_of_a(&self, g: impl Fn(f64) -> f64) -> PairOperator {
        let d = self.len();
        let mut op = PairOperator { diag: vec![0.0; d], partner: vec![None; d], off: vec![0.0; d] };
        for (a, b) in self.labels.iter().enumerate() {
            if b.l == 0 {
                op.diag[a] = g(0.0);
                continue;
            }
            let s = ((b.l * (b.l + 1)) as f64).sqrt();
            let even = 0.5 * (g(s) + g(-s));
            let odd = 0.5 * (g(s) - g(-s));
            op.diag[a] = even;
            let (partner, sign) = match b.kind {
                FormKind::Function => (FormKind::Exact, 1.0),
                FormKind::Exact => (FormKind::Function, 1.0),
                FormKind::Coexact => (FormKind::Volume, -1.0),
                FormKind::Volume => (FormKind::Coexact, -1.0),
            };
            op.partner[a] = Some(self.find(b, partner));
            op.off[a] = sign * odd;
        }
        op
    }

    pub fn a_tilde(&self) -> PairOperator {
        self.function_of_a(|u| u)
    }

    /// Orthogonal projection W₀ onto ker Ã (constants and volume forms).
    pub fn harmonic_projection(&self) -> PairOperator {
        self.function_of_a(|u| if u == 0.0 { 1.0 } else { 0.0 })
    }

    /// τ as (row, phase) per column: τ e_a = phase · e_row.
    fn tau_action(&self) -> Vec<(usize, Complex64)> {
        self.labels
            .iter()
            .map(|b| {
                let (kind, phase) = match b.kind {
                    FormKind::Function => (FormKind::Volume, I),
                    FormKind::Exact => (FormKind::Coexact, I),
                    FormKind::Coexact => (FormKind::Exact, -I),
                    FormKind::Volume => (FormKind::Function, -I),
                };
                (self.find(b, kind), phase)
            })
            .collect()
    }

    pub fn grading(&self) -> SplitMatrix {
        let mut t = SplitMatrix::zeros(self.len(), self.len());
        for (a, (r, ph)) in self.tau_action().into_iter().enumerate() {
            t.set(r, a, ph);
        }
        t
    }

    /// tr(τ x) without forming τ.
    pub fn supertrace(&self, x: &SplitMatrix) -> Complex64 {
        self.tau_action().into_iter().enumerate().map(|(a, (r, ph))| ph * x.get(a, r)).sum()
    }
}

/// How a sampled field transforms under rotation about the polar axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Symmetry {
    /// a_{cc'}(θ, φ) = e^{i(o_c − o_{c'})φ} a_{cc'}(θ, 0).
    Equivariant(Vec<i64>),
    /// Sampled on a uniform φ grid of the given size.
    General(usize),
}

/// A matrix-valued function on S² stored by its φ-Fourier coefficients on the θ nodes.
#[derive(Clone, Debug)]
pub struct SampledField {
    rank: usize,
    symmetry: Symmetry,
    /// coeffs[c·r + c'][d] = θ-profile of the d-th Fourier coefficient of a_{cc'}
    coeffs: Vec<HashMap<i64, Vec<Complex64>>>,
    projection_defect: f64,
    hermiticity_defect: f64,
}

impl SampledField {
    pub fn equivariant(grid: &SpectralGrid, offsets: Vec<i64>, f: impl Fn(f64) -> DMatrix<Complex64>) -> Result<Self> {
        let rank = offsets.len();
        let samples: Vec<DMatrix<Complex64>> = grid.theta.iter().map(|&t| f(t)).collect();
        let mut coeffs = vec![HashMap::new(); rank * rank];
        for c in 0..rank {
            for c2 in 0..rank {
                let prof: Vec<Complex64> = samples.iter().map(|s| s[(c, c2)]).collect();
                if prof.iter().any(|z| z.norm() > 0.0) {
                    coeffs[c * rank + c2].insert(offsets[c] - offsets[c2], prof);
                }
            }
        }
        Self::finish(rank, Symmetry::Equivariant(offsets), coeffs, &samples)
    }

    pub fn general(grid: &SpectralGrid, nphi: usize, f: impl Fn(f64, f64) -> DMatrix<Complex64>) -> Result<Self> {
        let phis: Vec<f64> = (0..nphi).map(|j| std::f64::consts::TAU * j as f64 / nphi as f64).collect();
        let samples: Vec<DMatrix<Complex64>> =
            grid.theta.iter().flat_map(|&t| phis.iter().map(move |&p| (t, p))).map(|(t, p)| f(t, p)).collect();
        let rank = samples[0].nrows();
        let nt = grid.theta.len();
        let dmax = 2 * grid.l as i64;
        let mut coeffs = vec![HashMap::new(); rank * rank];
        for c in 0..rank {
            for c2 in 0..rank {
                for d in -dmax..=dmax {
                    let prof: Vec<Complex64> = (0..nt)
                        .map(|i| {
                            phis.iter()
                                .enumerate()
                                .map(|(j, p)| {
                                    samples[i * nphi + j][(c, c2)] * Complex64::from_polar(1.0, -(d as f64) * p)
                                })
                                .sum::<Complex64>()
                                / nphi as f64
                        })
                        .collect();
                    if prof.iter().any(|z| z.norm() > 1e-15) {
                        coeffs[c * rank + c2].insert(d, prof);
                    }
                }
            }
        }
        Self::finish(rank, Symmetry::General(nphi), coeffs, &samples)
    }

    fn finish(
        rank: usize,
        symmetry: Symmetry,
        coeffs: Vec<HashMap<i64, Vec<Complex64>>>,
        samples: &[DMatrix<Complex64>],
    ) -> Result<Self> {
        let max_abs = |m: &DMatrix<Complex64>| m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let projection_defect = samples.iter().map(|p| max_abs(&(p * p - p))).fold(0.0, f64::max);
        let hermiticity_defect = samples.iter().map(|p| max_abs(&(p - p.adjoint()))).fold(0.0, f64::max);
        Ok(Self { rank, symmetry, coeffs, projection_defect, hermiticity_defect })
    }

    /// A scalar field depending only on θ.
    pub fn axisymmetric(grid: &SpectralGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::equivariant(grid, vec![0], |t| DMatrix::from_element(1, 1, Complex64::new(f(t), 0.0)))
    }

    pub fn constant(grid: &SpectralGrid, m: &DMatrix<Complex64>) -> Result<Self> {
        Self::equivariant(grid, vec![0; m.nrows()], |_| m.clone())
    }

    /// f*p_Y for a map S² → S². A declared rotation charge q gives the equivariant
    /// path with offsets (0, −q); otherwise the field is sampled on a φ grid.
    pub fn pullback(grid: &SpectralGrid, map: &SampledMap) -> Result<Self> {
        if map.n() != 1 {
            return Err(Error::Precondition("the spectral module is implemented on S² only".into()));
        }
        let p = |t: f64, phi: f64| map.projection(&SpectralGrid::chart_point(t, phi)).into_matrix();
        match map.charge() {
            Some(q) => {
                // spot-check the declared symmetry before relying on it
                let offsets = vec![0, -q];
                for &(t, phi) in &[(0.7, 0.9), (2.1, -2.3), (1.4, 4.0)] {
                    let lhs = p(t, phi);
                    let base = p(t, 0.0);
                    let rot = DMatrix::from_fn(2, 2, |c, c2| {
                        base[(c, c2)] * Complex64::from_polar(1.0, (offsets[c] - offsets[c2]) as f64 * phi)
                    });
                    let err = (lhs - rot).iter().fold(0.0f64, |a, z| a.max(z.norm()));
                    if err > 1e-9 {
                        return Err(Error::Precondition(format!(
                            "map `{}` does not have rotation charge {q} (defect {err:.2e})",
                            map.label()
                        )));
                    }
                }
                Self::equivariant(grid, offsets, |t| p(t, 0.0))
            }
            None => Self::general(grid, 4 * grid.l + 8, p),
        }
    }

    /// Same field forced onto the φ-grid path.
    pub fn pullback_general(grid: &SpectralGrid, map: &SampledMap) -> Result<Self> {
        let p = |t: f64, phi: f64| map.projection(&SpectralGrid::chart_point(t, phi)).into_matrix();
        Self::general(grid, 4 * grid.l + 8, p)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn symmetry(&self) -> &Symmetry {
        &self.symmetry
    }

    /// max over samples of max |(p² − p)_{ij}|
    pub fn projection_defect(&self) -> f64 {
        self.projection_defect
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.hermiticity_defect
    }

    /// Sectors invariant under π(a), Ã and τ that together cover the truncation.
    pub fn sectors(&self, l: usize) -> Vec<Sector> {
        let li = l as i64;
        match &self.symmetry {
            Symmetry::Equivariant(o) => {
                let lo = -li - o.iter().max().unwrap();
                let hi = li - o.iter().min().unwrap();
                (lo..=hi)
                    .map(|j| {
                        let modes: Vec<(usize, i64)> =
                            o.iter().enumerate().map(|(c, oc)| (c, j + oc)).filter(|(_, m)| m.abs() <= li).collect();
                        Sector::modes(&modes, l)
                    })
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            Symmetry::General(_) => {
                let modes: Vec<(usize, i64)> = (0..self.rank).flat_map(|c| (-li..=li).map(move |m| (c, m))).collect();
                vec![Sector::modes(&modes, l)]
            }
        }
    }
}

/// Compression of pointwise multiplication by the field to one sector.
pub fn multiplication_block(grid: &SpectralGrid, field: &SampledField, sector: &Sector) -> SplitMatrix {
    let nt = grid.theta.len();
    // group columns by (component, m)
    let mut groups: Vec<((usize, i64), Vec<usize>)> = Vec::new();
    for (a, b) in sector.labels.iter().enumerate() {
        match groups.iter_mut().find(|(key, _)| *key == (b.component, b.m)) {
            Some((_, v)) => v.push(a),
            None => groups.push(((b.component, b.m), vec![a])),
        }
    }
    let profiles: Vec<SplitMatrix> = groups
        .iter()
        .map(|(_, cols)| {
            let mut phi = SplitMatrix::zeros(4 * nt, cols.len());
            for (j, &a) in cols.iter().enumerate() {
                let prof = grid.profile(&sector.labels[a]);
                for (comp, v) in prof.iter().enumerate() {
                    for (i, z) in v.iter().enumerate() {
                        phi.set(comp * nt + i, j, *z);
                    }
                }
            }
            phi
        })
        .collect();
    let mut out = SplitMatrix::zeros(sector.len(), sector.len());
    for (g1, ((c1, m1), rows)) in groups.iter().enumerate() {
        let lhs = profiles[g1].adjoint();
        for (g2, ((c2, m2), cols)) in groups.iter().enumerate() {
            let Some(h) = field.coeffs[c1 * field.rank + c2].get(&(m1 - m2)) else {
                continue;
            };
            let mut rhs = profiles[g2].clone();
            for comp in 0..4 {
                for i in 0..nt {
                    let s = h[i] * grid.weights[i];
                    for j in 0..cols.len() {
                        let r = comp * nt + i;
                        let z = rhs.get(r, j) * s;
                        rhs.set(r, j, z);
                    }
                }
            }
            let blk = lhs.mul(&rhs);
            for (i, &a) in rows.iter().enumerate() {
                for (j, &b) in cols.iter().enumerate() {
                    out.set(a, b, blk.get(i, j));
                }
            }
        }
    }
    out
}

/// π(a) on the truncated space, one block per sector.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub sectors: Vec<Sector>,
    pub blocks: Vec<SplitMatrix>,
}

impl BlockOperator {
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_abs()).fold(0.0, f64::max)
    }
}

pub fn multiplication_operator(grid: &SpectralGrid, field: &SampledField) -> BlockOperator {
    let sectors = field.sectors(grid.l);
    let blocks = sectors.par_iter().map(|s| multiplication_block(grid, field, s)).collect();
    BlockOperator { sectors, blocks }
}

/// Ã, F̃(t), W and the grading of the doubled module on one sector.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    pub l: usize,
    pub t: f64,
    pub a_tilde: DMatrix<f64>,
    /// F̃(t) = [[F_t, iG_t], [−iG_t, −F_t]] on the doubled space.
    pub f_tilde: SplitMatrix,
    /// [[0, iW₀], [−iW₀, 0]], the t → ∞ limit of the off-diagonal part.
    pub w: SplitMatrix,
    /// γ = τ ⊕ (−τ)
    pub grading: SplitMatrix,
}

/// The signature module with scale t, organized by the angular-momentum sectors m.
#[derive(Clone, Debug)]
pub struct SignatureModule {
    pub l: usize,
    pub t: f64,
    pub sectors: Vec<Sector>,
}

pub fn build_signature_module(l: usize, t: f64) -> Result<SignatureModule> {
    if l < 2 {
        return Err(Error::Precondition(format!("truncation degree L = {l} must be at least 2")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("scale t = {t} must be positive")));
    }
    let li = l as i64;
    let sectors = (-li..=li).map(|m| Sector::modes(&[(0, m)], l)).collect();
    Ok(SignatureModule { l, t, sectors })
}

fn f_t(t: f64) -> impl Fn(f64) -> f64 {
    move |u| t * u / (1.0 + t * t * u * u).sqrt()
}

fn g_t(t: f64) -> impl Fn(f64) -> f64 {
    move |u| 1.0 / (1.0 + t * t * u * u).sqrt()
}

fn doubled(f: &SplitMatrix, g: &SplitMatrix) -> SplitMatrix {
    SplitMatrix::blocks(f, &g.scale(I), &g.scale(-I), &f.scale(Complex64::new(-1.0, 0.0)))
}

impl SignatureModule {
    pub fn operators(&self, sector: &Sector) -> TruncatedOperator {
        let f = SplitMatrix::from_real(sector.function_of_a(f_t(self.t)).to_dense());
        let g = SplitMatrix::from_real(sector.function_of_a(g_t(self.t)).to_dense());
        let w0 = SplitMatrix::from_real(sector.harmonic_projection().to_dense());
        let zero = SplitMatrix::zeros(sector.len(), sector.len());
        let tau = sector.grading();
        TruncatedOperator {
            l: self.l,
            t: self.t,
            a_tilde: sector.a_tilde().to_dense(),
            f_tilde: doubled(&f, &g),
            w: SplitMatrix::blocks(&zero, &w0.scale(I), &w0.scale(-I), &zero),
            grading: SplitMatrix::blocks(&tau, &zero, &zero, &tau.scale(Complex64::new(-1.0, 0.0))),
        }
    }

    /// dim ker Ã over the whole truncation.
    pub fn kernel_dimension(&self) -> usize {
        self.sectors.iter().map(|s| s.harmonic_projection().diag.iter().filter(|&&d| d == 1.0).count()).sum()
    }
}

/// [F̃(t), π̃(p)] with π̃ = π ⊕ 0, on one sector.
fn doubled_commutator(sector: &Sector, p: &SplitMatrix, t: f64) -> SplitMatrix {
    let f = sector.function_of_a(f_t(t));
    let g = sector.function_of_a(g_t(t));
    let a = f.left_mul(p).sub(&f.right_mul(p));
    let b = g.right_mul(p).scale(-I);
    let c = g.left_mul(p).scale(-I);
    let zero = SplitMatrix::zeros(sector.len(), sector.len());
    SplitMatrix::blocks(&a, &b, &c, &zero)
}

fn sector_pairing(grid: &SpectralGrid, field: &SampledField, sector: &Sector, k: usize, t: f64) -> Complex64 {
    let p = multiplication_block(grid, field, sector);
    let m = doubled_commutator(sector, &p, t);
    let m2 = m.mul(&m);
    let mut acc = m2.clone();
    for _ in 1..k {
        acc = acc.mul(&m2);
    }
    sector.supertrace(&p.mul(&acc.top_left(sector.len())))
}

/// Result of the operator-level pairing. `degree` is −raw/2, the integer-normalized
/// value (the twisted signature operator on S² has index 2·deg).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub raw: f64,
    pub raw_imag: f64,
    pub degree: f64,
    pub l: usize,
    pub k: usize,
    pub t: f64,
    /// degree at L minus degree at L/2
    pub drift: Option<f64>,
}

/// What the pairing is evaluated on: a pulled-back projection or a constant matrix.
#[derive(Clone, Debug)]
pub enum ProjectionField {
    Pullback(SampledMap),
    Constant(DMatrix<Complex64>),
}

impl ProjectionField {
    pub fn sample(&self, grid: &SpectralGrid) -> Result<SampledField> {
        match self {
            Self::Pullback(map) => SampledField::pullback(grid, map),
            Self::Constant(m) => SampledField::constant(grid, m),
        }
    }
}

/// (−1)^k str(p̃ [F̃, p̃]^{2k}) summed over sectors, at truncation L.
pub fn pairing_raw(field: &SampledField, grid: &SpectralGrid, k: usize, t: f64) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("scale t = {t} must be positive")));
    }
    if field.projection_defect > 0.1 {
        return Err(Error::NotAProjection { defect: field.projection_defect });
    }
    let sectors = field.sectors(grid.l);
    let total: Complex64 = sectors.par_iter().map(|s| sector_pairing(grid, field, s, k, t)).sum();
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(total * sign)
}

pub fn connes_pairing(p: &ProjectionField, k: usize, l: usize, t: f64) -> Result<Pairing> {
    let run = |l: usize| -> Result<Complex64> {
        let grid = SpectralGrid::new(l)?;
        pairing_raw(&p.sample(&grid)?, &grid, k, t)
    };
    let raw = run(l)?;
    let drift = if l / 2 >= 2 { Some(-raw.re / 2.0 + run(l / 2)?.re / 2.0) } else { None };
    Ok(Pairing { raw: raw.re, raw_imag: raw.im, degree: -raw.re / 2.0, l, k, t, drift })
}

/// Largest singular value of [F̃(t), π̃(a)] compressed to degrees l > L/2.
pub fn commutator_tail_norm(grid: &SpectralGrid, field: &SampledField, t: f64) -> f64 {
    let l = grid.l;
    field
        .sectors(l)
        .par_iter()
        .map(|s| {
            let p = multiplication_block(grid, field, s);
            let m = doubled_commutator(s, &p, t);
            let tail: Vec<usize> = s.labels.iter().enumerate().filter(|(_, b)| 2 * b.l > l).map(|(i, _)| i).collect();
            if tail.is_empty() {
                return 0.0;
            }
            let d = s.len();
            let idx: Vec<usize> = tail.iter().copied().chain(tail.iter().map(|i| i + d)).collect();
            let c = m.submatrix(&idx, &idx).to_complex();
            c.singular_values().max()
        })
        .reduce(|| 0.0, f64::max)
}

/// Singular values of [sgn Ã, π(a)] (sgn 0 on the kernel) over all sectors of a
/// scalar field.
pub fn sign_commutator_singular_values(grid: &SpectralGrid, field: &SampledField) -> Vec<f64> {
    field
        .sectors(grid.l)
        .par_iter()
        .flat_map_iter(|s| {
            let p = multiplication_block(grid, field, s);
            let f = s.function_of_a(|u| {
                if u > 0.0 {
                    1.0
                } else if u < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            });
            let c = f.left_mul(&p).sub(&f.right_mul(&p)).to_complex();
            c.singular_values().iter().copied().collect::<Vec<_>>()
        })
        .collect()
}

/// Schatten-q distance ‖F̃(t) − F̃(∞) − W‖ against t, and its fitted log-log slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomlemFit {
    pub t: Vec<f64>,
    pub distance: Vec<f64>,
    pub slope: f64,
    pub include_w: bool,
}

pub fn homlem_decay(ts: &[f64], l: usize, q: f64, include_w: bool) -> Result<HomlemFit> {
    if ts.len() < 2 {
        return Err(Error::Precondition("need at least two values of t".into()));
    }
    let (lo, hi) = ts.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if !(lo > 0.0) || hi / lo < 100.0 {
        return Err(Error::Precondition("t grid must be positive and span at least two decades".into()));
    }
    let module = build_signature_module(l, 1.0)?;
    let sgn = |u: f64| {
        if u > 0.0 {
            1.0
        } else if u < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    let distance: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let sum: f64 = module
                .sectors
                .par_iter()
                .map(|s| {
                    let f = SplitMatrix::from_real(s.function_of_a(f_t(t)).to_dense());
                    let g = SplitMatrix::from_real(s.function_of_a(g_t(t)).to_dense());
                    let f_inf = SplitMatrix::from_real(s.function_of_a(sgn).to_dense());
                    let zero = SplitMatrix::zeros(s.len(), s.len());
                    let mut d = doubled(&f, &g).sub(&doubled(&f_inf, &zero));
                    if include_w {
                        let w0 = SplitMatrix::from_real(s.harmonic_projection().to_dense());
                        d = d.sub(&doubled(&zero, &w0));
                    }
                    d.to_complex().singular_values().iter().map(|s| s.powf(q)).sum::<f64>()
                })
                .sum();
            sum.powf(1.0 / q)
        })
        .collect();
    let slope = log_log_slope(ts, &distance);
    Ok(HomlemFit { t: ts.to_vec(), distance, slope, include_w })
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;

    #[test]
    fn basis_is_orthonormal_and_gradients_have_laplace_norm() {
        // the Gram matrix of the basis under the unit field is the identity; the
        // exact forms are normalized by ∫|∇Y|² = l(l+1) only if the Legendre
        // derivative is right
        let grid = SpectralGrid::new(6).unwrap();
        let one = SampledField::axisymmetric(&grid, |_| 1.0).unwrap();
        for m in [-3, 0, 2, 6] {
            let s = Sector::modes(&[(0, m)], 6);
            let g = multiplication_block(&grid, &one, &s);
            let err = g.sub(&SplitMatrix::identity(s.len())).max_abs();
            assert!(err < 1e-12, "m = {m}: {err}");
        }
    }

    #[test]
    fn functions_of_a_match_eigendecomposition() {
        let s = Sector::modes(&[(0, 1), (1, -2)], 5);
        let a = s.a_tilde().to_dense();
        let eig = a.clone().symmetric_eigen();
        let t = 0.7;
        let g = g_t(t);
        let direct =
            &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(&g)) * eig.eigenvectors.transpose();
        assert!((direct - s.function_of_a(g).to_dense()).amax() < 1e-12);
        assert!((&a - a.transpose()).amax() == 0.0);
    }

    #[test]
    fn pair_operator_products_match_dense() {
        let s = Sector::modes(&[(0, 0), (0, 1)], 4);
        let op = s.function_of_a(f_t(1.3));
        let x = SplitMatrix::from_complex(&DMatrix::from_fn(s.len(), s.len(), |i, j| {
            Complex64::new((i as f64 * 0.37 + j as f64).sin(), (i * j) as f64 * 0.01)
        }));
        let d = SplitMatrix::from_real(op.to_dense());
        assert!(op.left_mul(&x).sub(&d.mul(&x)).max_abs() < 1e-14);
        assert!(op.right_mul(&x).sub(&x.mul(&d)).max_abs() < 1e-14);
    }

    #[test]
    fn tau_is_an_involution_commuting_with_pointwise_products() {
        let grid = SpectralGrid::new(5).unwrap();
        let field = SampledField::axisymmetric(&grid, |t| (2.0 * t).cos() + 0.3).unwrap();
        let s = Sector::modes(&[(0, 2)], 5);
        let tau = s.grading();
        assert!(tau.mul(&tau).sub(&SplitMatrix::identity(s.len())).max_abs() < 1e-15);
        let p = multiplication_block(&grid, &field, &s);
        assert!(tau.mul(&p).sub(&p.mul(&tau)).max_abs() < 1e-10);
    }

    #[test]
    fn general_path_agrees_with_equivariant_path() {
        let grid = SpectralGrid::new(5).unwrap();
        let f = maps::identity(1);
        let eq = SampledField::pullback(&grid, &f).unwrap();
        let gen = SampledField::pullback_general(&grid, &f).unwrap();
        let a = pairing_raw(&eq, &grid, 2, 1.0).unwrap();
        let b = pairing_raw(&gen, &grid, 2, 1.0).unwrap();
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn wrong_charge_is_rejected() {
        let grid = SpectralGrid::new(3).unwrap();
        let f = maps::identity(1).with_charge(2);
        assert!(matches!(SampledField::pullback(&grid, &f), Err(Error::Precondition(_))));
    }

    #[test]
    fn non_projection_is_rejected() {
        let grid = SpectralGrid::new(3).unwrap();
        let half = DMatrix::from_element(1, 1, Complex64::new(0.5, 0.0));
        let field = SampledField::constant(&grid, &half).unwrap();
        assert!(matches!(pairing_raw(&field, &grid, 2, 1.0), Err(Error::NotAProjection { .. })));
    }
}
