use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::scalar::Real;

/// Basis of Λ*ℝ^{2n}: subsets of {1..2n} as bit masks, ordered by degree and then
/// lexicographically (so for n = 1: 1, e₁, e₂, e₁∧e₂).
#[derive(Clone, Debug)]
pub struct ExteriorBasis {
    n: usize,
    masks: Vec<u32>,
    position: Vec<usize>,
}

impl ExteriorBasis {
    pub fn new(n: usize) -> Self {
        assert!((1..=4).contains(&n), "exterior algebra supported for 1 ≤ n ≤ 4");
        let m = 2 * n;
        let mut masks: Vec<u32> = (0..(1u32 << m)).collect();
        masks.sort_by_key(|&s| (s.count_ones(), lex_key(s, m)));
        let mut position = vec![0; masks.len()];
        for (i, &s) in masks.iter().enumerate() {
            position[s as usize] = i;
        }
        Self { n, masks, position }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.masks.len()
    }

    pub fn mask(&self, i: usize) -> u32 {
        self.masks[i]
    }

    pub fn index_of(&self, mask: u32) -> usize {
        self.position[mask as usize]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.masks[i].count_ones() as usize
    }
}

fn lex_key(s: u32, m: usize) -> Vec<usize> {
    (0..m).filter(|j| s & (1 << j) != 0).collect()
}

/// Linear operator on Λ*ℝ^{2n} ⊗ ℂ in the basis of [`ExteriorBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorOperator<T: Real> {
    n: usize,
    matrix: DMatrix<Complex<T>>,
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> ExteriorOperator<T> {
    pub fn from_matrix(n: usize, matrix: DMatrix<Complex<T>>) -> Self {
        assert_eq!(matrix.nrows(), 1 << (2 * n));
        Self { n, matrix }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn zero(n: usize) -> Self {
        let d = 1 << (2 * n);
        Self { n, matrix: DMatrix::from_element(d, d, czero()) }
    }

    pub fn identity(n: usize) -> Self {
        let d = 1 << (2 * n);
        Self { n, matrix: DMatrix::identity(d, d) }
    }

    /// e_j∧ for j in 0..2n (0-based).
    pub fn wedge(n: usize, j: usize) -> Self {
        let basis = ExteriorBasis::new(n);
        let mut op = Self::zero(n);
        for col in 0..basis.dim() {
            let s = basis.mask(col);
            if s & (1 << j) != 0 {
                continue;
            }
            let sign = if (s & ((1 << j) - 1)).count_ones().is_multiple_of(2) { T::one() } else { -T::one() };
            let row = basis.index_of(s | (1 << j));
            op.matrix[(row, col)] = Complex::new(sign, T::zero());
        }
        op
    }

    /// e_j⌐, the adjoint of e_j∧.
    pub fn contract(n: usize, j: usize) -> Self {
        let w = Self::wedge(n, j);
        Self { n, matrix: w.matrix.transpose() }
    }

    /// Clifford multiplication c(v) = v∧ − v⌐.
    pub fn wedge_minus_contract(v: &[T]) -> Self {
        assert!(v.len().is_multiple_of(2) && !v.is_empty());
        let n = v.len() / 2;
        let mut op = Self::zero(n);
        for (j, &vj) in v.iter().enumerate() {
            if vj == T::zero() {
                continue;
            }
            let c = &Self::wedge(n, j).matrix - &Self::contract(n, j).matrix;
            op.matrix += c * Complex::new(vj, T::zero());
        }
        op
    }

    /// τ = iⁿ c(e₁)⋯c(e_{2n}); with {e∧, e⌐} = 1 this is the involutive normalization.
    pub fn tau(n: usize) -> Self {
        let mut op = Self::identity(n);
        for j in 0..2 * n {
            let mut e = vec![T::zero(); 2 * n];
            e[j] = T::one();
            op = &op * &Self::wedge_minus_contract(&e);
        }
        let phase = Complex::new(T::zero(), T::one()).powu(n as u32);
        op.scale(phase)
    }

    /// Projection onto forms of the given degree.
    pub fn degree_projector(n: usize, p: usize) -> Self {
        let basis = ExteriorBasis::new(n);
        let mut op = Self::zero(n);
        for i in 0..basis.dim() {
            if basis.degree(i) == p {
                op.matrix[(i, i)] = Complex::new(T::one(), T::zero());
            }
        }
        op
    }

    /// P₀ + P_top: projection onto constants and top-degree forms.
    pub fn harmonic_projector(n: usize) -> Self {
        &Self::degree_projector(n, 0) + &Self::degree_projector(n, 2 * n)
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self { n: self.n, matrix: &self.matrix * c }
    }

    pub fn trace(&self) -> Complex<T> {
        self.matrix.trace()
    }

    /// str(A) = tr(τA).
    pub fn supertrace(&self) -> Complex<T> {
        (&Self::tau(self.n) * self).trace()
    }

    pub fn adjoint(&self) -> Self {
        Self { n: self.n, matrix: self.matrix.map(|z| z.conj()).transpose() }
    }

    pub fn max_abs(&self) -> T {
        self.matrix.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }
}

impl<T: Real> Mul for &ExteriorOperator<T> {
    type Output = ExteriorOperator<T>;
    fn mul(self, rhs: Self) -> ExteriorOperator<T> {
        ExteriorOperator { n: self.n, matrix: &self.matrix * &rhs.matrix }
    }
}

impl<T: Real> Add for &ExteriorOperator<T> {
    type Output = ExteriorOperator<T>;
    fn add(self, rhs: Self) -> ExteriorOperator<T> {
        ExteriorOperator { n: self.n, matrix: &self.matrix + &rhs.matrix }
    }
}

impl<T: Real> Sub for &ExteriorOperator<T> {
    type Output = ExteriorOperator<T>;
    fn sub(self, rhs: Self) -> ExteriorOperator<T> {
        ExteriorOperator { n: self.n, matrix: &self.matrix - &rhs.matrix }
    }
}

/// Real Clifford generators for fast supertraces of products c(v₁)⋯c(v_m):
/// str = iⁿ tr(E c(v₁)⋯c(v_m)) with E = c(e₁)⋯c(e_{2n}) real.
#[derive(Clone, Debug)]
pub struct CliffordEvaluator {
    n: usize,
    generators: Vec<DMatrix<f64>>,
    volume: DMatrix<f64>,
}

impl CliffordEvaluator {
    pub fn new(n: usize) -> Self {
        let generators: Vec<DMatrix<f64>> = (0..2 * n)
            .map(|j| {
                let mut e = vec![0.0; 2 * n];
                e[j] = 1.0;
                ExteriorOperator::<f64>::wedge_minus_contract(&e).matrix.map(|z| z.re)
            })
            .collect();
        let d = 1 << (2 * n);
        let volume = generators.iter().fold(DMatrix::identity(d, d), |acc, g| acc * g);
        Self { n, generators, volume }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clifford(&self, v: &[f64]) -> DMatrix<f64> {
        let d = 1 << (2 * self.n);
        let mut m = DMatrix::zeros(d, d);
        for (g, &vj) in self.generators.iter().zip(v) {
            m += g * vj;
        }
        m
    }

    /// str(c(v₁)⋯c(v_m)).
    pub fn supertrace<'a, I>(&self, vectors: I) -> Complex<f64>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut acc = self.volume.clone();
        for v in vectors {
            acc *= self.clifford(v);
        }
        Complex::new(0.0, 1.0).powu(self.n as u32) * acc.trace()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Op = ExteriorOperator<f64>;

    fn unit(v: f64) -> Complex<f64> {
        Complex::new(v, 0.0)
    }

    #[test]
    fn basis_order_n1() {
        let b = ExteriorBasis::new(1);
        assert_eq!((0..4).map(|i| b.mask(i)).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let b = ExteriorBasis::new(2);
        assert_eq!(b.mask(5), 0b0011);
        assert_eq!(b.mask(6), 0b0101);
        assert_eq!(b.mask(15), 0b1111);
    }

    #[test]
    fn clifford_e1_hand_expansion() {
        let c = Op::wedge_minus_contract(&[1.0, 0.0]);
        let m = c.matrix();
        // columns are inputs: 1 ↦ e₁, e₁ ↦ −1, e₂ ↦ e₁∧e₂, e₁∧e₂ ↦ −e₂
        assert_eq!(m[(1, 0)], unit(1.0));
        assert_eq!(m[(0, 1)], unit(-1.0));
        assert_eq!(m[(3, 2)], unit(1.0));
        assert_eq!(m[(2, 3)], unit(-1.0));
        assert_eq!(m.iter().filter(|z| z.norm() > 0.0).count(), 4);
    }

    #[test]
    fn tau_n1_action() {
        let t = Op::tau(1);
        let m = t.matrix();
        assert_eq!(m[(3, 0)], Complex::new(0.0, 1.0));
        assert_eq!(m[(0, 3)], Complex::new(0.0, -1.0));
        assert_eq!(m[(2, 1)], Complex::new(0.0, 1.0));
        assert_eq!(m[(1, 2)], Complex::new(0.0, -1.0));
        assert_eq!(t.trace(), Complex::new(0.0, 0.0));
        assert_eq!(Op::identity(1).supertrace(), Complex::new(0.0, 0.0));
    }

    #[test]
    fn tau_swaps_degrees() {
        for n in 1..=3 {
            let t = Op::tau(n);
            let b = ExteriorBasis::new(n);
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    if t.matrix()[(i, j)].norm() > 0.0 {
                        assert_eq!(b.degree(i), 2 * n - b.degree(j));
                    }
                }
            }
        }
    }

    #[test]
    fn fast_supertrace_matches_operator_route() {
        let ev = CliffordEvaluator::new(1);
        let vs = [[0.3, -1.2], [0.7, 0.1], [-0.4, 0.9], [1.1, 0.5]];
        let ops: Vec<Op> = vs.iter().map(|v| Op::wedge_minus_contract(v)).collect();
        let prod = ops.iter().skip(1).fold(ops[0].clone(), |acc, o| &acc * o);
        let direct = prod.supertrace();
        let fast = ev.supertrace(vs.iter().map(|v| &v[..]));
        assert!((direct - fast).norm() < 1e-13);
    }
}
