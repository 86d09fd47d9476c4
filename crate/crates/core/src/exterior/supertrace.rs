//! H_{A,I}(x) = str(∏_l K_{s_l}(x_l, x_{l+1})), by dense products and by an independent
//! expansion into contractions and determinants.

use num_complex::Complex;

use super::algebra::ExteriorOperator;
use super::kernels::{harmonic_weight, k1, k3, KernelConstants};
use crate::error::{Error, Result};
use crate::gamma::GammaSequence;
use crate::geometry::{norm, ChartPoint};
use crate::scalar::Real;

fn check_points<T: Real>(seq: &GammaSequence, points: &[ChartPoint<T>]) -> Result<()> {
    if points.len() != seq.entries().len() {
        return Err(Error::Dimension { expected: seq.entries().len(), got: points.len() });
    }
    Ok(())
}

/// Direct evaluation: builds each kernel matrix and multiplies around the cycle.
pub fn h_kernel<T: Real>(
    seq: &GammaSequence,
    points: &[ChartPoint<T>],
    consts: &KernelConstants,
) -> Result<Complex<T>> {
    check_points(seq, points)?;
    let n = consts.n;
    let c1 = T::lit(consts.c_n);
    let c3 = T::lit(consts.c_n_prime);
    let m = points.len();
    let mut acc = ExteriorOperator::identity(n);
    for l in 0..m {
        let (x, y) = (&points[l], &points[(l + 1) % m]);
        let k = if seq.is_harmonic_slot(l) { k3(x, y, n, c3)? } else { k1(x, y, n, c1)? };
        acc = &acc * &k;
    }
    Ok(acc.supertrace())
}

/// One factor of the cycle after grouping each (3,4) block into a projection.
enum Factor<T> {
    Clifford(Vec<T>),
    Harmonic,
}

/// Expansion route: the cycle is a product of Clifford strings separated by the
/// projection P = |1⟩⟨1| + |vol⟩⟨vol|. Strings act on 1 and vol through the
/// contraction recursion c(v)(w₁∧…) = v∧w₁∧… − Σ_i (−1)^{i−1}⟨v,w_i⟩ w₁∧…ŵ_i…, and
/// top-degree coefficients are expanded as signed sums over permutations.
pub fn expanded_supertrace<T: Real>(
    seq: &GammaSequence,
    points: &[ChartPoint<T>],
    consts: &KernelConstants,
) -> Result<Complex<T>> {
    check_points(seq, points)?;
    let n = consts.n;
    let m = points.len();
    let coords: Vec<&[T]> =
        points.iter().map(|p| p.coords().ok_or(Error::InfiniteChartPoint)).collect::<Result<_>>()?;
    let c1 = T::lit(consts.k1_prefactor());
    let c3 = T::lit(consts.c_n_prime);

    let mut scalar = T::one();
    let mut factors = Vec::new();
    let mut l = 0;
    while l < m {
        if seq.entries()[l] == 3 {
            let (a, b, c) = (coords[l], coords[(l + 1) % m], coords[(l + 2) % m]);
            let gb = harmonic_weight(b, n, c3);
            scalar = scalar * harmonic_weight(a, n, c3) * gb * gb * harmonic_weight(c, n, c3);
            factors.push(Factor::Harmonic);
            l += 2;
        } else {
            let d: Vec<T> = coords[l].iter().zip(coords[(l + 1) % m]).map(|(a, b)| *a - *b).collect();
            let r = norm(&d);
            if r == T::zero() {
                return Err(Error::DiagonalSingularity { distance: 0.0 });
            }
            scalar = scalar * c1 / r.powi(2 * n as i32 + 1);
            factors.push(Factor::Clifford(d));
            l += 1;
        }
    }

    let basis_vectors: Vec<Vec<T>> =
        (0..2 * n).map(|j| (0..2 * n).map(|i| if i == j { T::one() } else { T::zero() }).collect()).collect();
    let i_n = Complex::new(T::zero(), T::one()).powu(n as u32);

    let harmonic_positions: Vec<usize> =
        factors.iter().enumerate().filter(|(_, f)| matches!(f, Factor::Harmonic)).map(|(i, _)| i).collect();

    if harmonic_positions.is_empty() {
        let vectors: Vec<&[T]> = factors
            .iter()
            .map(|f| match f {
                Factor::Clifford(d) => d.as_slice(),
                Factor::Harmonic => unreachable!(),
            })
            .collect();
        // Only the top-degree part of X has nonzero supertrace:
        // str(c(e₁)⋯c(e_{2n})) = iⁿ tr((c(e₁)⋯c(e_{2n}))²) = (−i)ⁿ 4ⁿ.
        let (_, top) = string_on_one(&vectors, n);
        let dim = T::lit(4f64.powi(n as i32));
        let minus_i_n = Complex::new(T::zero(), -T::one()).powu(n as u32);
        return Ok(minus_i_n * top * dim * scalar);
    }

    // Rotate so the cycle reads S_w τ S₀ P S₁ P … S_{w−1} P.
    let w = harmonic_positions.len();
    let mut strings: Vec<Vec<&[T]>> = vec![Vec::new(); w + 1];
    let mut seg = 0;
    for f in &factors {
        match f {
            Factor::Harmonic => seg += 1,
            Factor::Clifford(d) => strings[seg].push(d.as_slice()),
        }
    }
    let mut head: Vec<&[T]> = strings[w].clone();
    head.extend(basis_vectors.iter().map(|v| v.as_slice()));
    head.extend(strings[0].iter().copied());
    let mut blocks: Vec<[[Complex<T>; 2]; 2]> = Vec::with_capacity(w);
    blocks.push(scale2(matrix_elements(&head, &basis_vectors, n), i_n));
    for s in strings.iter().take(w).skip(1) {
        blocks.push(matrix_elements(s, &basis_vectors, n));
    }
    // trace of the product of the 2×2 blocks in the {1, vol} basis
    let mut acc = [[Complex::new(T::one(), T::zero()), czero()], [czero(), Complex::new(T::one(), T::zero())]];
    for b in &blocks {
        acc = mul2(&acc, b);
    }
    Ok((acc[0][0] + acc[1][1]) * scalar)
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn scale2<T: Real>(m: [[Complex<T>; 2]; 2], s: Complex<T>) -> [[Complex<T>; 2]; 2] {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

fn mul2<T: Real>(a: &[[Complex<T>; 2]; 2], b: &[[Complex<T>; 2]; 2]) -> [[Complex<T>; 2]; 2] {
    let mut r = [[czero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

/// ⟨b|V|b'⟩ for b, b' ∈ {1, vol}; vol is reached as c(e₁)⋯c(e_{2n})·1.
fn matrix_elements<T: Real>(string: &[&[T]], basis_vectors: &[Vec<T>], n: usize) -> [[Complex<T>; 2]; 2] {
    let (s1, t1) = string_on_one(string, n);
    let mut ext: Vec<&[T]> = string.to_vec();
    ext.extend(basis_vectors.iter().map(|v| v.as_slice()));
    let (sv, tv) = string_on_one(&ext, n);
    let c = |x: T| Complex::new(x, T::zero());
    [[c(s1), c(sv)], [c(t1), c(tv)]]
}

/// Scalar and top-degree coefficients of c(v₁)⋯c(v_m)·1.
fn string_on_one<T: Real>(vectors: &[&[T]], n: usize) -> (T, T) {
    // terms: coefficient and the ordered labels of the wedged vectors
    let mut terms: Vec<(T, Vec<usize>)> = vec![(T::one(), Vec::new())];
    for (a, v) in vectors.iter().enumerate().rev() {
        let mut next = Vec::with_capacity(terms.len() * 2);
        for (coef, labels) in &terms {
            let mut wedged = Vec::with_capacity(labels.len() + 1);
            wedged.push(a);
            wedged.extend_from_slice(labels);
            next.push((*coef, wedged));
            for (i, &b) in labels.iter().enumerate() {
                let ip = dot(v, vectors[b]);
                if ip == T::zero() {
                    continue;
                }
                let sign = if i % 2 == 0 { -T::one() } else { T::one() };
                let mut rest = labels.clone();
                rest.remove(i);
                next.push((*coef * sign * ip, rest));
            }
        }
        terms = next;
    }
    let mut scalar = T::zero();
    let mut top = T::zero();
    for (coef, labels) in terms {
        if labels.is_empty() {
            scalar += coef;
        } else if labels.len() == 2 * n {
            let cols: Vec<&[T]> = labels.iter().map(|&b| vectors[b]).collect();
            top += coef * leibniz_det(&cols);
        }
    }
    (scalar, top)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// det[w₁ … w_m] = Σ_σ sgn σ ∏_j ⟨e_j, w_{σ(j)}⟩.
fn leibniz_det<T: Real>(cols: &[&[T]]) -> T {
    let m = cols.len();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut total = T::zero();
    permute(&mut perm, 0, T::one(), cols, &mut total);
    total
}

fn permute<T: Real>(perm: &mut [usize], start: usize, sign: T, cols: &[&[T]], total: &mut T) {
    let m = perm.len();
    if start == m {
        let prod = (0..m).fold(T::one(), |acc, j| acc * cols[perm[j]][j]);
        *total += sign * prod;
        return;
    }
    for i in start..m {
        perm.swap(start, i);
        let s = if i == start { sign } else { -sign };
        permute(perm, start + 1, s, cols, total);
        perm.swap(start, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::enumerate_gamma;

    fn pts(v: &[[f64; 2]]) -> Vec<ChartPoint<f64>> {
        v.iter().map(|p| ChartPoint::Finite(p.to_vec())).collect()
    }

    #[test]
    fn k1_pair_and_harmonic_pair_vanish() {
        let c = KernelConstants::analytic(1);
        let p = pts(&[[0.1, 0.4], [-0.3, 0.2]]);
        let h = h_kernel(&GammaSequence::new(vec![1, 1]).unwrap(), &p, &c).unwrap();
        assert!(h.norm() < 1e-14);
        let h = h_kernel(&GammaSequence::new(vec![3, 4]).unwrap(), &p, &c).unwrap();
        assert!(h.norm() < 1e-14);
    }

    #[test]
    fn determinant_by_permutations() {
        let a = [1.0, 2.0, 0.5];
        let b = [0.0, -1.0, 3.0];
        let c = [2.0, 0.0, 1.0];
        let d = leibniz_det(&[&a, &b, &c]);
        let exact: f64 = 1.0 * (-1.0 - 0.0) - 0.0 * (2.0 - 0.0) + 2.0 * (6.0 + 0.5);
        assert!((d - exact).abs() < 1e-12);
    }

    #[test]
    fn expansion_matches_direct_on_fixed_points() {
        let c = KernelConstants::analytic(1);
        let p = pts(&[[0.1, 0.4], [-0.3, 0.2], [0.7, -0.5], [1.2, 0.9]]);
        for seq in enumerate_gamma(2).unwrap() {
            let a = h_kernel(&seq, &p, &c).unwrap();
            let b = expanded_supertrace(&seq, &p, &c).unwrap();
            assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()), "{seq:?}: {a} vs {b}");
        }
    }
}
