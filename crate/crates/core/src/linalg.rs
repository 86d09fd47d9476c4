//! Complex matrices stored as separate real and imaginary parts, so products run on
//! the real gemm kernels.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct SplitMatrix {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { re: DMatrix::zeros(rows, cols), im: DMatrix::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self { re: DMatrix::identity(n, n), im: DMatrix::zeros(n, n) }
    }

    pub fn from_real(re: DMatrix<f64>) -> Self {
        let im = DMatrix::zeros(re.nrows(), re.ncols());
        Self { re, im }
    }

    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        Self { re: m.map(|z| z.re), im: m.map(|z| z.im) }
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        self.re.zip_map(&self.im, Complex64::new)
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[(i, j)], self.im[(i, j)])
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.re[(i, j)] = z.re;
        self.im[(i, j)] = z.im;
    }

    pub fn mul(&self, o: &Self) -> Self {
        let re = &self.re * &o.re - &self.im * &o.im;
        let im = &self.re * &o.im + &self.im * &o.re;
        Self { re, im }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { re: &self.re * c.re - &self.im * c.im, im: &self.re * c.im + &self.im * c.re }
    }

    pub fn adjoint(&self) -> Self {
        Self { re: self.re.transpose(), im: -self.im.transpose() }
    }

    pub fn trace(&self) -> Complex64 {
        Complex64::new(self.re.trace(), self.im.trace())
    }

    pub fn max_abs(&self) -> f64 {
        self.re.iter().zip(self.im.iter()).fold(0.0, |acc, (a, b)| acc.max(a.hypot(*b)))
    }

    /// [[a, b], [c, d]]
    pub fn blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let (r1, c1) = (a.nrows(), a.ncols());
        let (r, cols) = (r1 + c.nrows(), c1 + b.ncols());
        let mut out = Self::zeros(r, cols);
        for (blk, (i0, j0)) in [(a, (0, 0)), (b, (0, c1)), (c, (r1, 0)), (d, (r1, c1))] {
            out.re.view_mut((i0, j0), (blk.nrows(), blk.ncols())).copy_from(&blk.re);
            out.im.view_mut((i0, j0), (blk.nrows(), blk.ncols())).copy_from(&blk.im);
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let re = DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.re[(rows[i], cols[j])]);
        let im = DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.im[(rows[i], cols[j])]);
        Self { re, im }
    }

    pub fn top_left(&self, n: usize) -> Self {
        Self { re: self.re.view((0, 0), (n, n)).into_owned(), im: self.im.view((0, 0), (n, n)).into_owned() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_matches_complex_gemm() {
        let a = DMatrix::from_fn(5, 4, |i, j| Complex64::new((i + 2 * j) as f64 * 0.3, (i as f64 - j as f64).sin()));
        let b = DMatrix::from_fn(4, 3, |i, j| Complex64::new((i * j) as f64 - 1.0, (i + j) as f64 * 0.1));
        let s = SplitMatrix::from_complex(&a).mul(&SplitMatrix::from_complex(&b)).to_complex();
        assert!((s - &a * &b).iter().all(|z| z.norm() < 1e-13));
    }
}
