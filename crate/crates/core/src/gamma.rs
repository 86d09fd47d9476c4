//! The index sets Γ_k: sequences over {1,2,3,4} describing which kernel (singular K₁
//! or harmonic K₃) sits in each slot of the expanded supertrace and which point each
//! slot of the projection trace refers to.

use num_complex::Complex;

use crate::error::{Error, Result};

pub const MAX_K: usize = 6;

/// A unit phase in {1, i, −1, −i}, stored as a power of i.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase(u8);

impl Phase {
    pub fn power_of_i(e: u32) -> Self {
        Phase((e % 4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex<f64> {
        match self.0 {
            0 => Complex::new(1.0, 0.0),
            1 => Complex::new(0.0, 1.0),
            2 => Complex::new(-1.0, 0.0),
            _ => Complex::new(0.0, -1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GammaSequence {
    entries: Vec<u8>,
}

impl GammaSequence {
    pub fn new(entries: Vec<u8>) -> Result<Self> {
        if entries.is_empty() || !entries.len().is_multiple_of(2) {
            return Err(Error::Precondition(format!("sequence length {} is not 2k with k ≥ 1", entries.len())));
        }
        if !is_valid(&entries) {
            return Err(Error::Precondition(format!("{entries:?} is not in Γ_k")));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn k(&self) -> usize {
        self.entries.len() / 2
    }

    /// Number of (3,4) blocks.
    pub fn weight(&self) -> usize {
        self.entries.iter().filter(|&&s| s == 3).count()
    }

    /// Raw index map, 1-based: i_l = l for s_l ∈ {1,3} and l+1 for s_l ∈ {2,4};
    /// the value 2k+1 is kept as is.
    pub fn index_map_raw(&self) -> Vec<usize> {
        self.entries.iter().enumerate().map(|(l0, &s)| if s == 1 || s == 3 { l0 + 1 } else { l0 + 2 }).collect()
    }

    /// Index map with 2k+1 identified with 1 (still 1-based).
    pub fn index_map(&self) -> Vec<usize> {
        let m = self.entries.len();
        self.index_map_raw().into_iter().map(|i| if i == m + 1 { 1 } else { i }).collect()
    }

    /// ι(I) = (−1)^{Σ(i_l − l)} · i^{w(I)}.
    pub fn iota(&self) -> Phase {
        let shift: usize = self.index_map_raw().iter().enumerate().map(|(l0, &i)| i - (l0 + 1)).sum();
        Phase::power_of_i(2 * (shift as u32 % 2) + self.weight() as u32)
    }

    /// True if the slot holds the harmonic kernel (3 or 4).
    pub fn is_harmonic_slot(&self, l0: usize) -> bool {
        self.entries[l0] >= 3
    }
}

fn is_valid(s: &[u8]) -> bool {
    let m = s.len();
    if s.iter().any(|&v| !(1..=4).contains(&v)) {
        return false;
    }
    if s[0] == 4 || s[m - 1] == 3 {
        return false;
    }
    (0..m - 1).all(|l| (s[l] == 3) == (s[l + 1] == 4))
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_K {
        return Err(Error::Precondition(format!("k = {k} outside 1..={MAX_K}")));
    }
    Ok(())
}

/// Γ_k by exhaustive filtering of {1,2,3,4}^{2k}, in lexicographic order.
pub fn enumerate_gamma(k: usize) -> Result<Vec<GammaSequence>> {
    check_k(k)?;
    let m = 2 * k;
    let mut out = Vec::new();
    let mut s = vec![1u8; m];
    loop {
        if is_valid(&s) {
            out.push(GammaSequence { entries: s.clone() });
        }
        // odometer increment, last position fastest
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            if s[pos] < 4 {
                s[pos] += 1;
                break;
            }
            s[pos] = 1;
        }
    }
}

/// Γ_k built by placing disjoint (3,4) blocks among {1,2} fillers; sorted lexicographically.
pub fn generate_gamma_blocks(k: usize) -> Result<Vec<GammaSequence>> {
    check_k(k)?;
    let m = 2 * k;
    let mut out = Vec::new();
    fn place(pos: usize, m: usize, cur: &mut Vec<u8>, out: &mut Vec<GammaSequence>) {
        if pos == m {
            out.push(GammaSequence { entries: cur.clone() });
            return;
        }
        for filler in [1u8, 2] {
            cur.push(filler);
            place(pos + 1, m, cur, out);
            cur.pop();
        }
        if pos + 1 < m {
            cur.extend_from_slice(&[3, 4]);
            place(pos + 2, m, cur, out);
            cur.truncate(cur.len() - 2);
        }
    }
    place(0, m, &mut Vec::with_capacity(m), &mut out);
    out.sort();
    Ok(out)
}

/// Γ_k^w.
pub fn enumerate_gamma_weight(k: usize, w: usize) -> Result<Vec<GammaSequence>> {
    Ok(enumerate_gamma(k)?.into_iter().filter(|g| g.weight() == w).collect())
}
