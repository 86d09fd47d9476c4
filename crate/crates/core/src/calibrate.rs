//! Numerical calibration of the kernel constants, independent of the Gamma-function
//! closed forms in `exterior`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::KernelConstants;
use crate::geometry::sphere_volume;
use crate::projections::adaptive_simpson;

/// Damping of the Fourier multiplier used for c_n.
pub const FOURIER_DAMPING: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub n: usize,
    pub c_n: f64,
    pub c_n_prime: f64,
    pub c_n_analytic: f64,
    pub c_n_prime_analytic: f64,
    pub c_n_rel_error: f64,
    pub c_n_prime_rel_error: f64,
    pub evaluations: u64,
    pub provenance: String,
}

impl Calibration {
    pub fn constants(&self) -> KernelConstants {
        KernelConstants { n: self.n, c_n: self.c_n, c_n_prime: self.c_n_prime, provenance: self.provenance.clone() }
    }
}

/// ∫_{S^{d−1}} h(ω₁) dω through the polar angle ψ of ω against e₁.
fn axial_integral(d: usize, h: impl Fn(f64) -> f64, tol: f64, evals: &mut u64) -> Result<f64> {
    let w = sphere_volume(d - 2);
    let half = std::f64::consts::FRAC_PI_2;
    let g = |psi: f64| h(psi.cos()) * psi.sin().powi(d as i32 - 2);
    // split at the kink of the damped multiplier
    let (a, _) = adaptive_simpson(&g, 0.0, half, tol, 40, evals)?;
    let (b, _) = adaptive_simpson(&g, half, std::f64::consts::PI, tol, 40, evals)?;
    Ok(w * (a + b))
}

/// c_n from the requirement that K₁ has symbol i c(ξ)/|ξ|. Pairing the symbol with the
/// e₁ direction reduces this to c_n (π/2) ∫_{S^{d−1}} |ω₁| dω = −√2, and the angular
/// integral is taken through the damped multiplier ω₁ arctan(ω₁/ε), extrapolated in ε.
fn calibrate_c_n(n: usize, evals: &mut u64) -> Result<f64> {
    let d = 2 * n;
    let eps = FOURIER_DAMPING;
    let damped_at = |e: f64, evals: &mut u64| axial_integral(d, |c| c * (c / e).atan(), 1e-13, evals);
    // the damping bias is linear in ε
    let damped = 2.0 * damped_at(eps, evals)? - damped_at(2.0 * eps, evals)?;
    if !(damped.is_finite() && damped > 0.0) {
        return Err(Error::Quadrature(format!("damped angular integral {damped}")));
    }
    Ok(-std::f64::consts::SQRT_2 / damped)
}

/// c_n' from ∫_{ℝ^{2n}} c'²(1+|x|²)^{−2n} dx = 1, with r = tan s.
fn calibrate_c_n_prime(n: usize, evals: &mut u64) -> Result<f64> {
    let m = 2 * n as i32 - 1;
    let radial = |s: f64| s.sin().powi(m) * s.cos().powi(m);
    let (v, _) = adaptive_simpson(&radial, 0.0, std::f64::consts::FRAC_PI_2, 1e-14, 40, evals)?;
    Ok((sphere_volume(2 * n - 1) * v).powf(-0.5))
}

pub fn calibrate_constants(n: usize) -> Result<Calibration> {
    if n == 0 {
        return Err(Error::Configuration("n must be at least 1".into()));
    }
    let mut evaluations = 0;
    let c_n = calibrate_c_n(n, &mut evaluations)?;
    let c_n_prime = calibrate_c_n_prime(n, &mut evaluations)?;
    let analytic = KernelConstants::analytic(n);
    Ok(Calibration {
        n,
        c_n,
        c_n_prime,
        c_n_analytic: analytic.c_n,
        c_n_prime_analytic: analytic.c_n_prime,
        c_n_rel_error: ((c_n - analytic.c_n) / analytic.c_n).abs(),
        c_n_prime_rel_error: ((c_n_prime - analytic.c_n_prime) / analytic.c_n_prime).abs(),
        evaluations,
        provenance: format!(
            "numeric: damped Fourier symbol (eps = {FOURIER_DAMPING:e}, Richardson) for c_n, radial L2 normalization for c_n'"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_matches_closed_forms() {
        for n in 1..=4 {
            let c = calibrate_constants(n).unwrap();
            assert!(c.c_n_rel_error < 1e-8, "n={n}: {c:?}");
            assert!(c.c_n_prime_rel_error < 1e-10, "n={n}: {c:?}");
        }
    }

    #[test]
    fn n_one_values() {
        let c = calibrate_constants(1).unwrap();
        let pi = std::f64::consts::PI;
        assert!((c.c_n + std::f64::consts::SQRT_2 / (2.0 * pi)).abs() < 1e-8);
        assert!((c.c_n_prime - 1.0 / pi.sqrt()).abs() < 1e-12);
    }
}
