//! Exterior algebra operators, the kernels K₁/K₃ on S^{2n}, their supertraces and
//! the degree integrand f̃_k.

mod algebra;
mod integrand;
mod kernels;
mod supertrace;

pub use algebra::{CliffordEvaluator, ExteriorBasis, ExteriorOperator};
pub use integrand::{ftilde, projection_difference_trace, q_factor, weight_zero_factorized, FtildeTerms, GammaCache};
pub use kernels::{harmonic_constant, harmonic_weight, k1, k3, riesz_constant, KernelConstants};
pub use supertrace::{expanded_supertrace, h_kernel};
