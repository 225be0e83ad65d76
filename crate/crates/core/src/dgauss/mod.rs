//! Discrete Gaussians over `Z` and `Z^n`: exact sampling, bounds and oracles.

mod bounds;
pub mod exact;
mod oracle;
mod sampler;

pub use bounds::{
    eta_qary_bound, eta_zn_bound, eta_zn_bound_inverse, lambda1_inf_formula, lambda1_inf_lower_bound, min_entropy_bound,
    tail_bound_linf,
};
pub use exact::Ratio;
pub use oracle::{
    dual_mass, empirical_similarity, gaussian_pmf, rho_bruteforce, smoothing_bruteforce, Pmf,
    PointEnumerator, QaryLattice, RhoValue, ScaledIntegers, SimilarityReport, DEFAULT_BUDGET,
    MIN_EXPECTED, MIN_SAMPLES,
};
pub use sampler::{min_width, sample_z, sample_zn, GaussParam, ZWidth};

/// Similarity parameters `(delta, eps)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SimilarityBudget {
    pub delta: f64,
    pub epsilon: f64,
}

impl SimilarityBudget {
    pub fn new(delta: f64, epsilon: f64) -> crate::error::Result<Self> {
        if !(delta >= 0.0) || !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(crate::error::Error::PreconditionViolated(format!(
                "need delta >= 0 and 0 < eps <= 1/2, got ({delta}, {epsilon})"
            )));
        }
        Ok(Self { delta, epsilon })
    }
}
