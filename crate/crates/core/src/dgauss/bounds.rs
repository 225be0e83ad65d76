//! Closed-form smoothing, tail and entropy bounds.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::zqlin::is_prime;

/// Upper bound on `eta_eps(Z^n)`: `sqrt(ln(2n(1+1/eps))/pi)`.
pub fn eta_zn_bound(n: usize, epsilon: f64) -> f64 {
    ((2.0 * n as f64 * (1.0 + 1.0 / epsilon)).ln() / PI).sqrt()
}

/// The `eps` at which [`eta_zn_bound`] equals `s`.
pub fn eta_zn_bound_inverse(n: usize, s: f64) -> f64 {
    1.0 / ((PI * s * s).exp() / (2.0 * n as f64) - 1.0)
}

fn qary_shape(n: usize, m: usize, q: u64) -> Result<()> {
    if m < n {
        return Err(Error::PreconditionViolated(format!("m >= n fails: m={m}, n={n}")));
    }
    if !is_prime(q) {
        return Err(Error::PreconditionViolated(format!("q prime fails: q={q}")));
    }
    let g = (q as f64).powf(1.0 - n as f64 / m as f64);
    if g < 6.0 {
        return Err(Error::PreconditionViolated(format!("q^(1-n/m) >= 6 fails: {g:.4}")));
    }
    Ok(())
}

/// With-high-probability bound on `eta_eps(Lambda_q^perp(A))`:
/// `sqrt(72 ln(1/eps)/pi) q^(n/m)`.
pub fn eta_qary_bound(n: usize, m: usize, q: u64, epsilon: f64) -> Result<f64> {
    qary_shape(n, m, q)?;
    if !(epsilon > 0.0 && epsilon <= 1.0 / (4.0 * m as f64)) {
        return Err(Error::PreconditionViolated(format!("eps <= 1/(4m) fails: eps={epsilon}")));
    }
    Ok((72.0 * (1.0 / epsilon).ln() / PI).sqrt() * (q as f64).powf(n as f64 / m as f64))
}

/// With-high-probability lower bound on `lambda_1^inf(Lambda_q(A))`:
/// `q^(1-n/m) 2^(-n/m) / 3`.
pub fn lambda1_inf_lower_bound(n: usize, m: usize, q: u64) -> Result<f64> {
    qary_shape(n, m, q)?;
    Ok(lambda1_inf_formula(n, m, q))
}

/// The same expression without the shape checks.
pub fn lambda1_inf_formula(n: usize, m: usize, q: u64) -> f64 {
    let e = n as f64 / m as f64;
    (q as f64).powf(1.0 - e) * 2f64.powf(-e) / 3.0
}

/// `2n exp(-pi R^2)`, bounding the mass of `D_{L,s}` outside `R s B_inf`.
pub fn tail_bound_linf(n: usize, r: f64) -> f64 {
    2.0 * n as f64 * (-PI * r * r).exp()
}

/// `(1+eps)/(1-eps) 2^-n`, bounding the largest point mass above `2 eta_eps`.
pub fn min_entropy_bound(n: usize, epsilon: f64) -> f64 {
    (1.0 + epsilon) / (1.0 - epsilon) * 2f64.powi(-(n as i32))
}
