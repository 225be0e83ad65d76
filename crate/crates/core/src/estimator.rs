//! Heuristic cost model of the Wagner attack on SIS in the infinity norm.
//!
//! Coordinates are modelled as centred Gaussians of deviation `sigma_i = 2^{i/2} sigma_0`.
//! Stage `i` buckets on `p_i = q / (kappa sigma_{i-1})` values per coordinate,
//! where `kappa` is the deviation constant of the rounding or quantization
//! error, and clears `b_i = log2 N / log2 p_i` rows (fractional). The run may
//! stop after `r'` stages; the `ell` rows left over count as uniform mod `q`.

use std::f64::consts::{E, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Rounding,
    Quantization,
}

impl Variant {
    /// Error deviation per unit of bucket width.
    pub fn kappa(self) -> f64 {
        match self {
            Variant::Rounding => 12f64.sqrt(),
            Variant::Quantization => (2.0 * PI * E).sqrt(),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Rounding => "rounding",
            Variant::Quantization => "quantization",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rounding" => Ok(Variant::Rounding),
            "quantization" => Ok(Variant::Quantization),
            _ => Err(Error::PreconditionViolated(format!("unknown variant {s}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostQuery {
    pub n: usize,
    pub m: usize,
    pub q: u64,
    pub beta: u64,
    pub variant: Variant,
    /// Step of the `log2 N` search grid.
    pub grid: f64,
}

impl CostQuery {
    pub fn new(n: usize, m: usize, q: u64, beta: u64, variant: Variant) -> Self {
        Self { n, m, q, beta, variant, grid: 0.1 }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m <= self.n {
            return Err(Error::PreconditionViolated(format!("need 1 <= n < m, got n={}, m={}", self.n, self.m)));
        }
        if 2 * self.beta >= self.q {
            return Err(Error::PreconditionViolated(format!("beta < q/2 fails: beta={}, q={}", self.beta, self.q)));
        }
        if !(self.grid > 0.0) {
            return Err(Error::PreconditionViolated("grid step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    #[serde(rename = "log2N")]
    pub log2_n: f64,
    pub w: usize,
    pub sigma0: f64,
    pub r_prime: usize,
    pub sigma_rprime: f64,
    pub ell: f64,
    pub p_success_single: f64,
    pub log2_p_success: f64,
    pub feasible: bool,
    pub variant: Variant,
}

impl CostReport {
    pub const CSV_HEADER: &'static str = "log2N,w,sigma0,r_prime,sigma_rprime,ell,variant";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.1},{},{:.4},{},{:.1},{:.1},{}",
            self.log2_n, self.w, self.sigma0, self.r_prime, self.sigma_rprime, self.ell, self.variant
        )
    }
}

fn log2_binom(n: usize, k: usize) -> f64 {
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)) / std::f64::consts::LN_2
}

/// Smallest `w` with `2^w C(k, w) >= 2^log2_n`, in log space.
pub fn min_weight(k: usize, log2_n: f64) -> Result<usize> {
    if k == 0 {
        return Err(Error::PreconditionViolated("m - n >= 1 fails".into()));
    }
    // slack for lgamma rounding on exact powers of two
    (0..=k)
        .find(|&w| w as f64 + log2_binom(k, w) >= log2_n - 1e-9)
        .ok_or_else(|| Error::Infeasible(format!("3^{k} < 2^{log2_n}")))
}

/// Smallest `w` with `2^w C(k, w) >= count`, exactly.
pub fn min_weight_count(k: usize, count: u128) -> Result<usize> {
    let mut binom: u128 = 1;
    for w in 0..=k {
        if w > 0 {
            binom = match binom.checked_mul((k - w + 1) as u128) {
                Some(v) => v / w as u128,
                None => u128::MAX,
            };
        }
        let total = binom.saturating_mul(1u128.checked_shl(w as u32).unwrap_or(u128::MAX));
        if total >= count {
            return Ok(w);
        }
    }
    Err(Error::Infeasible(format!("3^{k} < {count}")))
}

/// One modelled stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageModel {
    pub i: usize,
    pub p: f64,
    pub b: f64,
    /// `sigma_i` after combining.
    pub sigma: f64,
    /// Rows still open after this stage.
    pub ell: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeuristicSchedule {
    pub w: usize,
    pub sigma0: f64,
    pub stages: Vec<StageModel>,
}

/// Fractional stage plan at list size `2^log2_n`; stops before `p < 2` or `Σ b > n`.
pub fn heuristic_schedule(query: &CostQuery, log2_n: f64) -> Result<HeuristicSchedule> {
    let k = query.m - query.n;
    let w = min_weight(k, log2_n)?;
    let sigma0 = (w as f64 / k as f64).sqrt();
    let kappa = query.variant.kappa();
    let mut stages = Vec::new();
    let mut total = 0.0;
    for i in 1.. {
        let s_prev = sigma0 * 2f64.powf((i - 1) as f64 / 2.0);
        let p = query.q as f64 / (kappa * s_prev);
        if !(p >= 2.0) {
            break;
        }
        let b = log2_n / p.log2();
        if total + b > query.n as f64 {
            break;
        }
        total += b;
        stages.push(StageModel { i, p, b, sigma: sigma0 * 2f64.powf(i as f64 / 2.0), ell: query.n as f64 - total });
    }
    if stages.is_empty() && query.q as f64 / (kappa * sigma0) < 2.0 {
        return Err(Error::Infeasible("first stage modulus below 2".into()));
    }
    Ok(HeuristicSchedule { w, sigma0, stages })
}

/// `ln p` for `p = erf(beta / (sigma sqrt 2))^(m - ell) * min(1, 2 beta / q)^ell`.
pub fn log_success_probability(query: &CostQuery, sigma: f64, ell: f64) -> f64 {
    let beta = query.beta as f64;
    let g = if sigma > 0.0 { (-erfc(beta / (sigma * SQRT_2))).ln_1p() } else { 0.0 };
    let u = (2.0 * beta / query.q as f64).min(1.0).ln();
    (query.m as f64 - ell) * g + ell * u
}

pub fn success_probability(query: &CostQuery, sigma: f64, ell: f64) -> f64 {
    log_success_probability(query, sigma, ell).exp()
}

/// Minimal `log2 N` on the grid with `N p > 1/2` for the best abort point.
pub fn estimate(query: &CostQuery) -> Result<CostReport> {
    query.validate()?;
    let max_steps = (2000.0 / query.grid).ceil() as usize;
    for step in 0..max_steps {
        let log2_n = 1.0 + step as f64 * query.grid;
        let Ok(plan) = heuristic_schedule(query, log2_n) else { continue };
        let best = plan
            .stages
            .iter()
            .map(|st| (st, log_success_probability(query, st.sigma, st.ell) / std::f64::consts::LN_2))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((st, lp)) = best {
            if log2_n + lp > -1.0 {
                return Ok(CostReport {
                    log2_n: (log2_n * 10.0).round() / 10.0,
                    w: plan.w,
                    sigma0: plan.sigma0,
                    r_prime: st.i,
                    sigma_rprime: st.sigma,
                    ell: st.ell,
                    p_success_single: lp.exp2(),
                    log2_p_success: lp,
                    feasible: true,
                    variant: query.variant,
                });
            }
        }
    }
    Err(Error::Infeasible(format!("no list size up to 2^2000 reaches N p > 1/2 for {query:?}")))
}

/// SIS parameters of the three Dilithium levels.
pub fn dilithium_presets() -> Vec<CostQuery> {
    [(1024, 2304, 350209), (1536, 3072, 724481), (2048, 4096, 769537)]
        .into_iter()
        .map(|(n, m, beta)| CostQuery::new(n, m, 8380417, beta, Variant::Quantization))
        .collect()
}

/// The small-modulus example on which Wagner beats lattice reduction.
pub fn shine_preset() -> CostQuery {
    CostQuery::new(500, 600, 1000, 250, Variant::Quantization)
}

/// Named presets accepted by the CLI.
pub fn preset(name: &str) -> Option<CostQuery> {
    let d = dilithium_presets();
    match name {
        "dilithium2" => Some(d[0].clone()),
        "dilithium3" => Some(d[1].clone()),
        "dilithium5" => Some(d[2].clone()),
        "shine" => Some(shine_preset()),
        _ => None,
    }
}

/// Render reports as CSV with a header row.
pub fn to_csv(reports: &[CostReport]) -> String {
    let mut out = String::from(CostReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
