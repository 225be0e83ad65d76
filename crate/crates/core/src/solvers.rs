//! SIS solvers on top of the samplers, and exact solution checking.

use std::collections::HashSet;

use num_bigint::BigInt;
use rand::RngCore;
use serde::Serialize;

use crate::dgauss::Ratio;
use crate::error::{Error, Result};
use crate::wagner::{
    choose_heuristic_params, choose_naive_params, choose_provable_params, gaussian_wagner, naive_wagner_with_stats,
    Mode, RunStats, Schedule, WagnerOptions,
};
use crate::zqlin::{l2_squared, linf, matvec_mod, systematic_form, NormKind, SisInstance, Solution};

/// Verdict of [`verify`], in priority order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Valid,
    ZeroVector,
    NormExceeded,
    NotInLattice,
}

/// A real norm bound compared exactly against integer norms.
#[derive(Clone, Debug, PartialEq)]
pub struct NormBound {
    value: f64,
    exact: Ratio,
}

impl NormBound {
    pub fn new(value: f64) -> Self {
        Self { value, exact: Ratio::from_f64(value) }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// `|x|_inf <= beta`.
    pub fn admits_linf(&self, x: &[i64]) -> bool {
        !self.exact.sub(&Ratio::int(linf(x) as i128)).is_negative()
    }

    /// `|x|_2 <= beta`, as `|x|_2^2 <= beta^2` by cross-multiplication.
    pub fn admits_l2(&self, x: &[i64]) -> bool {
        if self.exact.is_negative() {
            return false;
        }
        let sq = BigInt::from(l2_squared(x));
        let b2 = self.exact.mul(&self.exact);
        !b2.sub(&Ratio::new(sq, BigInt::from(1))).is_negative()
    }

    pub fn admits(&self, x: &[i64], norm: NormKind) -> bool {
        match norm {
            NormKind::Linf => self.admits_linf(x),
            NormKind::L2 => self.admits_l2(x),
        }
    }
}

/// Check `x` against the instance.
///
/// Lattice membership first, then zero (for the l2 norm, `x = 0 mod q` counts as
/// zero), then the instance's bound if it has one.
pub fn verify(inst: &SisInstance, x: &[i64]) -> Verdict {
    match matvec_mod(&inst.a, x, inst.q) {
        Ok(v) if v.iter().all(|&y| y == 0) => {}
        _ => return Verdict::NotInLattice,
    }
    let trivial = match inst.norm {
        NormKind::Linf => x.iter().all(|&v| v == 0),
        NormKind::L2 => x.iter().all(|&v| v.rem_euclid(inst.q as i64) == 0),
    };
    if trivial {
        return Verdict::ZeroVector;
    }
    match inst.beta {
        Some(b) if !NormBound::new(b as f64).admits(x, inst.norm) => Verdict::NormExceeded,
        _ => Verdict::Valid,
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub mode: Mode,
    /// Width divisor: the final sampler width is `q/f`.
    pub f: f64,
    pub epsilon: f64,
    /// Independent sampler runs before giving up.
    pub attempts: usize,
    /// Largest heuristic list size, as `log2 N`.
    pub max_log2n: u32,
    pub wagner: WagnerOptions,
    /// Use this schedule instead of choosing one.
    pub schedule: Option<Schedule>,
    pub max_solutions: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mode: Mode::HeuristicGaussian,
            f: 4.0,
            epsilon: 1e-12,
            attempts: 1,
            max_log2n: 20,
            wagner: WagnerOptions::default(),
            schedule: None,
            max_solutions: 16,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub solutions: Vec<Solution>,
    pub attempts: usize,
    pub success: bool,
    pub norm_bound_used: f64,
    pub mode: Mode,
    pub schedule: Schedule,
    pub warnings: Vec<String>,
    /// The bound is at or past the point where the problem is trivial.
    pub trivial_regime: bool,
    pub stats: Vec<RunStats>,
}

fn provable_checks(inst: &SisInstance, f: f64, epsilon: f64) -> Result<()> {
    let (n, m, q) = (inst.n, inst.m, inst.q);
    if !inst.q_prime {
        return Err(Error::PreconditionViolated(format!("q prime fails: q={q}")));
    }
    let g = (q as f64).powf(1.0 - n as f64 / m as f64);
    if g < 6.0 {
        return Err(Error::PreconditionViolated(format!("q^(1-n/m) >= 6 fails: {g:.4}")));
    }
    let cap = 1.0 / (m as f64 * (q as f64).powi(4));
    if !(epsilon > 0.0 && epsilon <= cap) {
        return Err(Error::PreconditionViolated(format!("eps <= 1/(m q^4) fails: eps={epsilon}, cap={cap:e}")));
    }
    if q as f64 / f < (1.0 / epsilon).ln().sqrt() {
        return Err(Error::PreconditionViolated(format!("q/f >= sqrt(ln(1/eps)) fails: q/f={}", q as f64 / f)));
    }
    Ok(())
}

fn solve(inst: &SisInstance, beta: f64, opts: &SolveOptions, rng: &mut dyn RngCore) -> Result<SolveReport> {
    if !(opts.f > 0.0) {
        return Err(Error::PreconditionViolated(format!("f > 0 fails: f={}", opts.f)));
    }
    let norm = inst.norm;
    let bound = match inst.beta {
        Some(b) => beta.min(b as f64),
        None => beta,
    };
    let mut warnings = Vec::new();
    let (sys, perm) = systematic_form(inst)?;
    let schedule = match (&opts.schedule, opts.mode) {
        (Some(s), _) => s.clone(),
        (None, Mode::ProvableGaussian) => {
            provable_checks(inst, opts.f, opts.epsilon)?;
            warnings.push("provable guarantees hold only for sufficiently large n".to_string());
            choose_provable_params(inst.n, inst.m, inst.q, opts.f, opts.epsilon)?
        }
        (None, Mode::HeuristicGaussian) => {
            choose_heuristic_params(inst.n, inst.m, inst.q, bound, norm, opts.max_log2n)?
        }
        (None, Mode::NaiveRounding) => choose_naive_params(inst.n, inst.q, opts.f)?,
    };
    let trivial_regime = match norm {
        NormKind::L2 => bound >= inst.q as f64 * (inst.n as f64 / 12.0).sqrt(),
        NormKind::Linf => 2.0 * bound >= inst.q as f64,
    };
    if trivial_regime {
        warnings.push(format!("beta={bound} is in the trivial regime"));
    }
    let nb = NormBound::new(bound);
    let mut seen = HashSet::new();
    let mut solutions = Vec::new();
    let mut stats = Vec::new();
    let mut attempts = 0;
    while attempts < opts.attempts.max(1) && solutions.is_empty() {
        attempts += 1;
        let (out, st) = match schedule.mode {
            Mode::NaiveRounding => naive_wagner_with_stats(&sys, &schedule, rng, &opts.wagner)?,
            _ => gaussian_wagner(&sys, &schedule, rng, &opts.wagner)?,
        };
        stats.push(st);
        for v in out {
            let x = perm.backward(&v);
            if !nb.admits(&x, norm) || verify(inst, &x) != Verdict::Valid {
                continue;
            }
            let key = if x.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
                x.iter().map(|c| -c).collect::<Vec<_>>()
            } else {
                x.clone()
            };
            if seen.insert(key) {
                solutions.push(Solution::new(x, norm));
            }
        }
    }
    solutions.sort_by(|a, b| a.norm_value.total_cmp(&b.norm_value));
    solutions.truncate(opts.max_solutions.max(1));
    Ok(SolveReport {
        success: !solutions.is_empty(),
        solutions,
        attempts,
        norm_bound_used: bound,
        mode: schedule.mode,
        schedule,
        warnings,
        trivial_regime,
        stats,
    })
}

/// SIS in the infinity norm with `beta = (q/f) sqrt(ln m)`.
pub fn solve_sis_inf<R: RngCore>(inst: &SisInstance, opts: &SolveOptions, rng: &mut R) -> Result<SolveReport> {
    if inst.norm != NormKind::Linf {
        return Err(Error::PreconditionViolated("instance norm must be linf".into()));
    }
    let beta = inst.q as f64 / opts.f * (inst.m as f64).ln().sqrt();
    solve(inst, beta, opts, rng)
}

/// SIS in the Euclidean norm with `x != 0 mod q` and `beta = (q/f) sqrt(m)`.
pub fn solve_sis_l2<R: RngCore>(inst: &SisInstance, opts: &SolveOptions, rng: &mut R) -> Result<SolveReport> {
    if inst.norm != NormKind::L2 {
        return Err(Error::PreconditionViolated("instance norm must be l2".into()));
    }
    let beta = inst.q as f64 / opts.f * (inst.m as f64).sqrt();
    solve(inst, beta, opts, rng)
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
