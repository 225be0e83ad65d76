//! Brute-force oracles: lattice point enumeration, Gaussian mass, exact pmfs,
//! smoothing certificates and empirical similarity.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::hash::Hash;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::bounds::tail_bound_linf;
use super::sampler::GaussParam;
use crate::error::{Error, Result};
use crate::zqlin::ZqMatrix;

/// Default enumeration budget (points visited).
pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// Enumerates the points `scale * v` of a lattice, `v` integral.
pub trait PointEnumerator {
    fn dim(&self) -> usize;

    fn scale(&self) -> f64 {
        1.0
    }

    /// Visit every `v` with `||scale * v - c||_inf <= r`; returns the number visited.
    fn visit_box(&self, c: &[f64], r: f64, budget: u64, f: &mut dyn FnMut(&[i64])) -> Result<u64>;
}

fn int_range(c: f64, r: f64, scale: f64) -> (i64, i64) {
    (((c - r) / scale).ceil() as i64, ((c + r) / scale).floor() as i64)
}

fn check_budget(needed: f64, budget: u64) -> Result<()> {
    if needed > budget as f64 {
        return Err(Error::BudgetExceeded { needed, budget: budget as f64 });
    }
    Ok(())
}

/// `alpha * Z^n`.
#[derive(Clone, Debug)]
pub struct ScaledIntegers {
    pub n: usize,
    pub alpha: f64,
}

impl ScaledIntegers {
    pub fn new(n: usize, alpha: f64) -> Self {
        Self { n, alpha }
    }
}

impl PointEnumerator for ScaledIntegers {
    fn dim(&self) -> usize {
        self.n
    }

    fn scale(&self) -> f64 {
        self.alpha
    }

    fn visit_box(&self, c: &[f64], r: f64, budget: u64, f: &mut dyn FnMut(&[i64])) -> Result<u64> {
        let ranges: Vec<(i64, i64)> = c.iter().map(|&cj| int_range(cj, r, self.alpha)).collect();
        let needed: f64 = ranges.iter().map(|&(lo, hi)| (hi - lo + 1).max(0) as f64).product();
        check_budget(needed, budget)?;
        if ranges.iter().any(|&(lo, hi)| lo > hi) {
            return Ok(0);
        }
        let mut v: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let mut count = 0;
        loop {
            f(&v);
            count += 1;
            let mut j = 0;
            loop {
                if j == v.len() {
                    return Ok(count);
                }
                v[j] += 1;
                if v[j] <= ranges[j].1 {
                    break;
                }
                v[j] = ranges[j].0;
                j += 1;
            }
        }
    }
}

/// A q-ary lattice given by free coordinates and dependent ones fixed mod `q`:
/// `x[dep_i] = sum_j coef[i][j] * x[free_j] (mod q)`.
#[derive(Clone, Debug)]
pub struct QaryLattice {
    dim: usize,
    q: u64,
    free: Vec<usize>,
    dep: Vec<(usize, Vec<u64>)>,
    scale: f64,
}

impl QaryLattice {
    /// Kernel of `[A'_rows | I_rows]` over the first `rows` rows of `A'`; `rows = 0` gives `Z^(m-n)`.
    pub fn kernel(a_prime: &ZqMatrix, rows: usize) -> Self {
        let (k, q) = (a_prime.cols(), a_prime.modulus());
        let dep = (0..rows).map(|j| (k + j, a_prime.row(j).iter().map(|&a| (q - a) % q).collect())).collect();
        Self { dim: k + rows, q, free: (0..k).collect(), dep, scale: 1.0 }
    }

    /// `Lambda_q([A'_rows | I_rows]) = {(u; y) : u = A'_rows^T y mod q}`.
    pub fn image(a_prime: &ZqMatrix, rows: usize) -> Self {
        let (k, q) = (a_prime.cols(), a_prime.modulus());
        let dep = (0..k).map(|i| (i, (0..rows).map(|j| a_prime.get(j, i)).collect())).collect();
        Self { dim: k + rows, q, free: (k..k + rows).collect(), dep, scale: 1.0 }
    }

    /// The same point set scaled by `scale`.
    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }
}

impl PointEnumerator for QaryLattice {
    fn dim(&self) -> usize {
        self.dim
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn visit_box(&self, c: &[f64], r: f64, budget: u64, f: &mut dyn FnMut(&[i64])) -> Result<u64> {
        let q = self.q as i64;
        let ranges: Vec<(i64, i64)> = c.iter().map(|&cj| int_range(cj, r, self.scale)).collect();
        if ranges.iter().any(|&(lo, hi)| lo > hi) {
            return Ok(0);
        }
        let mut needed: f64 = self.free.iter().map(|&i| (ranges[i].1 - ranges[i].0 + 1) as f64).product();
        for (i, _) in &self.dep {
            needed *= ((ranges[*i].1 - ranges[*i].0 + 1) as f64 / q as f64).ceil() + 1.0;
        }
        check_budget(needed, budget)?;

        let mut x = vec![0i64; self.dim];
        for &i in &self.free {
            x[i] = ranges[i].0;
        }
        let mut count = 0u64;
        loop {
            // Residues of the dependent coordinates, then every lift in range.
            let mut starts = Vec::with_capacity(self.dep.len());
            let mut empty = false;
            for (i, coef) in &self.dep {
                let mut acc: i128 = 0;
                for (&j, &a) in self.free.iter().zip(coef) {
                    acc += a as i128 * x[j] as i128;
                }
                let res = acc.rem_euclid(q as i128) as i64;
                let lo = ranges[*i].0;
                let first = lo + (res - lo).rem_euclid(q);
                if first > ranges[*i].1 {
                    empty = true;
                    break;
                }
                starts.push(first);
            }
            if !empty {
                for (d, (i, _)) in self.dep.iter().enumerate() {
                    x[*i] = starts[d];
                }
                loop {
                    f(&x);
                    count += 1;
                    let mut d = 0;
                    loop {
                        if d == self.dep.len() {
                            break;
                        }
                        let i = self.dep[d].0;
                        x[i] += q;
                        if x[i] <= ranges[i].1 {
                            break;
                        }
                        x[i] = starts[d];
                        d += 1;
                    }
                    if d == self.dep.len() {
                        break;
                    }
                }
            }
            let mut j = 0;
            loop {
                if j == self.free.len() {
                    return Ok(count);
                }
                let i = self.free[j];
                x[i] += 1;
                if x[i] <= ranges[i].1 {
                    break;
                }
                x[i] = ranges[i].0;
                j += 1;
            }
        }
    }
}

/// A Gaussian mass together with a bound on the mass missed by truncation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RhoValue {
    pub value: f64,
    pub truncation_bound: f64,
}

fn truncation(dim: usize, r: f64, s: f64, value: f64) -> f64 {
    let t = tail_bound_linf(dim, r / s);
    if t < 1.0 {
        value * t / (1.0 - t)
    } else {
        f64::INFINITY
    }
}

fn centers_f64(e: &dyn PointEnumerator, param: &GaussParam) -> Result<Vec<f64>> {
    let c: Vec<f64> = param.centers().iter().map(|c| c.to_f64()).collect();
    match c.len() {
        0 => Ok(vec![0.0; e.dim()]),
        l if l == e.dim() => Ok(c),
        l => Err(Error::DimensionMismatch { expected: e.dim(), got: l }),
    }
}

/// `sum exp(-pi ||x - c||^2 / s^2)` over lattice points with `||x - c||_inf <= R`
/// (default `R = 12 s`).
pub fn rho_bruteforce(e: &dyn PointEnumerator, param: &GaussParam, radius: Option<f64>) -> Result<RhoValue> {
    let s = param.s();
    let c = centers_f64(e, param)?;
    let r = radius.unwrap_or(12.0 * s);
    let scale = e.scale();
    let mut value = 0.0;
    e.visit_box(&c, r, DEFAULT_BUDGET, &mut |v| {
        let d2: f64 = v.iter().zip(&c).map(|(&vi, &ci)| (scale * vi as f64 - ci).powi(2)).sum();
        value += (-PI * d2 / (s * s)).exp();
    })?;
    Ok(RhoValue { value, truncation_bound: truncation(e.dim(), r, s, value) })
}

/// Normalized point masses of `D_{L,s,c}` over the enumerated box, keyed by
/// the integer coordinates `v` of `x = scale * v`.
#[derive(Clone, Debug)]
pub struct Pmf {
    pub probs: HashMap<Vec<i64>, f64>,
    pub truncation_bound: f64,
}

pub fn gaussian_pmf(e: &dyn PointEnumerator, param: &GaussParam, radius: Option<f64>) -> Result<Pmf> {
    let s = param.s();
    let c = centers_f64(e, param)?;
    let r = radius.unwrap_or(12.0 * s);
    let scale = e.scale();
    let mut probs = HashMap::new();
    let mut total = 0.0;
    e.visit_box(&c, r, DEFAULT_BUDGET, &mut |v| {
        let d2: f64 = v.iter().zip(&c).map(|(&vi, &ci)| (scale * vi as f64 - ci).powi(2)).sum();
        let w = (-PI * d2 / (s * s)).exp();
        if w > 0.0 {
            total += w;
            probs.insert(v.to_vec(), w);
        }
    })?;
    for p in probs.values_mut() {
        *p /= total;
    }
    Ok(Pmf { probs, truncation_bound: truncation(e.dim(), r, s, 1.0) })
}

/// Upper bound on `rho_{1/s}(L* \ {0})` given an enumerator of the dual `L*`.
/// `eta_eps(L) <= s` whenever the returned value is at most `eps`.
pub fn dual_mass(dual: &dyn PointEnumerator, s: f64) -> Result<f64> {
    let dim = dual.dim();
    // Radius (in dual coordinates) beyond which the tail is below 1e-30 of the total.
    let r = ((2.0 * dim as f64 * 1e30).ln() / PI).sqrt() / s;
    let c = vec![0.0; dim];
    let scale = dual.scale();
    let mut sum = 0.0;
    dual.visit_box(&c, r, DEFAULT_BUDGET, &mut |v| {
        if v.iter().any(|&x| x != 0) {
            let n2: f64 = v.iter().map(|&x| (scale * x as f64).powi(2)).sum();
            sum += (-PI * s * s * n2).exp();
        }
    })?;
    let t = tail_bound_linf(dim, r * s);
    Ok(sum + (1.0 + sum) * t / (1.0 - t))
}

/// Certified upper bound on `eta_eps(L)` from an enumerator of `L*`, to relative tolerance `1e-9`.
pub fn smoothing_bruteforce(dual: &dyn PointEnumerator, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::PreconditionViolated("eps must be positive".into()));
    }
    let mut hi = 0.25;
    while dual_mass(dual, hi)? > epsilon {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while (hi - lo) > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if dual_mass(dual, mid)? > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Outcome of comparing samples with an exact pmf.
#[derive(Clone, Debug, Serialize)]
pub struct SimilarityReport {
    /// Largest `|ln(observed / expected)|` over bins with expected count at least 25.
    pub max_ratio_log: f64,
    pub chi2_p: f64,
    pub chi2: f64,
    pub dof: usize,
    pub samples: usize,
    /// Largest absolute gap between empirical and exact frequency over all support points.
    pub max_abs_freq_dev: f64,
    bins: Vec<(f64, f64)>,
}

impl SimilarityReport {
    /// Standard error of `ln(observed/expected)` for a bin of probability `p`.
    fn se(&self, p: f64) -> f64 {
        ((1.0 - p) / (self.samples as f64 * p)).sqrt()
    }

    /// Every bin satisfies `|ln ratio| <= delta + k * se(bin)`.
    pub fn within(&self, delta: f64, k: f64) -> bool {
        self.worst_excess(delta) <= k
    }

    /// `max (|ln ratio| - delta) / se` over bins.
    pub fn worst_excess(&self, delta: f64) -> f64 {
        self.bins
            .iter()
            .map(|&(p, obs)| {
                let lr = (obs / (p * self.samples as f64)).ln().abs();
                (lr - delta) / self.se(p)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Per-bin slack in standard errors that keeps the family-wise false
    /// alarm rate over all bins at `alpha` (Bonferroni, two-sided).
    pub fn family_slack(&self, alpha: f64) -> f64 {
        let per_bin = alpha / (2.0 * self.bins.len().max(1) as f64);
        Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(1.0 - per_bin)
    }

    /// [`Self::within`] at the Bonferroni slack for `alpha`.
    pub fn within_family(&self, delta: f64, alpha: f64) -> bool {
        self.within(delta, self.family_slack(alpha))
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }
}

/// Minimum number of samples accepted by [`empirical_similarity`].
pub const MIN_SAMPLES: usize = 10_000;
/// Minimum expected count for a bin of its own.
pub const MIN_EXPECTED: f64 = 25.0;

pub fn empirical_similarity<K: Eq + Hash>(samples: &[K], pmf: &HashMap<K, f64>) -> Result<SimilarityReport> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { got: n, min: MIN_SAMPLES });
    }
    let mass: f64 = pmf.values().sum();
    if mass < 0.9999 {
        return Err(Error::PreconditionViolated(format!("oracle covers only {mass} of the mass")));
    }
    let mut counts: HashMap<&K, u64> = HashMap::new();
    for s in samples {
        *counts.entry(s).or_default() += 1;
    }
    let nf = n as f64;
    let mut bins = Vec::new();
    let mut max_abs = 0.0f64;
    let (mut big_p, mut big_obs) = (0.0, 0u64);
    for (k, &p) in pmf {
        let obs = counts.get(k).copied().unwrap_or(0);
        max_abs = max_abs.max((obs as f64 / nf - p).abs());
        if nf * p >= MIN_EXPECTED {
            bins.push((p, obs as f64));
            big_p += p;
            big_obs += obs;
        }
    }
    // Outside-support samples count against the empirical frequency too.
    for (k, &c) in &counts {
        if !pmf.contains_key(*k) {
            max_abs = max_abs.max(c as f64 / nf);
        }
    }
    if bins.len() < 2 {
        return Err(Error::InsufficientSamples { got: n, min: MIN_SAMPLES });
    }
    bins.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut chi_bins: Vec<(f64, f64)> = bins.iter().map(|&(p, o)| (nf * p, o)).collect();
    let rest = (nf * (1.0 - big_p).max(0.0), (n as u64 - big_obs) as f64);
    if rest.0 >= MIN_EXPECTED {
        chi_bins.push(rest);
    } else {
        let last = chi_bins.last_mut().expect("at least two bins");
        last.0 += rest.0;
        last.1 += rest.1;
    }
    let chi2: f64 = chi_bins.iter().map(|&(e, o)| (o - e).powi(2) / e).sum();
    let dof = chi_bins.len() - 1;
    let chi2_p = ChiSquared::new(dof as f64).map(|d| d.sf(chi2)).unwrap_or(f64::NAN);
    let max_ratio_log =
        bins.iter().map(|&(p, o)| (o / (nf * p)).ln().abs()).fold(0.0f64, f64::max);
    Ok(SimilarityReport { max_ratio_log, chi2_p, chi2, dof, samples: n, max_abs_freq_dev: max_abs, bins })
}
