//! Bucket-and-combine, the Gaussian Wagner sampler, the naive rounding
//! variant and their parameter schedules.

use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{build_chain, combine, dglift_with, lift_centered, StageDescriptor, StagedVector};
use crate::dgauss::{dual_mass, min_width, GaussParam, QaryLattice, Ratio, ScaledIntegers};
use crate::error::{Error, Result};
use crate::estimator::min_weight_count;
use crate::rng::{StreamSeed, ABORT, CHUNK, INIT, LIFT};
use crate::zqlin::{is_prime, l2_squared, linf, matvec_mod, reduce_i128, NormKind, SisInstance};

/// Which algorithm a schedule drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ProvableGaussian,
    HeuristicGaussian,
    NaiveRounding,
}

/// All run parameters of one sampler invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub mode: Mode,
    pub r: usize,
    /// Target output count `N`; saturates at `u64::MAX` when only `log2_n` is meaningful.
    pub n_list: u64,
    pub log2_n: f64,
    pub s0: f64,
    pub p: Vec<u64>,
    pub b: Vec<usize>,
    pub epsilon: f64,
    /// Heuristic list policy: `3N` initial vectors and reusable pairs.
    pub reuse: bool,
    /// Hamming weight of the sparse ternary start vectors (heuristic mode).
    pub weight: Option<usize>,
    /// Rows left for the uniform early-abort lift.
    pub ell: usize,
}

impl Schedule {
    /// A hand-picked schedule with `Σ b = n`.
    pub fn manual(mode: Mode, n_list: u64, s0: f64, p: Vec<u64>, b: Vec<usize>) -> Self {
        Self {
            mode,
            r: p.len(),
            n_list,
            log2_n: (n_list as f64).log2(),
            s0,
            p,
            b,
            epsilon: 0.0,
            reuse: mode == Mode::HeuristicGaussian,
            weight: None,
            ell: 0,
        }
    }

    /// `s_i = sqrt(2^i) s0`.
    pub fn width(&self, i: usize) -> f64 {
        self.s0 * 2f64.powf(i as f64 / 2.0)
    }

    /// Exact `s_i^2 = 2^i s0^2`.
    pub fn width_sq(&self, i: usize) -> Ratio {
        let s = Ratio::from_f64(self.s0);
        s.mul(&s).mul(&Ratio::int(1i128 << i))
    }

    /// Length of the initial list: `3^r N`, or `3N` with reuse.
    pub fn initial_len(&self) -> Option<u128> {
        if self.n_list == u64::MAX {
            return None;
        }
        let mult = if self.reuse { 3u128 } else { 3u128.checked_pow(self.r as u32)? };
        mult.checked_mul(self.n_list as u128)
    }

    /// `p_i^{b_i} <= N` for every stage, checked exactly when possible.
    pub fn list_covers_quotients(&self) -> bool {
        self.p.iter().zip(&self.b).all(|(&p, &b)| match (p as u128).checked_pow(b as u32) {
            Some(v) if self.n_list != u64::MAX => v <= self.n_list as u128,
            _ => b as f64 * (p as f64).log2() <= self.log2_n + 1e-9,
        })
    }
}

/// Per-run observability.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunStats {
    /// `|L_0|, ..., |L_r|`.
    pub stage_sizes: Vec<usize>,
    /// Wall time of the initial sampling followed by each stage.
    pub stage_seconds: Vec<f64>,
    /// Per stage, `(occupancy, bucket count)` pairs.
    pub bucket_histograms: Vec<Vec<(usize, usize)>>,
    pub outputs: usize,
    pub zero_outputs: usize,
    pub nonzero_fraction: f64,
    pub max_linf: u64,
    pub max_l2: f64,
    pub membership_checks: usize,
}

impl RunStats {
    fn finish(&mut self, out: &[Vec<i64>]) {
        self.outputs = out.len();
        self.zero_outputs = out.iter().filter(|x| x.iter().all(|&v| v == 0)).count();
        self.nonzero_fraction =
            if out.is_empty() { 0.0 } else { 1.0 - self.zero_outputs as f64 / out.len() as f64 };
        self.max_linf = out.iter().map(|x| linf(x)).max().unwrap_or(0);
        self.max_l2 = out.iter().map(|x| (l2_squared(x) as f64).sqrt()).fold(0.0, f64::max);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

/// Execution knobs independent of the schedule.
#[derive(Clone, Copy, Debug)]
pub struct WagnerOptions {
    pub threads: usize,
    /// Refuse runs whose initial list would exceed this many bytes.
    pub memory_budget: u64,
    /// Check `Lambda_i` membership of every combined vector, not one in 1024.
    pub check_all: bool,
}

impl Default for WagnerOptions {
    fn default() -> Self {
        Self { threads: 1, memory_budget: 8 << 30, check_all: cfg!(debug_assertions) }
    }
}

/// A coset label packed for hashing: `b` limbs of `ceil(log2 p)` bits, little-endian.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LabelKey {
    Packed(u128),
    Wide(Box<[u64]>),
}

pub fn pack_label(label: &[u64], p: u64) -> LabelKey {
    let bits = 64 - (p.max(1) - 1).leading_zeros() as usize;
    if bits * label.len() <= 128 {
        let mut acc = 0u128;
        for (j, &l) in label.iter().enumerate() {
            acc |= (l as u128) << (j * bits);
        }
        LabelKey::Packed(acc)
    } else {
        LabelKey::Wide(label.into())
    }
}

/// Pairing rule of [`bucket_and_combine`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombinePolicy {
    /// First two of a bucket, each input used once, exactly `out_cap` outputs.
    Provable { out_cap: usize },
    /// Every within-bucket pair, spread across buckets, up to `cap`; zero differences dropped.
    Heuristic { cap: usize },
    /// All disjoint pairs, no cap.
    Disjoint,
}

/// Bucket occupancy as `(occupancy, count)`.
fn histogram(lists: &[usize]) -> Vec<(usize, usize)> {
    let mut h: HashMap<usize, usize> = HashMap::new();
    for &l in lists {
        *h.entry(l).or_default() += 1;
    }
    let mut v: Vec<_> = h.into_iter().collect();
    v.sort_unstable();
    v
}

/// Index pairs chosen by `policy` for the given labels.
fn pair_indices(keys: Vec<LabelKey>, policy: CombinePolicy) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut ids: HashMap<LabelKey, usize> = HashMap::with_capacity(keys.len());
    let mut lists: Vec<VecDeque<usize>> = Vec::new();
    let mut bucket_of = Vec::with_capacity(keys.len());
    for (i, key) in keys.into_iter().enumerate() {
        let next = lists.len();
        let id = *ids.entry(key).or_insert(next);
        if id == next {
            lists.push(VecDeque::new());
        }
        lists[id].push_back(i);
        bucket_of.push(id);
    }
    let hist = histogram(&lists.iter().map(|l| l.len()).collect::<Vec<_>>());
    let mut pairs = Vec::new();
    match policy {
        CombinePolicy::Provable { out_cap } => {
            for &id in &bucket_of {
                if pairs.len() >= out_cap {
                    break;
                }
                let l = &mut lists[id];
                if l.len() >= 2 {
                    let a = l.pop_front().unwrap();
                    let b = l.pop_front().unwrap();
                    pairs.push((a, b));
                }
            }
        }
        CombinePolicy::Disjoint => {
            for &id in &bucket_of {
                let l = &mut lists[id];
                if l.len() >= 2 {
                    let a = l.pop_front().unwrap();
                    let b = l.pop_front().unwrap();
                    pairs.push((a, b));
                }
            }
        }
        CombinePolicy::Heuristic { cap } => {
            let lists: Vec<Vec<usize>> = lists.into_iter().map(Vec::from).collect();
            let longest = lists.iter().map(|l| l.len()).max().unwrap_or(0);
            'gaps: for gap in 1..longest {
                for l in &lists {
                    for j in 0..l.len().saturating_sub(gap) {
                        if pairs.len() >= cap {
                            break 'gaps;
                        }
                        pairs.push((l[j], l[j + gap]));
                    }
                }
            }
        }
    }
    (pairs, hist)
}

/// Bucket lifted vectors by coset label and subtract pairs: outputs lie in `Lambda_i`.
pub fn bucket_and_combine(
    stage: &StageDescriptor,
    input: &[StagedVector],
    policy: CombinePolicy,
) -> Result<(Vec<Vec<i64>>, Vec<(usize, usize)>)> {
    if let CombinePolicy::Provable { .. } = policy {
        let needed = stage.quotient_size().and_then(|v| v.checked_mul(3)).unwrap_or(u128::MAX);
        if (input.len() as u128) < needed {
            return Err(Error::InsufficientInputs { got: input.len(), needed });
        }
    }
    let keys = input.iter().map(|sv| pack_label(&sv.label, stage.p)).collect();
    let (pairs, hist) = pair_indices(keys, policy);
    let mut out: Vec<Vec<i64>> = pairs.iter().map(|&(a, b)| combine(stage, &input[a], &input[b])).collect();
    if let CombinePolicy::Heuristic { .. } = policy {
        out.retain(|v| v.iter().any(|&x| x != 0));
    }
    Ok((out, hist))
}

/// Map `f` over `items` in fixed-size chunks, each chunk with its own derived stream.
fn chunked_map<T, U, F>(items: Vec<T>, seed: StreamSeed, purpose: u64, stage: u64, threads: usize, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T, &mut rand_chacha::ChaCha20Rng) -> U + Sync,
{
    let mut chunks: Vec<Vec<T>> = Vec::new();
    let mut it = items.into_iter().peekable();
    while it.peek().is_some() {
        chunks.push(it.by_ref().take(CHUNK).collect());
    }
    let run = |(ci, chunk): (usize, Vec<T>)| {
        let mut rng = seed.stream(purpose, stage, ci as u64);
        chunk.into_iter().map(|x| f(x, &mut rng)).collect::<Vec<U>>()
    };
    let parts: Vec<Vec<U>> = if threads <= 1 {
        chunks.into_iter().enumerate().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        pool.install(|| chunks.into_par_iter().enumerate().map(run).collect())
    };
    parts.into_iter().flatten().collect()
}

fn check_membership(stage: &StageDescriptor, list: &[Vec<i64>], all: bool) -> Result<usize> {
    let step = if all { 1 } else { 1024 };
    let mut checked = 0;
    for v in list.iter().step_by(step) {
        if !stage.contains(v) {
            return Err(Error::NotInLattice);
        }
        checked += 1;
    }
    Ok(checked)
}

fn memory_guard(len: Option<u128>, m: usize, opts: &WagnerOptions) -> Result<usize> {
    let bytes_per = (m as u128 + 4) * 8 * 3;
    match len {
        Some(l) if l.saturating_mul(bytes_per) <= opts.memory_budget as u128 => Ok(l as usize),
        Some(l) => Err(Error::BudgetExceeded { needed: l as f64 * bytes_per as f64, budget: opts.memory_budget as f64 }),
        None => Err(Error::BudgetExceeded { needed: f64::INFINITY, budget: opts.memory_budget as f64 }),
    }
}

/// The Gaussian Wagner sampler in provable or heuristic mode.
pub fn gaussian_wagner<R: RngCore + ?Sized>(
    inst: &SisInstance,
    schedule: &Schedule,
    rng: &mut R,
    opts: &WagnerOptions,
) -> Result<(Vec<Vec<i64>>, RunStats)> {
    match schedule.mode {
        Mode::ProvableGaussian => provable_run(inst, schedule, StreamSeed::from_rng(rng), opts),
        Mode::HeuristicGaussian => heuristic_run(inst, schedule, StreamSeed::from_rng(rng), opts),
        Mode::NaiveRounding => {
            Err(Error::PreconditionViolated("naive schedules run through naive_wagner".into()))
        }
    }
}

/// Width preconditions for exact sampling at every stage.
pub fn check_widths(inst: &SisInstance, schedule: &Schedule) -> Result<()> {
    let first = min_width(inst.m - inst.n);
    if schedule.mode == Mode::ProvableGaussian && schedule.s0 < first {
        return Err(Error::WidthTooSmall { s: schedule.s0, min: first });
    }
    for (i, (&p, &b)) in schedule.p.iter().zip(&schedule.b).enumerate() {
        let s = schedule.width(i);
        let min = inst.q as f64 / p as f64 * min_width(b);
        if s < min {
            return Err(Error::WidthTooSmall { s, min });
        }
    }
    Ok(())
}

fn lift_stage(
    stage: &StageDescriptor,
    list: Vec<Vec<i64>>,
    schedule: &Schedule,
    seed: StreamSeed,
    opts: &WagnerOptions,
) -> Result<Vec<StagedVector>> {
    let width = stage.lift_width(&schedule.width_sq(stage.i - 1))?;
    Ok(chunked_map(list, seed, LIFT, stage.i as u64, opts.threads, |x, rng| dglift_with(stage, x, &width, rng)))
}

fn provable_run(
    inst: &SisInstance,
    schedule: &Schedule,
    seed: StreamSeed,
    opts: &WagnerOptions,
) -> Result<(Vec<Vec<i64>>, RunStats)> {
    if schedule.ell != 0 {
        return Err(Error::PreconditionViolated("provable mode has no early abort".into()));
    }
    let stages = build_chain(inst, schedule)?;
    check_widths(inst, schedule)?;
    let len = memory_guard(schedule.initial_len(), inst.m, opts)?;
    let k = inst.m - inst.n;
    let mut stats = RunStats::default();

    let t0 = Instant::now();
    let param = GaussParam::new(schedule.s0, &[])?;
    let width = param.width().clone();
    let mut list: Vec<Vec<i64>> =
        chunked_map((0..len).collect(), seed, INIT, 0, opts.threads, |_, rng| {
            (0..k).map(|_| width.sample_frac(0, 1, rng)).collect()
        });
    stats.stage_sizes.push(list.len());
    stats.stage_seconds.push(t0.elapsed().as_secs_f64());

    for stage in &stages {
        let t = Instant::now();
        let cap = list.len() / 3;
        let lifted = lift_stage(stage, list, schedule, seed, opts)?;
        let (next, hist) = bucket_and_combine(stage, &lifted, CombinePolicy::Provable { out_cap: cap })?;
        stats.membership_checks += check_membership(stage, &next, opts.check_all)?;
        list = next;
        stats.stage_sizes.push(list.len());
        stats.bucket_histograms.push(hist);
        stats.stage_seconds.push(t.elapsed().as_secs_f64());
    }
    for x in &list {
        if matvec_mod(&inst.a, x, inst.q)?.iter().any(|&v| v != 0) {
            return Err(Error::NotInLattice);
        }
    }
    stats.finish(&list);
    Ok((list, stats))
}

fn sparse_ternary_list<R: RngCore + ?Sized>(k: usize, w: usize, count: usize, rng: &mut R) -> Vec<Vec<i64>> {
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let idx: Vec<usize> = (0..k).collect();
    while out.len() < count {
        let mut x = vec![0i64; k];
        for &j in rand::seq::index::sample(rng, k, w).iter().map(|i| &idx[i]) {
            x[j] = if rng.gen::<bool>() { 1 } else { -1 };
        }
        if seen.insert(x.clone()) {
            out.push(x);
        }
    }
    out
}

fn heuristic_run(
    inst: &SisInstance,
    schedule: &Schedule,
    seed: StreamSeed,
    opts: &WagnerOptions,
) -> Result<(Vec<Vec<i64>>, RunStats)> {
    let stages = build_chain(inst, schedule)?;
    check_widths(inst, schedule)?;
    let k = inst.m - inst.n;
    let cap = memory_guard(schedule.n_list.checked_mul(3).map(u128::from), inst.m, opts)?;
    let w = match schedule.weight {
        Some(w) => w,
        None => min_weight_count(k, cap as u128)?,
    };
    if min_weight_count(k, cap as u128)? > w {
        return Err(Error::Infeasible(format!("weight {w} cannot give {cap} distinct start vectors")));
    }
    let mut stats = RunStats::default();
    let t0 = Instant::now();
    let mut list = sparse_ternary_list(k, w, cap, &mut seed.stream(INIT, 0, 0));
    stats.stage_sizes.push(list.len());
    stats.stage_seconds.push(t0.elapsed().as_secs_f64());

    for stage in &stages {
        let t = Instant::now();
        let lifted = lift_stage(stage, list, schedule, seed, opts)?;
        let (next, hist) = bucket_and_combine(stage, &lifted, CombinePolicy::Heuristic { cap })?;
        stats.membership_checks += check_membership(stage, &next, opts.check_all)?;
        list = next;
        stats.stage_sizes.push(list.len());
        stats.bucket_histograms.push(hist);
        stats.stage_seconds.push(t.elapsed().as_secs_f64());
    }
    if schedule.ell > 0 {
        let t = Instant::now();
        let done = inst.n - schedule.ell;
        let a_prime = inst.a_prime();
        list = chunked_map(list, seed, ABORT, 0, opts.threads, |mut x, _| {
            let tail = lift_centered(&a_prime, &x[..k], done..inst.n);
            x.extend(tail);
            x
        });
        stats.stage_seconds.push(t.elapsed().as_secs_f64());
    }
    stats.finish(&list);
    Ok((list, stats))
}

/// Naive rounding Wagner: ternary start, `y mod q`, bucket key `round(p y / q) mod p`.
pub fn naive_wagner<R: RngCore + ?Sized>(inst: &SisInstance, schedule: &Schedule, rng: &mut R) -> Result<Vec<Vec<i64>>> {
    naive_wagner_with_stats(inst, schedule, rng, &WagnerOptions::default()).map(|(v, _)| v)
}

pub fn naive_wagner_with_stats<R: RngCore + ?Sized>(
    inst: &SisInstance,
    schedule: &Schedule,
    rng: &mut R,
    opts: &WagnerOptions,
) -> Result<(Vec<Vec<i64>>, RunStats)> {
    if schedule.mode != Mode::NaiveRounding {
        return Err(Error::PreconditionViolated("schedule mode must be naive rounding".into()));
    }
    let stages = build_chain(inst, schedule)?;
    let len = memory_guard(schedule.initial_len(), inst.m, opts)?;
    let k = inst.m - inst.n;
    let seed = StreamSeed::from_rng(rng);
    let mut stats = RunStats::default();
    let t0 = Instant::now();
    let mut list: Vec<Vec<i64>> = chunked_map((0..len).collect(), seed, INIT, 0, opts.threads, |_, rng| {
        (0..k).map(|_| rng.gen_range(-1i64..=1)).collect()
    });
    stats.stage_sizes.push(list.len());
    stats.stage_seconds.push(t0.elapsed().as_secs_f64());

    for stage in &stages {
        let t = Instant::now();
        let (p, q) = (stage.p as i128, stage.q as i128);
        let rows = stage.kappa_prev()..stage.kappa;
        // (y in [0, q), unreduced rounding c) per vector
        let keyed: Vec<(Vec<i64>, Vec<i128>)> = list
            .iter()
            .map(|x| {
                let y: Vec<i64> = rows
                    .clone()
                    .map(|row| {
                        let acc: i128 = stage.a_prime().row(row).iter().zip(&x[..k]).map(|(&a, &z)| a as i128 * z as i128).sum();
                        reduce_i128(-acc, stage.q) as i64
                    })
                    .collect();
                let c = y.iter().map(|&yj| (2 * p * yj as i128 + q).div_euclid(2 * q)).collect();
                (y, c)
            })
            .collect();
        let keys = keyed
            .iter()
            .map(|(_, c)| pack_label(&c.iter().map(|&cj| cj.rem_euclid(p) as u64).collect::<Vec<_>>(), stage.p))
            .collect();
        let (pairs, hist) = pair_indices(keys, CombinePolicy::Disjoint);
        list = pairs
            .iter()
            .map(|&(a, b)| {
                let mut v: Vec<i64> = list[a].iter().zip(&list[b]).map(|(x, y)| x - y).collect();
                for j in 0..stage.b {
                    let t = (keyed[a].1[j] - keyed[b].1[j]) / p;
                    v.push((keyed[a].0[j] - keyed[b].0[j]) as i128 as i64 - (q * t) as i64);
                }
                v
            })
            .collect();
        stats.membership_checks += check_membership(stage, &list, true)?;
        stats.stage_sizes.push(list.len());
        stats.bucket_histograms.push(hist);
        stats.stage_seconds.push(t.elapsed().as_secs_f64());
    }
    stats.finish(&list);
    Ok((list, stats))
}

/// `max_{0<=i<=r} 2^{r-i} q / p_i` with `p_0 = q`: the norm bound of naive outputs.
pub fn naive_norm_bound(q: u64, p: &[u64]) -> f64 {
    let r = p.len();
    let mut best = 2f64.powi(r as i32);
    for (idx, &pi) in p.iter().enumerate() {
        best = best.max(2f64.powi((r - idx - 1) as i32) * q as f64 / pi as f64);
    }
    best
}

fn floor_q_over_sqrt2i(q: u64, i: usize) -> u64 {
    // floor(q / sqrt(2^i)) = floor(sqrt(floor(q^2 / 2^i)))
    let x = if i >= 128 { 0 } else { (q as u128 * q as u128) >> i };
    let mut r = (x as f64).sqrt() as u128;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r as u64
}

fn n_from_log2(log2_n: f64) -> u64 {
    if log2_n >= 63.0 {
        u64::MAX
    } else {
        2f64.powf(log2_n).ceil() as u64
    }
}

/// The provable schedule of the subexponential sampler.
pub fn choose_provable_params(n: usize, m: usize, q: u64, f: f64, epsilon: f64) -> Result<Schedule> {
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
    if !(epsilon > 0.0 && epsilon <= 1.0 / m as f64) {
        return Err(Error::PreconditionViolated(format!("eps <= 1/m fails: eps={epsilon}")));
    }
    let qf = q as f64 / f;
    if !(qf >= (1.0 / epsilon).ln().sqrt()) {
        return Err(Error::PreconditionViolated(format!("q/f >= sqrt(ln(1/eps)) fails: q/f={qf}")));
    }
    let eps1 = epsilon / 5.0;
    let l3 = (3.0 / eps1).ln();
    let c144 = 144.0 * l3 / PI;
    let mut r = (2.0 * qf.log2() - c144.log2()).floor();
    if r < 1.0 {
        r += 10.0;
    }
    let r = r as usize;
    let denom = (q as f64).ln().ln() - (f.ln() + 0.5 * c144.ln() + 0.5).ln();
    if !(denom > 0.0) {
        return Err(Error::InfeasibleSchedule(format!("list size exponent has non-positive denominator {denom}")));
    }
    let x = (n as f64 / 2.0) / denom;
    let log2q = (q as f64).log2();
    // N = ceil(q 2^x)
    let log2_n = log2q + x;
    let n_list = if log2_n >= 63.0 { u64::MAX } else { (q as f64 * 2f64.powf(x)).ceil() as u64 };
    let log2_n = if n_list == u64::MAX { log2_n } else { (n_list as f64).log2() };

    let p: Vec<u64> = (1..=r).map(|i| floor_q_over_sqrt2i(q, i)).collect();
    if let Some(i) = p.iter().position(|&pi| pi < 2) {
        return Err(Error::InfeasibleSchedule(format!("stage {} modulus below 2", i + 1)));
    }
    let mut b = Vec::with_capacity(r);
    for i in 1..r {
        let bi = (log2_n / (log2q - i as f64 / 2.0) - 1.0).ceil();
        if bi < 1.0 {
            return Err(Error::InfeasibleSchedule(format!("stage {i} block size {bi} < 1")));
        }
        b.push(bi as usize);
    }
    let used: usize = b.iter().sum();
    if used >= n {
        return Err(Error::InfeasibleSchedule(format!("last block size {} <= 0", n as i64 - used as i64)));
    }
    let br = n - used;
    if br as f64 > log2_n / (p[r - 1] as f64).log2() {
        return Err(Error::InfeasibleSchedule(format!("last block size {br} exceeds log2 N / log2 p_r")));
    }
    b.push(br);
    let s = Schedule {
        mode: Mode::ProvableGaussian,
        r,
        n_list,
        log2_n,
        s0: qf / 2f64.powf(r as f64 / 2.0),
        p,
        b,
        epsilon,
        reuse: false,
        weight: None,
        ell: 0,
    };
    if !s.list_covers_quotients() {
        return Err(Error::InfeasibleSchedule("N < p_i^b_i for some stage".into()));
    }
    Ok(s)
}

/// Balanced schedule of the naive rounding variant.
pub fn choose_naive_params(n: usize, q: u64, f: f64) -> Result<Schedule> {
    if !(f > 1.0) || !((q as f64) > f) {
        return Err(Error::PreconditionViolated(format!("need 1 < f < q, got f={f}, q={q}")));
    }
    let lq = (q as f64).log2();
    let r = (q as f64 / f).log2().floor() as i64 - 1;
    if r < 1 {
        return Err(Error::PreconditionViolated(format!("q/f too small for one stage (r={r})")));
    }
    let r = r as usize;
    let log2_n = n as f64 / ((q as f64).ln().ln() - f.ln().ln());
    let p: Vec<u64> = (1..=r).map(|i| ((q as f64 / 2f64.powi(i as i32)).floor() as u64).max(1)).collect();
    let mut b = Vec::with_capacity(r);
    for i in 1..r {
        let bi = (log2_n / (lq - i as f64) - 1.0).ceil().max(1.0) as usize;
        b.push(bi);
    }
    let used: usize = b.iter().sum();
    if used >= n {
        return Err(Error::PreconditionViolated(format!("last block size {} <= 0", n as i64 - used as i64)));
    }
    b.push(n - used);
    Ok(Schedule {
        mode: Mode::NaiveRounding,
        r,
        n_list: n_from_log2(log2_n),
        log2_n,
        s0: 0.0,
        p,
        b,
        epsilon: 0.0,
        reuse: false,
        weight: None,
        ell: 0,
    })
}

/// Predicted per-vector success probability of a heuristic plan.
fn heuristic_success(m: usize, q: u64, beta: f64, norm: NormKind, sigma: f64, ell: usize) -> f64 {
    let g = (m - ell) as f64;
    let qf = q as f64;
    match norm {
        NormKind::Linf => {
            let bf = beta.floor();
            let pg = statrs::function::erf::erf((bf + 0.5) / (sigma * 2f64.sqrt()));
            let pu = ((2.0 * bf + 1.0) / qf).min(1.0);
            pg.powf(g) * pu.powf(ell as f64)
        }
        NormKind::L2 => {
            let mean = g * sigma * sigma + ell as f64 * qf * qf / 12.0;
            let var = 2.0 * g * sigma.powi(4) + ell as f64 * qf.powi(4) / 180.0;
            let z = (beta * beta - mean) / var.sqrt();
            0.5 * statrs::function::erf::erfc(-z / 2f64.sqrt())
        }
    }
}

/// One integer heuristic plan at list size `N = 2^t`, with its predicted hit count.
fn heuristic_plan(n: usize, m: usize, q: u64, beta: f64, norm: NormKind, t: u32) -> Option<(Schedule, f64)> {
    let k = m - n;
    let n_list = 1u64 << t;
    let w = min_weight_count(k, 3 * n_list as u128).ok()?;
    let sigma0 = (w as f64 / k as f64).sqrt();
    let s0 = (2.0 * PI).sqrt() * sigma0;
    let (mut p, mut b) = (Vec::new(), Vec::new());
    let mut used = 0;
    while used < n {
        let s_prev = s0 * 2f64.powf(p.len() as f64 / 2.0);
        let pick = (1..=n - used).rev().find_map(|bi| {
            let need = (q as f64 * min_width(bi) / s_prev).ceil();
            let pi = if need > q as f64 {
                if s_prev < min_width(bi) {
                    return None;
                }
                q
            } else {
                need.max(2.0) as u64
            };
            let fits = (pi as u128).checked_pow(bi as u32).is_some_and(|v| v <= n_list as u128);
            fits.then_some((pi, bi))
        });
        let Some((pi, bi)) = pick else { break };
        p.push(pi);
        b.push(bi);
        used += bi;
    }
    if p.is_empty() {
        return None;
    }
    let r = p.len();
    let sigma_r = s0 * 2f64.powf(r as f64 / 2.0) / (2.0 * PI).sqrt();
    let hits = 3.0 * n_list as f64 * heuristic_success(m, q, beta, norm, sigma_r, n - used);
    let s = Schedule {
        mode: Mode::HeuristicGaussian,
        r,
        n_list,
        log2_n: t as f64,
        s0,
        p,
        b,
        epsilon: 0.0,
        reuse: true,
        weight: Some(w),
        ell: n - used,
    };
    Some((s, hits))
}

/// Predicted number of hits required before a list size is accepted.
pub const HEURISTIC_HITS: f64 = 4.0;

/// Smallest power-of-two list size whose integer plan predicts enough short outputs.
pub fn choose_heuristic_params(n: usize, m: usize, q: u64, beta: f64, norm: NormKind, max_log2n: u32) -> Result<Schedule> {
    if m <= n {
        return Err(Error::PreconditionViolated(format!("need m > n, got m={m}, n={n}")));
    }
    for t in 2..=max_log2n {
        if let Some((s, hits)) = heuristic_plan(n, m, q, beta, norm, t) {
            if hits >= HEURISTIC_HITS {
                return Ok(s);
            }
        }
    }
    Err(Error::Infeasible(format!("no heuristic plan with N <= 2^{max_log2n} reaches beta={beta}")))
}

/// Per-stage smoothing certificate from brute-force dual enumeration.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothingCertificate {
    /// Smallest `eps` for which stage `i`'s smoothing conditions provably hold.
    pub stage_epsilon: Vec<f64>,
    pub epsilon: f64,
    /// Resulting similarity bound of the outputs, `4^r * 5 * eps`.
    pub output_delta: f64,
}

/// Certify the smoothing conditions of a schedule on a tiny instance.
///
/// Uses `s_{i-1} >= sqrt(2) max(eta_{eps/3}(S_i), eta_{eps/3}(Lambda_{i-1}))`, which
/// implies `s_{i-1} >= max(eta_eps(S_i), sqrt(2) eta_eps(Lambda'_i))`.
pub fn certify_smoothing(inst: &SisInstance, schedule: &Schedule) -> Result<SmoothingCertificate> {
    let stages = build_chain(inst, schedule)?;
    check_widths(inst, schedule)?;
    let mut stage_epsilon = Vec::new();
    for stage in &stages {
        let s = schedule.width(stage.i - 1) / 2f64.sqrt();
        let coeff_dual = ScaledIntegers::new(stage.b, stage.p as f64 / stage.q as f64);
        let prev_dual = QaryLattice::image(stage.a_prime(), stage.kappa_prev()).scaled(1.0 / stage.q as f64);
        let e = 3.0 * dual_mass(&coeff_dual, s)?.max(dual_mass(&prev_dual, s)?);
        stage_epsilon.push(e);
    }
    let epsilon = stage_epsilon.iter().copied().fold(0.0, f64::max);
    let output_delta = 4f64.powi(schedule.r as i32) * 5.0 * epsilon;
    Ok(SmoothingCertificate { stage_epsilon, epsilon, output_delta })
}
