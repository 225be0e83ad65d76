//! The chain of projected lattices `Lambda_0 = Z^(m-n), ..., Lambda_r`.
//!
//! For a systematic `A = [A' | I_n]`, stage `i` owns rows `[kappa_{i-1}, kappa_i)`
//! and `Lambda_i` is the kernel of `[A'_i | I_{kappa_i}]` where `A'_i` holds the
//! first `kappa_i` rows of `A'`. The new `b_i` coordinates sit at the end of
//! each vector. `Lambda'_i = Lambda_i + (0; (q/p_i) Z^(b_i))` and the coset of a
//! lifted vector in `Lambda'_i / Lambda_i` is its coefficient `k mod p_i`.

use std::sync::Arc;

use num_bigint::BigInt;

use crate::dgauss::{min_width, Ratio, ZWidth};
use crate::error::{Error, Result};
use crate::zqlin::{centered, reduce_i128, SisInstance, ZqMatrix};

/// One stage of the chain; cheap to clone, shares `A'`.
#[derive(Clone, Debug)]
pub struct StageDescriptor {
    pub i: usize,
    pub b: usize,
    pub kappa: usize,
    pub p: u64,
    pub q: u64,
    a_prime: Arc<ZqMatrix>,
}

impl StageDescriptor {
    pub fn kappa_prev(&self) -> usize {
        self.kappa - self.b
    }

    /// `m - n`.
    pub fn free_dim(&self) -> usize {
        self.a_prime.cols()
    }

    /// Length of vectors in `Lambda_{i-1}`.
    pub fn head_len(&self) -> usize {
        self.free_dim() + self.kappa_prev()
    }

    /// Length of vectors in `Lambda_i`.
    pub fn out_len(&self) -> usize {
        self.free_dim() + self.kappa
    }

    pub fn a_prime(&self) -> &ZqMatrix {
        &self.a_prime
    }

    /// `|Lambda'_i / Lambda_i| = p^b`, if it fits in `u128`.
    pub fn quotient_size(&self) -> Option<u128> {
        (self.p as u128).checked_pow(self.b as u32)
    }

    /// Minimum width `s` for which the exact sampler over `(q/p) Z^b` applies.
    pub fn min_lift_width(&self) -> f64 {
        self.q as f64 / self.p as f64 * min_width(self.b)
    }

    /// Sampler width `(p/q) s` over the coefficient lattice, from exact `s^2`.
    pub fn lift_width(&self, s2: &Ratio) -> Result<ZWidth> {
        let s = s2.to_f64().sqrt();
        let min = self.min_lift_width();
        if s < min {
            return Err(Error::WidthTooSmall { s, min });
        }
        let pq = Ratio::frac(self.p as i128 * self.p as i128, self.q as i128 * self.q as i128);
        Ok(ZWidth::new(s2.mul(&pq)))
    }

    /// Does `x` (length `head_len`) lie in `Lambda_{i-1}`?
    pub fn contains_prev(&self, x: &[i64]) -> bool {
        x.len() == self.head_len() && kernel_rows_hold(&self.a_prime, self.q, x, self.kappa_prev())
    }

    /// Does `v` (length `out_len`) lie in `Lambda_i`?
    pub fn contains(&self, v: &[i64]) -> bool {
        v.len() == self.out_len() && kernel_rows_hold(&self.a_prime, self.q, v, self.kappa)
    }

    /// Exact `-A'_row z` for the new rows, unreduced.
    fn raw_lift(&self, z: &[i64]) -> Vec<i128> {
        (self.kappa_prev()..self.kappa)
            .map(|row| -self.a_prime.row(row).iter().zip(z).map(|(&a, &zi)| a as i128 * zi as i128).sum::<i128>())
            .collect()
    }
}

fn kernel_rows_hold(a_prime: &ZqMatrix, q: u64, x: &[i64], rows: usize) -> bool {
    let k = a_prime.cols();
    (0..rows).all(|row| {
        let acc: i128 = a_prime.row(row).iter().zip(&x[..k]).map(|(&a, &zi)| a as i128 * zi as i128).sum();
        reduce_i128(acc + x[k + row] as i128, q) == 0
    })
}

/// Stage descriptors for block sizes `b` and moduli `p`.
///
/// `Σ b` must equal `n` unless `partial` is set, in which case it may fall short
/// (early abort) but never exceed `n`.
pub fn build_stages(inst: &SisInstance, b: &[usize], p: &[u64], partial: bool) -> Result<Vec<StageDescriptor>> {
    if !inst.systematic {
        return Err(Error::PreconditionViolated("instance must be in systematic form".into()));
    }
    if b.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), got: p.len() });
    }
    let total: usize = b.iter().sum();
    if total > inst.n || (!partial && total != inst.n) {
        return Err(Error::BlockSumMismatch { expected: inst.n, got: total });
    }
    if let Some(i) = b.iter().position(|&bi| bi == 0) {
        return Err(Error::InfeasibleSchedule(format!("stage {} has an empty block", i + 1)));
    }
    if let Some(&pi) = p.iter().find(|&&pi| pi == 0 || pi > inst.q) {
        return Err(Error::InfeasibleSchedule(format!("stage modulus {pi} outside [1, q]")));
    }
    let a_prime = Arc::new(inst.a_prime());
    let mut kappa = 0;
    Ok(b.iter()
        .zip(p)
        .enumerate()
        .map(|(idx, (&bi, &pi))| {
            kappa += bi;
            StageDescriptor { i: idx + 1, b: bi, kappa, p: pi, q: inst.q, a_prime: Arc::clone(&a_prime) }
        })
        .collect())
}

/// Stage descriptors for a schedule.
pub fn build_chain(inst: &SisInstance, schedule: &crate::wagner::Schedule) -> Result<Vec<StageDescriptor>> {
    let total: usize = schedule.b.iter().sum();
    if total + schedule.ell != inst.n {
        return Err(Error::BlockSumMismatch { expected: inst.n - schedule.ell, got: total });
    }
    build_stages(inst, &schedule.b, &schedule.p, schedule.ell > 0)
}

/// The exact integer lift of `x in Lambda_{i-1}` into the new rows: `-A'_new z`.
pub fn lift_integer(stage: &StageDescriptor, x: &[i64]) -> Result<Vec<i128>> {
    if !stage.contains_prev(x) {
        return Err(Error::NotInLattice);
    }
    Ok(stage.raw_lift(&x[..stage.free_dim()]))
}

/// Centered residues of `-A'_row z mod q` for `rows`, the uniform stand-in for
/// coordinates that no stage handled.
pub fn lift_centered(a_prime: &ZqMatrix, z: &[i64], rows: std::ops::Range<usize>) -> Vec<i64> {
    let q = a_prime.modulus();
    rows.map(|row| {
        let acc: i128 = a_prime.row(row).iter().zip(z).map(|(&a, &zi)| a as i128 * zi as i128).sum();
        centered(reduce_i128(-acc, q), q)
    })
    .collect()
}

/// A vector of `Lambda'_i` in scaled-integer form.
///
/// The represented vector is `(head; tail_num / p)` with
/// `tail_num = p * y_last + q * k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StagedVector {
    pub head: Vec<i64>,
    pub tail_num: Vec<i128>,
    pub k: Vec<i64>,
    pub label: Vec<u64>,
}

impl StagedVector {
    /// Recover `y_last = (tail_num - q k) / p`.
    pub fn y_last(&self, stage: &StageDescriptor) -> Vec<i128> {
        self.tail_num
            .iter()
            .zip(&self.k)
            .map(|(&t, &k)| {
                let v = t - stage.q as i128 * k as i128;
                debug_assert_eq!(v % stage.p as i128, 0);
                v / stage.p as i128
            })
            .collect()
    }

    /// The represented vector as exact rationals.
    pub fn to_rationals(&self, stage: &StageDescriptor) -> Vec<Ratio> {
        self.head
            .iter()
            .map(|&h| Ratio::int(h as i128))
            .chain(self.tail_num.iter().map(|&t| Ratio::new(BigInt::from(t), BigInt::from(stage.p))))
            .collect()
    }
}

/// `k mod p`, the coset of `sv` in `Lambda'_i / Lambda_i`.
pub fn coset_label(sv: &StagedVector) -> &[u64] {
    &sv.label
}

/// Randomized lift of `x in Lambda_{i-1}` to `Lambda'_i` at width `s`.
pub fn dglift<R: rand::RngCore + ?Sized>(stage: &StageDescriptor, x: &[i64], s: f64, rng: &mut R) -> Result<StagedVector> {
    let sr = Ratio::from_f64(s);
    let width = stage.lift_width(&sr.mul(&sr))?;
    if !stage.contains_prev(x) {
        return Err(Error::NotInLattice);
    }
    Ok(dglift_with(stage, x.to_vec(), &width, rng))
}

/// [`dglift`] with a precomputed coefficient width and no membership check.
pub fn dglift_with<R: rand::RngCore + ?Sized>(stage: &StageDescriptor, x: Vec<i64>, width: &ZWidth, rng: &mut R) -> StagedVector {
    let (p, q) = (stage.p as i128, stage.q as i128);
    let y = stage.raw_lift(&x[..stage.free_dim()]);
    let mut tail_num = Vec::with_capacity(stage.b);
    let mut ks = Vec::with_capacity(stage.b);
    let mut label = Vec::with_capacity(stage.b);
    for &yj in &y {
        // Sample around the centered residue y' = y - q j, then shift k back by p j;
        // the law of k given y is D_{Z, (p/q)s, -(p/q)y} either way.
        let yr = centered(reduce_i128(yj, stage.q), stage.q) as i128;
        let j = (yj - yr) / q;
        let kr = width.sample_frac(-p * yr, q, rng) as i128;
        let k = kr - p * j;
        tail_num.push(p * yj + q * k);
        ks.push(i64::try_from(k).expect("coset coefficient exceeds i64"));
        label.push(kr.rem_euclid(p) as u64);
    }
    StagedVector { head: x, tail_num, k: ks, label }
}

/// `a - b` for two vectors with equal labels: an integer vector of `Lambda_i`.
pub fn combine(stage: &StageDescriptor, a: &StagedVector, b: &StagedVector) -> Vec<i64> {
    debug_assert_eq!(a.label, b.label);
    let p = stage.p as i128;
    let mut out = Vec::with_capacity(stage.out_len());
    out.extend(a.head.iter().zip(&b.head).map(|(x, y)| x - y));
    out.extend(a.tail_num.iter().zip(&b.tail_num).map(|(&x, &y)| {
        let d = x - y;
        debug_assert_eq!(d % p, 0, "labels agree but tails differ off Lambda_i");
        i64::try_from(d / p).expect("coordinate exceeds i64")
    }));
    out
}
