//! Exact linear algebra over `Z_q`, SIS instances and small brute-force oracles.
//!
//! Moduli are limited to `q < 2^63`; entries are stored reduced in `[0, q)` and
//! every product is formed in `u128` so no intermediate value overflows.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Largest supported modulus (exclusive).
pub const MAX_Q: u64 = 1 << 63;

/// Norm used by an instance's bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Linf,
    L2,
}

/// Dense row-major matrix with entries in `[0, q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZqMatrix {
    rows: usize,
    cols: usize,
    q: u64,
    data: Vec<u64>,
}

impl ZqMatrix {
    pub fn from_rows(rows: &[Vec<u64>], q: u64) -> Result<Self> {
        check_modulus(q)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, got: row.len() });
            }
            for &v in row {
                if v >= q {
                    return Err(Error::BadDimensions(format!("entry {v} not in [0, {q})")));
                }
                data.push(v);
            }
        }
        Ok(Self { rows: r, cols: c, q, data })
    }

    pub fn from_fn(rows: usize, cols: usize, q: u64, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j) % q);
            }
        }
        Self { rows, cols, q, data }
    }

    pub fn identity(n: usize, q: u64) -> Self {
        Self::from_fn(n, n, q, |i, j| u64::from(i == j))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Columns `[from, to)` as a new matrix.
    pub fn column_block(&self, from: usize, to: usize) -> Self {
        Self::from_fn(self.rows, to - from, self.q, |i, j| self.get(i, from + j))
    }

    fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v;
    }
}

fn check_modulus(q: u64) -> Result<()> {
    if q < 2 || q >= MAX_Q {
        return Err(Error::BadDimensions(format!("modulus {q} outside [2, 2^63)")));
    }
    Ok(())
}

/// `a*b mod q` without overflow.
#[inline]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

/// Reduce a signed integer into `[0, q)`.
#[inline]
pub fn reduce_i128(x: i128, q: u64) -> u64 {
    x.rem_euclid(q as i128) as u64
}

/// Representative of `v mod q` in `(-q/2, q/2]`.
#[inline]
pub fn centered(v: u64, q: u64) -> i64 {
    if v <= q / 2 {
        v as i64
    } else {
        v as i64 - q as i64
    }
}

/// Modular inverse, if `a` is a unit mod `q`.
pub fn inv_mod(a: u64, q: u64) -> Option<u64> {
    let (mut r0, mut r1) = (q as i128, (a % q) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    (r0 == 1).then(|| reduce_i128(t0, q))
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let pow = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_mod(acc, b, n);
            }
            b = mul_mod(b, b, n);
            e >>= 1;
        }
        acc
    };
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Exact `A*x mod q`.
pub fn matvec_mod(a: &ZqMatrix, x: &[i64], q: u64) -> Result<Vec<u64>> {
    if x.len() != a.cols {
        return Err(Error::DimensionMismatch { expected: a.cols, got: x.len() });
    }
    let xr: Vec<u64> = x.iter().map(|&v| reduce_i128(v as i128, q)).collect();
    Ok((0..a.rows).map(|i| dot_mod(a.row(i), &xr, q)).collect())
}

/// Dot product of two reduced vectors mod `q`.
#[inline]
pub fn dot_mod(a: &[u64], x: &[u64], q: u64) -> u64 {
    let mut acc: u128 = 0;
    for (&ai, &xi) in a.iter().zip(x) {
        acc += ai as u128 * xi as u128;
        if acc >= 1 << 127 {
            acc %= q as u128;
        }
    }
    (acc % q as u128) as u64
}

/// A column reordering: column `j` of the permuted matrix is column `perm[j]` of the original.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnPermutation {
    pub perm: Vec<usize>,
}

impl ColumnPermutation {
    pub fn identity(m: usize) -> Self {
        Self { perm: (0..m).collect() }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(j, &p)| j == p)
    }

    /// Coordinates of an original-instance vector in the permuted instance.
    pub fn forward(&self, x: &[i64]) -> Vec<i64> {
        self.perm.iter().map(|&p| x[p]).collect()
    }

    /// Coordinates of a permuted-instance vector in the original instance.
    pub fn backward(&self, x: &[i64]) -> Vec<i64> {
        let mut out = vec![0; x.len()];
        for (j, &p) in self.perm.iter().enumerate() {
            out[p] = x[j];
        }
        out
    }
}

/// An SIS instance `A x = 0 mod q`.
#[derive(Clone, Debug, PartialEq)]
pub struct SisInstance {
    pub n: usize,
    pub m: usize,
    pub q: u64,
    pub a: ZqMatrix,
    pub beta: Option<u64>,
    pub norm: NormKind,
    pub q_prime: bool,
    pub systematic: bool,
}

impl SisInstance {
    pub fn new(a: ZqMatrix, beta: Option<u64>, norm: NormKind) -> Result<Self> {
        let (n, m, q) = (a.rows, a.cols, a.q);
        if n == 0 || n > m {
            return Err(Error::BadDimensions(format!("need 1 <= n <= m, got n={n}, m={m}")));
        }
        let systematic = (0..n).all(|i| (0..n).all(|j| a.get(i, m - n + j) == u64::from(i == j)));
        Ok(Self { n, m, q, a, beta, norm, q_prime: is_prime(q), systematic })
    }

    /// The `n x (m-n)` block `A'` of a systematic instance.
    pub fn a_prime(&self) -> ZqMatrix {
        self.a.column_block(0, self.m - self.n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(s)?;
        file.try_into()
    }
}

/// On-disk instance layout.
#[derive(Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    pub q: u64,
    pub beta: Option<u64>,
    pub norm: NormKind,
    #[serde(rename = "A")]
    pub a: Vec<Vec<u64>>,
}

impl From<&SisInstance> for InstanceFile {
    fn from(inst: &SisInstance) -> Self {
        Self { n: inst.n, m: inst.m, q: inst.q, beta: inst.beta, norm: inst.norm, a: inst.a.to_rows() }
    }
}

impl TryFrom<InstanceFile> for SisInstance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        if f.a.len() != f.n {
            return Err(Error::DimensionMismatch { expected: f.n, got: f.a.len() });
        }
        if let Some(row) = f.a.iter().find(|row| row.len() != f.m) {
            return Err(Error::DimensionMismatch { expected: f.m, got: row.len() });
        }
        SisInstance::new(ZqMatrix::from_rows(&f.a, f.q)?, f.beta, f.norm)
    }
}

/// A candidate solution with its norm under the instance's norm kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub x: Vec<i64>,
    #[serde(rename = "norm", default)]
    pub norm_value: f64,
}

impl Solution {
    pub fn new(x: Vec<i64>, norm: NormKind) -> Self {
        let norm_value = match norm {
            NormKind::Linf => linf(&x) as f64,
            NormKind::L2 => (l2_squared(&x) as f64).sqrt(),
        };
        Self { x, norm_value }
    }
}

pub fn linf(x: &[i64]) -> u64 {
    x.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
}

pub fn l2_squared(x: &[i64]) -> u128 {
    x.iter().map(|&v| (v as i128 * v as i128) as u128).sum()
}

/// Bring an instance to the form `[A' | I_n]` using row operations and column swaps.
///
/// Row operations preserve the kernel, so `x` solves the output iff
/// `perm.backward(x)` solves the input.
pub fn systematic_form(inst: &SisInstance) -> Result<(SisInstance, ColumnPermutation)> {
    let (n, m, q) = (inst.n, inst.m, inst.q);
    let mut a = inst.a.clone();
    let mut pivot_col = Vec::with_capacity(n);
    let mut used = vec![false; m];
    let mut saw_nonunit = false;

    for r in 0..n {
        let preferred = m - n + r;
        let order = std::iter::once(preferred).chain((0..m).rev().filter(|&c| c != preferred));
        let mut found = None;
        'search: for row in r..n {
            for c in order.clone() {
                if used[c] {
                    continue;
                }
                let v = a.get(row, c);
                if v == 0 {
                    continue;
                }
                match inv_mod(v, q) {
                    Some(inv) => {
                        found = Some((row, c, inv));
                        break 'search;
                    }
                    None => saw_nonunit = true,
                }
            }
        }
        let Some((row, c, inv)) = found else {
            return Err(if saw_nonunit { Error::NonInvertiblePivot { q } } else { Error::RankDeficient { q } });
        };
        if row != r {
            for j in 0..m {
                let (x, y) = (a.get(r, j), a.get(row, j));
                a.set(r, j, y);
                a.set(row, j, x);
            }
        }
        for j in 0..m {
            let v = mul_mod(a.get(r, j), inv, q);
            a.set(r, j, v);
        }
        for i in 0..n {
            let f = a.get(i, c);
            if i == r || f == 0 {
                continue;
            }
            for j in 0..m {
                let v = (a.get(i, j) + q - mul_mod(f, a.get(r, j), q)) % q;
                a.set(i, j, v);
            }
        }
        used[c] = true;
        pivot_col.push(c);
    }

    let mut perm: Vec<usize> = (0..m).filter(|&c| !used[c]).collect();
    perm.extend(&pivot_col);
    let out = ZqMatrix::from_fn(n, m, q, |i, j| a.get(i, perm[j]));
    let mut sys = SisInstance::new(out, inst.beta, inst.norm)?;
    debug_assert!(sys.systematic);
    sys.systematic = true;
    Ok((sys, ColumnPermutation { perm }))
}

/// Uniform instance from a seed.
pub fn random_instance(n: usize, m: usize, q: u64, seed: u64) -> Result<SisInstance> {
    random_instance_with(n, m, q, &mut seeded(seed))
}

pub fn random_instance_with<R: RngCore + ?Sized>(n: usize, m: usize, q: u64, rng: &mut R) -> Result<SisInstance> {
    if n == 0 || m < n {
        return Err(Error::BadDimensions(format!("need 1 <= n <= m, got n={n}, m={m}")));
    }
    check_modulus(q)?;
    let a = ZqMatrix::from_fn(n, m, q, |_, _| rng.gen_range(0..q));
    SisInstance::new(a, None, NormKind::Linf)
}

/// Uniform `A'` completed by the identity.
pub fn random_systematic_instance<R: RngCore + ?Sized>(n: usize, m: usize, q: u64, rng: &mut R) -> Result<SisInstance> {
    if n == 0 || m < n {
        return Err(Error::BadDimensions(format!("need 1 <= n <= m, got n={n}, m={m}")));
    }
    check_modulus(q)?;
    let a = ZqMatrix::from_fn(n, m, q, |i, j| {
        if j < m - n {
            rng.gen_range(0..q)
        } else {
            u64::from(j - (m - n) == i)
        }
    });
    SisInstance::new(a, None, NormKind::Linf)
}

/// Exact `lambda_1^inf(Lambda_q(A))` by enumerating all of `Z_q^n`: the minimum of
/// `||centered(A^T s mod q)||_inf` over `s != 0`, where a zero image stands for `q`.
pub fn lambda1_inf_bruteforce(a: &ZqMatrix, budget: u64) -> Result<u64> {
    let (n, m, q) = (a.rows, a.cols, a.q);
    let total = (q as f64).powi(n as i32);
    if total > budget as f64 {
        return Err(Error::BudgetExceeded { needed: total, budget: budget as f64 });
    }
    // Odometer over s: bumping digit j adds row j to v, and a wrapping digit
    // has added q * row j, which is zero mod q.
    let mut digits = vec![0u64; n];
    let mut v = vec![0u64; m];
    let mut best = u64::MAX;
    loop {
        let mut j = 0;
        loop {
            if j == n {
                return Ok(best);
            }
            for (vk, &ak) in v.iter_mut().zip(a.row(j)) {
                *vk = (*vk + ak) % q;
            }
            digits[j] += 1;
            if digits[j] < q {
                break;
            }
            digits[j] = 0;
            j += 1;
        }
        let mut norm = 0;
        for &vk in &v {
            norm = norm.max(centered(vk, q).unsigned_abs());
            if norm >= best {
                break;
            }
        }
        // A^T s = 0 mod q: the coset is q Z^m, whose shortest nonzero vectors have norm q.
        best = best.min(if norm == 0 { q } else { norm });
    }
}

#[cfg(test)]
mod test {
    use super::*;

    #[test]
    fn inverse_and_primes() {
        assert_eq!(inv_mod(3, 7), Some(5));
        assert_eq!(inv_mod(2, 4), None);
        assert!(is_prime(8380417));
        assert!(!is_prime(8380417 * 3));
        assert!(is_prime((1 << 61) - 1));
    }

    #[test]
    fn centered_range() {
        assert_eq!(centered(2, 4), 2);
        assert_eq!(centered(3, 4), -1);
        assert_eq!(centered(3, 5), -2);
    }
}
