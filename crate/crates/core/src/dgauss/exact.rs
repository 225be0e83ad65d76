//! Exact Bernoulli trials `Pr[true] = exp(-E)` where `E = a*pi + b/pi + r`
//! for nonnegative rationals `a, b` and a rational `r`.
//!
//! A uniform `U` in `[0, 1)` is revealed 64 bits at a time and compared against
//! rigorous enclosures of `exp(-E)`. The first attempt uses `f64` with a wide
//! error margin; ambiguity falls through to big-integer fixed point at doubling
//! precision. The decision `U < exp(-E)` is never made on an approximation.

use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;

/// Exact rational with positive denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub num: BigInt,
    pub den: BigInt,
}

impl Ratio {
    pub fn new(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let (num, den) = if den.is_negative() { (-num, -den) } else { (num, den) };
        let g = num.gcd(&den);
        if g.is_one() || g.is_zero() {
            Self { num, den }
        } else {
            Self { num: num / &g, den: den / &g }
        }
    }

    pub fn int(v: i128) -> Self {
        Self { num: BigInt::from(v), den: BigInt::one() }
    }

    pub fn frac(num: i128, den: i128) -> Self {
        Self::new(BigInt::from(num), BigInt::from(den))
    }

    /// The exact value of a finite `f64`.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite value");
        if x == 0.0 {
            return Self::int(0);
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1 << 52), exp - 1075) };
        let mant = BigInt::from(sign * mant as i128);
        if e >= 0 {
            Self::new(mant << e as usize, BigInt::one())
        } else {
            Self::new(mant, BigInt::one() << (-e) as usize)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.num.to_f64().unwrap_or(f64::NAN);
        let d = self.den.to_f64().unwrap_or(f64::NAN);
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
        // Very large parts: drop low bits before converting.
        let shift = (self.num.bits().max(self.den.bits()) as i64 - 900).max(0) as usize;
        (&self.num >> shift).to_f64().unwrap_or(f64::NAN) / (&self.den >> shift).to_f64().unwrap_or(f64::NAN)
    }

    pub fn mul(&self, o: &Ratio) -> Ratio {
        Ratio::new(&self.num * &o.num, &self.den * &o.den)
    }

    pub fn div(&self, o: &Ratio) -> Ratio {
        Ratio::new(&self.num * &o.den, &self.den * &o.num)
    }

    pub fn add(&self, o: &Ratio) -> Ratio {
        Ratio::new(&self.num * &o.den + &o.num * &self.den, &self.den * &o.den)
    }

    pub fn sub(&self, o: &Ratio) -> Ratio {
        Ratio::new(&self.num * &o.den - &o.num * &self.den, &self.den * &o.den)
    }

    pub fn neg(&self) -> Ratio {
        Ratio { num: -&self.num, den: self.den.clone() }
    }

    /// Nearest integer, ties rounded up.
    pub fn round(&self) -> BigInt {
        let two = BigInt::from(2);
        (&self.num * &two + &self.den).div_floor(&(&self.den * &two))
    }

    pub fn floor_fixed(&self, prec: usize) -> BigInt {
        (&self.num << prec).div_floor(&self.den)
    }

    pub fn ceil_fixed(&self, prec: usize) -> BigInt {
        -((-&self.num << prec).div_floor(&self.den))
    }
}

struct PiCache {
    prec: usize,
    lo: BigInt,
}

static PI: Mutex<Option<PiCache>> = Mutex::new(None);

fn arctan_inv(x: u64, w: usize) -> (BigInt, u64) {
    // sum_j (-1)^j / ((2j+1) x^(2j+1)) in fixed point with w bits; each term is
    // off by at most 3 units.
    let x2 = BigInt::from(x * x);
    let mut pw = (BigInt::one() << w) / BigInt::from(x);
    let mut sum = BigInt::zero();
    let mut j = 0u64;
    while !pw.is_zero() {
        let term = &pw / BigInt::from(2 * j + 1);
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        pw /= &x2;
        j += 1;
    }
    (sum, 3 * j + 6)
}

/// `floor(pi * 2^prec)`, so that `lo <= pi * 2^prec < lo + 1`.
pub fn pi_floor(prec: usize) -> BigInt {
    let mut guard = PI.lock().expect("pi cache poisoned");
    if let Some(c) = guard.as_ref() {
        if c.prec >= prec {
            return &c.lo >> (c.prec - prec);
        }
    }
    let want = prec.max(256).next_power_of_two();
    let mut g = 64;
    let lo = loop {
        let w = want + g;
        let (a, ea) = arctan_inv(5, w);
        let (b, eb) = arctan_inv(239, w);
        let approx = a * 16 - b * 4;
        let err = BigInt::from(16 * ea + 4 * eb);
        let lo: BigInt = (&approx - &err) >> g;
        let hi: BigInt = (&approx + &err) >> g;
        if lo == hi {
            break lo;
        }
        g *= 2;
    };
    *guard = Some(PiCache { prec: want, lo: lo.clone() });
    lo >> (want - prec)
}

/// Argument `E = a*pi + b/pi + r` of an exact Bernoulli trial.
#[derive(Clone, Debug)]
pub struct ExpArg {
    pub a: Ratio,
    pub b: Ratio,
    pub r: Ratio,
}

impl ExpArg {
    pub fn rational(r: Ratio) -> Self {
        Self { a: Ratio::int(0), b: Ratio::int(0), r }
    }

    /// Integers `(lo, hi)` with `lo <= E * 2^prec <= hi`.
    pub fn fixed_bounds(&self, prec: usize) -> (BigInt, BigInt) {
        debug_assert!(!self.a.is_negative() && !self.b.is_negative());
        let excess = |r: &Ratio| (r.num.bits() as i64 - r.den.bits() as i64).max(0) as usize;
        let pp = prec + 16 + excess(&self.a) + excess(&self.b);
        let pi_lo = pi_floor(pp);
        let pi_hi = &pi_lo + 1;
        let mut lo = self.r.floor_fixed(prec);
        let mut hi = self.r.ceil_fixed(prec);
        if !self.a.is_zero() {
            // a*pi with pi in [pi_lo, pi_hi] / 2^pp
            let d = &self.a.den << pp;
            let down: BigInt = &self.a.num * &pi_lo;
            let up: BigInt = &self.a.num * &pi_hi;
            lo += (down << prec).div_floor(&d);
            hi += -((-(up << prec)).div_floor(&d));
        }
        if !self.b.is_zero() {
            // b/pi = b * 2^pp / (pi * 2^pp)
            let scale = BigInt::one() << (prec + pp);
            lo += (&self.b.num * &scale).div_floor(&(&self.b.den * &pi_hi));
            hi += -((-(&self.b.num * &scale)).div_floor(&(&self.b.den * &pi_lo)));
        }
        (lo, hi)
    }
}

/// Bounds on `exp(-x)` for `x = xs / 2^prec`, `xs >= 0`, at `prec` bits:
/// returns `(lo, hi)` with `lo <= exp(-x) * 2^prec <= hi`.
fn exp_neg_fixed(xs: &BigInt, prec: usize) -> (BigInt, BigInt) {
    debug_assert!(!xs.is_negative());
    let one = BigInt::one() << prec;
    if xs.is_zero() {
        return (one.clone(), one);
    }
    // exp(-x) < 2^-(prec+1) once x > (prec+1) ln 2.
    let cutoff = BigInt::from(prec as u64 + 2) << prec;
    if xs > &cutoff {
        return (BigInt::zero(), BigInt::one());
    }
    let k = (xs.bits() as i64 - prec as i64 + 1).max(0) as usize;
    let w = prec + k + 40;
    // y = xs / 2^(prec+k) < 1/2, held exactly at w bits.
    let y = xs << (w - prec - k);
    let wone = BigInt::one() << w;
    let mut term = wone.clone();
    let mut sum = wone.clone();
    let mut j = 1u64;
    loop {
        term = ((&term * &y) >> w) / BigInt::from(j);
        if term.is_zero() {
            break;
        }
        if j % 2 == 1 {
            sum -= &term;
        } else {
            sum += &term;
        }
        j += 1;
    }
    let err = BigInt::from(j * j + 4 * j + 4);
    let mut lo = (&sum - &err).max(BigInt::zero());
    let mut hi = &sum + &err;
    for _ in 0..k {
        lo = (&lo * &lo) >> w;
        hi = -((-(&hi * &hi)) >> w);
    }
    let shift = w - prec;
    (lo >> shift, -((-hi) >> shift))
}

/// Uniform in `[0, 1)` revealed in 64-bit words.
struct LazyUniform {
    words: Vec<u64>,
}

impl LazyUniform {
    fn prefix<R: RngCore + ?Sized>(&mut self, prec: usize, rng: &mut R) -> BigUint {
        let need = prec.div_ceil(64);
        while self.words.len() < need {
            self.words.push(rng.next_u64());
        }
        let mut acc = BigUint::zero();
        for &w in &self.words[..need] {
            acc = (acc << 64) | BigUint::from(w);
        }
        acc >> (need * 64 - prec)
    }
}

/// Relative error assumed for the `f64` evaluation of each term of `E`.
const F64_REL: f64 = 1.0 / (1u64 << 40) as f64;

/// Exact `Bernoulli(exp(-E))`.
///
/// `approx = (a, b, r)` are `f64` approximations of the exact parts with
/// relative error far below `2^-40`; `exact` builds the exact argument and is
/// only called when the fast comparison is ambiguous.
pub fn bernoulli_exp_neg<R: RngCore + ?Sized>(
    approx: (f64, f64, f64),
    exact: impl FnOnce() -> ExpArg,
    rng: &mut R,
) -> bool {
    let word = rng.next_u64();
    let (a, b, r) = approx;
    let pi = std::f64::consts::PI;
    let e = a * pi + b / pi + r;
    let delta = F64_REL * (a * pi + b / pi + r.abs()) + 1e-18;
    if e.is_finite() && delta < 1e-3 {
        let p = (-e).exp();
        let margin = 1.0 / (1u64 << 44) as f64;
        let p_lo = p * (1.0 - delta - margin);
        let p_hi = p * (1.0 + 2.0 * delta + margin);
        let scale = 18446744073709551616.0; // 2^64
        let t_lo = (p_lo * scale).floor();
        let t_hi = (p_hi * scale).ceil();
        let u = word as u128;
        if t_lo >= 1.0 && u + 1 <= t_lo as u128 {
            return true;
        }
        if t_hi < scale && u >= t_hi as u128 {
            return false;
        }
    }
    slow_decide(exact(), word, rng)
}

fn slow_decide<R: RngCore + ?Sized>(arg: ExpArg, first: u64, rng: &mut R) -> bool {
    let mut u = LazyUniform { words: vec![first] };
    let mut prec = 128;
    loop {
        let (e_lo, e_hi) = arg.fixed_bounds(prec + 32);
        let e_lo = e_lo.max(BigInt::zero());
        let e_hi = e_hi.max(BigInt::zero());
        let (p_lo, _) = exp_neg_fixed(&e_hi, prec + 32);
        let (_, p_hi) = exp_neg_fixed(&e_lo, prec + 32);
        let p_lo: BigInt = p_lo >> 32usize;
        let p_hi: BigInt = -((-p_hi) >> 32usize);
        let ub = BigInt::from_biguint(Sign::Plus, u.prefix(prec, rng));
        if &ub + 1 <= p_lo {
            return true;
        }
        if ub >= p_hi {
            return false;
        }
        prec *= 2;
    }
}

#[cfg(test)]
pub(crate) fn decide_exactly<R: RngCore + ?Sized>(arg: ExpArg, rng: &mut R) -> bool {
    let w = rng.next_u64();
    slow_decide(arg, w, rng)
}

#[cfg(test)]
mod test {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn pi_hex_digits() {
        let lo = pi_floor(128);
        assert_eq!(format!("{:x}", lo), "3243f6a8885a308d313198a2e03707344");
        // Cache serves lower precisions consistently.
        assert_eq!(pi_floor(4), BigInt::from(50));
    }

    #[test]
    fn exp_enclosure() {
        for &x in &[0.0, 0.25, 1.0, 3.7, 40.0] {
            let xs = Ratio::from_f64(x).floor_fixed(200);
            let (lo, hi) = exp_neg_fixed(&xs, 200);
            let scale = (2f64).powi(200);
            let l = lo.to_f64().unwrap() / scale;
            let h = hi.to_f64().unwrap() / scale;
            let want = (-x as f64).exp();
            assert!(l <= want * (1.0 + 1e-15) && h >= want * (1.0 - 1e-15), "x={x}");
            assert!(&hi - &lo < BigInt::from(1u64 << 20));
        }
    }

    #[test]
    fn from_f64_is_exact() {
        let r = Ratio::from_f64(0.3);
        assert_eq!(r.to_f64(), 0.3);
        assert_eq!(r.den, BigInt::one() << 54usize);
        assert_eq!(Ratio::from_f64(-2.5), Ratio::frac(-5, 2));
        assert_eq!(Ratio::frac(7, 2).round(), BigInt::from(4));
        assert_eq!(Ratio::frac(-7, 2).round(), BigInt::from(-3));
    }

    #[test]
    fn slow_tier_frequency() {
        // exp(-(pi/4)) via the big-integer path only.
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let arg = ExpArg { a: Ratio::frac(1, 4), b: Ratio::int(0), r: Ratio::int(0) };
        let trials = 20000;
        let hits = (0..trials).filter(|_| decide_exactly(arg.clone(), &mut rng)).count();
        let p = (-std::f64::consts::PI / 4.0).exp();
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - p).abs() < 4.0 * se);
    }
}
