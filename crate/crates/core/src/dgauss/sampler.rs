//! Exact sampling from `D_{Z,s,c}` and `D_{Z^n,s,c}`.
//!
//! Proposal: a two-sided discrete Laplace around `k0 = round(c)` with integer
//! scale `L`, itself sampled exactly. Acceptance: `Bernoulli(exp(-E))` with
//!
//! `E = pi (k-c)^2 / s^2 - |k-k0| / L + s^2 / (4 pi L^2) + 1 / (2L) >= 0`,
//!
//! so accepted values have law proportional to `exp(-pi (k-c)^2 / s^2)`.
//! `E` depends on `k` only through `|k - c|` and `|k - k0|`, so for `c = 0`
//! the sampler is symmetric by construction.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::{Rng, RngCore};

use super::exact::{bernoulli_exp_neg, ExpArg, Ratio};
use crate::error::{Error, Result};

/// Width and centers of a discrete Gaussian, held exactly.
#[derive(Clone, Debug)]
pub struct GaussParam {
    width: ZWidth,
    centers: Vec<Ratio>,
}

impl GaussParam {
    /// Width `s` and centers given as `f64`, both taken at their exact binary value.
    pub fn new(s: f64, centers: &[f64]) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::PreconditionViolated(format!("width must be positive, got {s}")));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::PreconditionViolated("non-finite center".into()));
        }
        let sr = Ratio::from_f64(s);
        Ok(Self { width: ZWidth::new(sr.mul(&sr)), centers: centers.iter().map(|&c| Ratio::from_f64(c)).collect() })
    }

    pub fn scalar(s: f64, c: f64) -> Result<Self> {
        Self::new(s, &[c])
    }

    /// Exact `s^2` and centers.
    pub fn from_ratios(s2: Ratio, centers: Vec<Ratio>) -> Result<Self> {
        if s2.is_negative() || s2.is_zero() {
            return Err(Error::PreconditionViolated("width must be positive".into()));
        }
        Ok(Self { width: ZWidth::new(s2), centers })
    }

    pub fn s(&self) -> f64 {
        self.width.s2_f.sqrt()
    }

    pub fn s2(&self) -> &Ratio {
        &self.width.s2
    }

    pub fn centers(&self) -> &[Ratio] {
        &self.centers
    }

    pub fn width(&self) -> &ZWidth {
        &self.width
    }
}

/// Smallest width accepted for dimension `n`: `sqrt(ln(2n+4)/pi)`.
pub fn min_width(n: usize) -> f64 {
    ((2.0 * n as f64 + 4.0).ln() / std::f64::consts::PI).sqrt()
}

fn check_width(s: f64, n: usize) -> Result<()> {
    let min = min_width(n);
    if s < min {
        return Err(Error::WidthTooSmall { s, min });
    }
    Ok(())
}

/// One draw from `D_{Z,s,c}`; `param` must carry a single center.
pub fn sample_z<R: RngCore + ?Sized>(param: &GaussParam, rng: &mut R) -> Result<i64> {
    if param.centers.len() > 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: param.centers.len() });
    }
    check_width(param.s(), 1)?;
    let zero = Ratio::int(0);
    Ok(param.width.sample(param.centers.first().unwrap_or(&zero), rng))
}

/// `n` independent coordinates, coordinate `j` from `D_{Z,s,c_j}`.
/// An empty center list means the origin.
pub fn sample_zn<R: RngCore + ?Sized>(param: &GaussParam, n: usize, rng: &mut R) -> Result<Vec<i64>> {
    if !param.centers.is_empty() && param.centers.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: param.centers.len() });
    }
    check_width(param.s(), n)?;
    if param.centers.is_empty() {
        return Ok((0..n).map(|_| param.width.sample_frac(0, 1, rng)).collect());
    }
    Ok(param.centers.iter().map(|c| param.width.sample(c, rng)).collect())
}

/// Per-width constants of the rejection sampler.
#[derive(Clone, Debug)]
pub struct ZWidth {
    s2: Ratio,
    s2_f: f64,
    scale: i64,
    // s^2 / (4 L^2), the coefficient of 1/pi in E
    b: Ratio,
    b_f: f64,
}

impl ZWidth {
    pub fn new(s2: Ratio) -> Self {
        let s2_f = s2.to_f64();
        let sigma = (s2_f / (2.0 * std::f64::consts::PI)).sqrt();
        let scale = sigma.round().clamp(1.0, (1u64 << 52) as f64) as i64;
        let b = s2.div(&Ratio::int(4 * scale as i128 * scale as i128));
        let b_f = b.to_f64();
        Self { s2, s2_f, scale, b, b_f }
    }

    pub fn s(&self) -> f64 {
        self.s2_f.sqrt()
    }

    /// Draw with an exact rational center.
    pub fn sample<R: RngCore + ?Sized>(&self, c: &Ratio, rng: &mut R) -> i64 {
        match (c.num.to_i128(), c.den.to_i128()) {
            (Some(n), Some(d)) if n.unsigned_abs() < 1 << 100 && d < 1 << 100 => self.sample_frac(n, d, rng),
            _ => self.sample_big(c, rng),
        }
    }

    /// Draw centered at `cn / cd` with `cd > 0`.
    pub fn sample_frac<R: RngCore + ?Sized>(&self, cn: i128, cd: i128, rng: &mut R) -> i64 {
        debug_assert!(cd > 0);
        let k0 = (2 * cn + cd).div_euclid(2 * cd) as i64;
        loop {
            let y = self.laplace(rng);
            let k = k0 + y;
            let Some(t) = (k as i128).checked_mul(cd).and_then(|v| v.checked_sub(cn)) else {
                return self.sample_big(&Ratio::frac(cn, cd), rng);
            };
            let tf = t as f64 / cd as f64;
            let a_f = tf * tf / self.s2_f;
            let r_f = (1.0 - 2.0 * y.unsigned_abs() as f64) / (2.0 * self.scale as f64);
            let exact = || {
                let tb = BigInt::from(t);
                let a = Ratio::new(&tb * &tb * &self.s2.den, BigInt::from(cd) * BigInt::from(cd) * &self.s2.num);
                ExpArg { a, b: self.b.clone(), r: self.r_exact(y) }
            };
            if bernoulli_exp_neg((a_f, self.b_f, r_f), exact, rng) {
                return k;
            }
        }
    }

    fn sample_big<R: RngCore + ?Sized>(&self, c: &Ratio, rng: &mut R) -> i64 {
        let k0 = c.round().to_i64().expect("center beyond i64 range");
        loop {
            let y = self.laplace(rng);
            let k = k0 + y;
            let t = Ratio::int(k as i128).sub(c);
            let tf = t.to_f64();
            let a_f = tf * tf / self.s2_f;
            let r_f = (1.0 - 2.0 * y.unsigned_abs() as f64) / (2.0 * self.scale as f64);
            let exact = || ExpArg { a: t.mul(&t).div(&self.s2), b: self.b.clone(), r: self.r_exact(y) };
            if bernoulli_exp_neg((a_f, self.b_f, r_f), exact, rng) {
                return k;
            }
        }
    }

    fn r_exact(&self, y: i64) -> Ratio {
        Ratio::frac(1 - 2 * y.unsigned_abs() as i128, 2 * self.scale as i128)
    }

    /// Exact two-sided discrete Laplace: `Pr[y] ~ exp(-|y| / L)`.
    fn laplace<R: RngCore + ?Sized>(&self, rng: &mut R) -> i64 {
        let l = self.scale;
        loop {
            let u = if l == 1 { 0 } else { rng.gen_range(0..l) };
            if u > 0 {
                let keep = bernoulli_exp_neg(
                    (0.0, 0.0, u as f64 / l as f64),
                    || ExpArg::rational(Ratio::frac(u as i128, l as i128)),
                    rng,
                );
                if !keep {
                    continue;
                }
            }
            let mut v = 0i64;
            while bernoulli_exp_neg((0.0, 0.0, 1.0), || ExpArg::rational(Ratio::int(1)), rng) {
                v += 1;
            }
            let x = u + l * v;
            let negative = rng.next_u32() & 1 == 1;
            if negative && x == 0 {
                continue;
            }
            return if negative { -x } else { x };
        }
    }
}
