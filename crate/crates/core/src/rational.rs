//! Exact-rational helpers: conversions, parsing, and certified logarithm bounds.

use num::bigint::Sign;
use num::{BigInt, BigRational, BigUint, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn from_uint(v: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from_biguint(Sign::Plus, v.clone()))
}

pub fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Parses `a/b`, `a`, or a finite decimal such as `0.9`.
pub fn parse(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::InvalidInput(format!("`{text}` is not a rational number"));
    if let Some((a, b)) = t.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let w: BigInt = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let f: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num::pow(BigInt::from(10), frac.len());
        let mag = w.abs() * &scale + f;
        let v = BigRational::new(mag, scale);
        return Ok(if neg { -v } else { v });
    }
    let a: BigInt = t.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(a))
}

fn big_to_f64_scaled(v: &BigInt) -> (f64, i64) {
    let bits = v.bits() as i64;
    let shift = (bits - 60).max(0);
    let top = v >> (shift as usize);
    (top.to_f64().unwrap_or(0.0), shift)
}

/// Nearest `f64` (may be 0 or infinite for extreme magnitudes).
pub fn to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let (n, ns) = big_to_f64_scaled(r.numer());
    let (d, ds) = big_to_f64_scaled(r.denom());
    (n / d) * 2f64.powi((ns - ds).clamp(i32::MIN as i64, i32::MAX as i64) as i32)
}

/// `log2(r)` as an `f64` for positive `r`, accurate even when `r` itself
/// underflows `f64`.
pub fn log2(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "log2 of a nonpositive rational");
    let (n, ns) = big_to_f64_scaled(r.numer());
    let (d, ds) = big_to_f64_scaled(r.denom());
    n.log2() - d.log2() + (ns - ds) as f64
}

pub fn pow(base: &BigRational, exp: usize) -> BigRational {
    num::pow(base.clone(), exp)
}

pub fn min(a: BigRational, b: BigRational) -> BigRational {
    if a <= b {
        a
    } else {
        b
    }
}

/// Floor of a nonnegative rational.
pub fn floor_u64(r: &BigRational) -> u64 {
    r.floor().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// Closed interval `[lo, hi]` of rationals containing a real number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn exact(v: BigRational) -> Self {
        Self { lo: v.clone(), hi: v }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    /// Scales by an exact rational of either sign.
    pub fn scale(&self, c: &BigRational) -> Interval {
        if c.is_negative() {
            Interval {
                lo: &self.hi * c,
                hi: &self.lo * c,
            }
        } else {
            Interval {
                lo: &self.lo * c,
                hi: &self.hi * c,
            }
        }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

/// Certified enclosure of `ln(x)` for rational `x` in `[1, 2]`, using
/// `ln x = 2 atanh(z)`, `z = (x-1)/(x+1) <= 1/3`.
fn ln_near_one(x: &BigRational, terms: usize) -> Interval {
    let z = (x - BigRational::one()) / (x + BigRational::one());
    let z2 = &z * &z;
    let mut power = z.clone();
    let mut sum = BigRational::zero();
    for k in 0..terms {
        sum += &power / BigRational::from_integer(BigInt::from(2 * k + 1));
        power = &power * &z2;
    }
    // Remaining terms are bounded by power / (1 - z^2) / (2*terms + 1).
    let tail = &power
        / ((BigRational::one() - &z2) * BigRational::from_integer(BigInt::from(2 * terms + 1)));
    let two = int(2);
    Interval {
        lo: &sum * &two,
        hi: (&sum + tail) * two,
    }
}

/// Certified enclosure of `ln(p)` for an integer `p >= 1`, with width at most ~`2^-150`.
pub fn ln_int(p: u64) -> Interval {
    assert!(p >= 1);
    if p == 1 {
        return Interval::exact(BigRational::zero());
    }
    const TERMS: usize = 48;
    let ln2 = ln_near_one(&int(2), TERMS);
    let shift = 63 - p.leading_zeros() as u64;
    let rest = ratio(BigInt::from(p), BigInt::from(1u64) << shift);
    ln_near_one(&rest, TERMS).add(&ln2.scale(&int(shift)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("1/10").unwrap(), ratio(1, 10));
        assert_eq!(parse("0.9").unwrap(), ratio(9, 10));
        assert_eq!(parse("3").unwrap(), int(3));
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
    }

    #[test]
    fn f64_conversion_handles_huge_values() {
        let tiny = pow(&ratio(1, 3), 2000);
        assert!((log2(&tiny) - (-2000.0 * 3f64.log2())).abs() < 1e-6);
        assert_eq!(to_f64(&ratio(3, 4)), 0.75);
    }

    #[test]
    fn ln_enclosures_contain_float_values() {
        for p in [2u64, 3, 5, 7, 10, 100] {
            let iv = ln_int(p);
            let (lo, hi) = (to_f64(&iv.lo), to_f64(&iv.hi));
            let x = (p as f64).ln();
            assert!(lo <= x + 1e-12 && x - 1e-12 <= hi, "p={p}: [{lo}, {hi}] vs {x}");
            assert!(to_f64(&iv.width()) < 1e-30);
        }
    }
}
