//! Exact rational enclosures of real numbers.
//!
//! A [`BigReal`] is a closed interval `[lo, hi]` with rational endpoints that
//! is known to contain the number it stands for. Point intervals are exact.
//! Every comparison that matters downstream (continued-fraction digits,
//! torus norms, resonance tests) is decided on both endpoints, so a result
//! is either certified or reported as undecidable at the given precision.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigReal {
    lo: BigRational,
    hi: BigRational,
    precision_bits: Option<u32>,
}

impl BigReal {
    pub fn exact(value: BigRational) -> Self {
        BigReal {
            lo: value.clone(),
            hi: value,
            precision_bits: None,
        }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// The exact dyadic rational carried by an `f64`.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Self::exact)
    }

    /// Enclosure with explicit endpoints; swaps them if given out of order.
    pub fn enclose(a: BigRational, b: BigRational, precision_bits: u32) -> Self {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        BigReal {
            lo,
            hi,
            precision_bits: Some(precision_bits),
        }
    }

    /// `sqrt(n)` enclosed between consecutive multiples of `2^-bits`.
    pub fn sqrt_of(n: u64, bits: u32) -> Self {
        let scaled = BigUint::from(n) << (2 * bits as usize);
        let root = scaled.sqrt();
        let den = BigInt::one() << bits as usize;
        let lo = BigRational::new(BigInt::from(root.clone()), den.clone());
        let hi = if &root * &root == scaled {
            lo.clone()
        } else {
            BigRational::new(BigInt::from(root + 1u32), den)
        };
        BigReal {
            lo,
            hi,
            precision_bits: Some(bits),
        }
    }

    /// `(sqrt(5) - 1) / 2`, the golden-mean frequency.
    pub fn golden(bits: u32) -> Self {
        Self::sqrt_of(5, bits + 2)
            .add_rational(&-BigRational::one())
            .scale(&BigRational::new(BigInt::one(), BigInt::from(2)))
            .with_precision(bits)
    }

    /// `sqrt(2) - 1`.
    pub fn silver(bits: u32) -> Self {
        Self::sqrt_of(2, bits + 1)
            .add_rational(&-BigRational::one())
            .with_precision(bits)
    }

    /// Parses `"p/q"`, a decimal literal, or one of the named constants
    /// `golden` and `silver`. Literals are exact.
    pub fn parse(text: &str, bits: u32) -> Option<Self> {
        let s = text.trim();
        match s {
            "golden" => return Some(Self::golden(bits)),
            "silver" => return Some(Self::silver(bits)),
            _ => {}
        }
        if let Some((num, den)) = s.split_once('/') {
            let num: BigInt = num.trim().parse().ok()?;
            let den: BigInt = den.trim().parse().ok()?;
            if den.is_zero() {
                return None;
            }
            return Some(Self::exact(BigRational::new(num, den)));
        }
        parse_decimal(s).map(Self::exact)
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn precision_bits(&self) -> Option<u32> {
        self.precision_bits
    }

    pub fn mid(&self) -> BigRational {
        if self.is_exact() {
            self.lo.clone()
        } else {
            (&self.lo + &self.hi) / BigInt::from(2)
        }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.mid())
    }

    /// Outward rounding of both endpoints onto the grid `2^-bits Z`.
    pub fn with_precision(&self, bits: u32) -> Self {
        let scale = BigInt::one() << bits as usize;
        let lo = (&self.lo * &scale).floor() / &scale;
        let hi = (&self.hi * &scale).ceil() / &scale;
        BigReal {
            lo,
            hi,
            precision_bits: Some(bits),
        }
    }

    pub fn add_rational(&self, r: &BigRational) -> Self {
        BigReal {
            lo: &self.lo + r,
            hi: &self.hi + r,
            precision_bits: self.precision_bits,
        }
    }

    pub fn add(&self, other: &BigReal) -> Self {
        BigReal {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
            precision_bits: min_bits(self.precision_bits, other.precision_bits),
        }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        let a = &self.lo * r;
        let b = &self.hi * r;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        BigReal {
            lo,
            hi,
            precision_bits: self.precision_bits,
        }
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        self.scale(&BigRational::from_integer(k.clone()))
    }

    /// Enclosure of the distance to the nearest integer, or `None` when the
    /// interval straddles a half-integer (the nearest integer is undecided).
    pub fn torus_norm(&self) -> Option<BigReal> {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let n_lo = (&self.lo + &half).floor();
        let n_hi = (&self.hi + &half).floor();
        if n_lo != n_hi {
            return None;
        }
        let d_lo = &self.lo - &n_lo;
        let d_hi = &self.hi - &n_lo;
        let (lo, hi) = if !d_lo.is_positive() && !d_hi.is_negative() {
            let m = if d_lo.abs() > d_hi.abs() {
                d_lo.abs()
            } else {
                d_hi.abs()
            };
            (BigRational::zero(), m)
        } else {
            let (a, b) = (d_lo.abs(), d_hi.abs());
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        };
        Some(BigReal {
            lo,
            hi,
            precision_bits: self.precision_bits,
        })
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.17e}", self.to_f64())
    }
}

fn min_bits(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let negative = mantissa.starts_with('-');
    let digits = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    if !all.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut num: BigInt = if all.is_empty() {
        BigInt::zero()
    } else {
        all.parse().ok()?
    };
    if negative {
        num = -num;
    }
    let shift = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if shift >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-shift) as usize))
    })
}

/// Correctly scaled conversion that survives numerators and denominators
/// far beyond the `f64` range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let num = r.numer();
    let den = r.denom();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    if nb < 1000 && db < 1000 {
        if let Some(v) = r.to_f64() {
            return v;
        }
    }
    // keep ~64 significant bits of each side
    let ns = (nb - 64).max(0);
    let ds = (db - 64).max(0);
    let n = (num >> ns as usize).to_f64().unwrap_or(0.0);
    let d = (den >> ds as usize).to_f64().unwrap_or(1.0);
    let e = ns - ds;
    (n / d) * 2f64.powi(e.clamp(-2000, 2000) as i32)
}

/// Natural logarithm of a positive big integer.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().map(f64::ln).unwrap_or(f64::INFINITY);
    }
    let shift = bits - 64;
    let top = (x >> shift as usize).to_f64().unwrap_or(0.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational; `-inf` for zero.
pub fn ln_rational(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    ln_biguint(num) - ln_biguint(den)
}

/// Signed distance from `r` to the nearest integer, in `[-1/2, 1/2)`.
pub fn signed_frac_dist(r: &BigRational) -> BigRational {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let n = (r + &half).floor();
    r - n
}

pub fn biguint_to_bigint(x: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x.clone())
}

/// `x mod m` for a nonnegative result.
pub fn rem_euclid_big(x: &BigInt, m: &BigInt) -> BigInt {
    x.mod_floor(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_enclosure_contains_root() {
        let r = BigReal::sqrt_of(2, 64);
        let lo = r.lo().clone();
        let hi = r.hi().clone();
        assert!(&lo * &lo < BigRational::from_integer(2.into()));
        assert!(&hi * &hi > BigRational::from_integer(2.into()));
        assert!(r.width() <= BigRational::new(1.into(), BigInt::one() << 64));
    }

    #[test]
    fn perfect_square_is_exact() {
        assert!(BigReal::sqrt_of(9, 32).is_exact());
    }

    #[test]
    fn parse_forms() {
        let a = BigReal::parse("1/3", 64).unwrap();
        assert_eq!(a.mid(), BigRational::new(1.into(), 3.into()));
        let b = BigReal::parse("0.125", 64).unwrap();
        assert_eq!(b.mid(), BigRational::new(1.into(), 8.into()));
        let c = BigReal::parse("-2.5e-1", 64).unwrap();
        assert_eq!(c.mid(), BigRational::new((-1).into(), 4.into()));
        assert!(BigReal::parse("abc", 64).is_none());
        assert!(BigReal::parse("1/0", 64).is_none());
        let g = BigReal::parse("golden", 128).unwrap();
        assert!((g.to_f64() - 0.618_033_988_749_894_8).abs() < 1e-15);
    }

    #[test]
    fn torus_norm_enclosure() {
        let x = BigReal::from_ratio(7, 4);
        let n = x.torus_norm().unwrap();
        assert_eq!(n.mid(), BigRational::new(1.into(), 4.into()));
        let straddle = BigReal::enclose(
            BigRational::new(49.into(), 100.into()),
            BigRational::new(51.into(), 100.into()),
            8,
        );
        assert!(straddle.torus_norm().is_none());
    }

    #[test]
    fn huge_rational_conversion() {
        let big = BigInt::one() << 3000usize;
        let r = BigRational::new(big.clone() * 3, big);
        assert!((rational_to_f64(&r) - 3.0).abs() < 1e-15);
        let ln = ln_biguint(&(BigUint::one() << 5000usize));
        assert!((ln - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }
}
