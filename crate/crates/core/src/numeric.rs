//! Small numerical utilities shared by every module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::real::rational_to_f64;

/// `(sqrt(5) - 1) / 2` to double precision.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Distance from `x` to the nearest integer, in `[0, 1/2]`.
pub fn torus_norm(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Signed distance to the nearest integer, in `[-1/2, 1/2]`.
pub fn signed_torus(x: f64) -> f64 {
    x - x.round()
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// `x` reduced to `[0, 2)`.
pub fn mod2(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).floor();
    if r >= 2.0 {
        0.0
    } else {
        r
    }
}

/// A rotation number split as `hi + lo`, where `hi` carries 26 fractional
/// bits. For `|j| < 2^26` the product `j * hi` is exact in `f64`, so the
/// orbit `theta + j * alpha (mod 1)` keeps full relative accuracy far past
/// the point where the naive product loses digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    hi: f64,
    lo: f64,
}

const SPLIT: f64 = 67_108_864.0; // 2^26

impl Rotation {
    pub fn new(alpha: f64) -> Self {
        let hi = (alpha * SPLIT).round() / SPLIT;
        Rotation { hi, lo: alpha - hi }
    }

    pub fn from_rational(alpha: &BigRational) -> Self {
        let scale = BigRational::from_integer(BigInt::one() << 26usize);
        let hi_r = (alpha * &scale).round() / &scale;
        let hi = rational_to_f64(&hi_r);
        let lo = rational_to_f64(&(alpha - hi_r));
        Rotation { hi, lo }
    }

    pub fn alpha(&self) -> f64 {
        self.hi + self.lo
    }

    /// `frac(j * alpha)`.
    pub fn multiple(&self, j: i64) -> f64 {
        let a = frac(j as f64 * self.hi);
        frac(a + j as f64 * self.lo)
    }

    /// `frac(theta + j * alpha)` in `[0, 1)`.
    pub fn phase(&self, theta: f64, j: i64) -> f64 {
        frac(frac(theta) + self.multiple(j))
    }

    /// `theta + j * alpha` reduced to `[0, 2)`, the period of `cos(pi x)`.
    pub fn phase2(&self, theta: f64, j: i64) -> f64 {
        let a = mod2(j as f64 * self.hi);
        mod2(mod2(theta) + mod2(a + j as f64 * self.lo))
    }
}

/// Deterministic equidistributed phases `theta0 + k * golden (mod 1)`.
pub fn weyl_phases(theta0: f64, count: usize) -> Vec<f64> {
    let rot = Rotation::new(GOLDEN);
    (0..count).map(|k| rot.phase(theta0, k as i64)).collect()
}

/// Mean and jackknife standard error of the mean.
pub fn mean_and_jackknife(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    // the jackknife of the mean reduces to the classical standard error
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Ordinary least-squares line `y = a + b x`; returns `(a, b, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some((a, b, r2))
}

/// Nearest half-integer to `x` and the distance to it.
pub fn snap_half_integer(x: f64) -> (f64, f64) {
    let snapped = (2.0 * x).round() / 2.0;
    (snapped, (x - snapped).abs())
}
