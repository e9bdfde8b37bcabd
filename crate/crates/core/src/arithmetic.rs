//! Continued fractions, torus norms and the arithmetic indices of a
//! frequency/phase pair.
//!
//! The frequency is carried by its exact coefficients and big-integer
//! convergents. Every quantity that depends on `q_n * alpha` is evaluated
//! in exact rational arithmetic and converted to `f64` only at the end, so
//! `beta_n` and `delta_n` stay meaningful long after `q_n` leaves the range
//! of a double.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::numeric::{signed_torus, Rotation};
use crate::real::{biguint_to_bigint, ln_biguint, ln_rational, rational_to_f64, signed_frac_dist, BigReal};

/// Default ceiling on the size of a single big integer built by
/// [`build_liouville`].
pub const DEFAULT_DIGIT_BUDGET_BITS: u64 = 1 << 20;

/// Gap kept between `delta_target` and `beta_hat` in [`build_resonant_phase`].
pub const RESONANCE_MARGIN: f64 = 0.05;

/// Largest `|l|` explored by [`find_theta_minimal`].
pub const ELL_CAP: f64 = 1.0e6;

/// Largest `|j|` explored in the `a_{n+1} >= 4` minimality branch.
pub const J_CAP: u64 = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithmeticError {
    #[error("precision exhausted after {certified} certified coefficients")]
    PrecisionExhausted { certified: usize },
    #[error("frequency is not inside (0, 1)")]
    NotInUnitInterval,
    #[error("empty coefficient list")]
    EmptyCoefficients,
    #[error("index {requested} exceeds available depth {available}")]
    DepthExceeded { requested: usize, available: usize },
    #[error("phase lies on the pole orbit: |theta - 1/2 - {k} alpha| below tolerance")]
    ForbiddenPhase { k: i64 },
    #[error("coefficient a_{at} exceeds the digit budget of {budget_bits} bits")]
    OverflowBudget { at: usize, budget_bits: u64 },
    #[error("delta target {delta_target} unreachable with beta_hat {beta_hat}")]
    TargetUnreachable { delta_target: f64, beta_hat: f64 },
    #[error(
        "no theta-minimal point: {cond2_failures} range, {cond3_failures} closeness, {cond4_failures} minimality failures"
    )]
    NotFound {
        cond2_failures: usize,
        cond3_failures: usize,
        cond4_failures: usize,
        ell_cap_hit: bool,
    },
    #[error("|l| = {ell} exceeds q_(n+1)/(6 q_n)")]
    EllOutOfRange { ell: i64 },
    #[error("convergent bracket violated at n = {n}")]
    BracketViolated { n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, ArithmeticError>;

/// A frequency given by coefficients `a_1..a_N` and its convergents.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedFraction {
    coeffs: Vec<BigUint>,
    p: Vec<BigUint>,
    q: Vec<BigUint>,
    value: BigReal,
    precision_bits: u32,
    rational_truncation: bool,
}

impl ContinuedFraction {
    fn from_parts(coeffs: Vec<BigUint>, value: BigReal, precision_bits: u32, rational_truncation: bool) -> Self {
        let n = coeffs.len();
        let mut p = Vec::with_capacity(n + 1);
        let mut q = Vec::with_capacity(n + 1);
        p.push(BigUint::zero());
        q.push(BigUint::one());
        if n >= 1 {
            p.push(BigUint::one());
            q.push(coeffs[0].clone());
        }
        for k in 2..=n {
            let a = &coeffs[k - 1];
            p.push(a * &p[k - 1] + &p[k - 2]);
            q.push(a * &q[k - 1] + &q[k - 2]);
        }
        ContinuedFraction {
            coeffs,
            p,
            q,
            value,
            precision_bits,
            rational_truncation,
        }
    }

    /// Number of stored coefficients `N`.
    pub fn depth(&self) -> usize {
        self.coeffs.len()
    }

    /// `a_k` for `1 <= k <= N`.
    pub fn coefficient(&self, k: usize) -> &BigUint {
        &self.coeffs[k - 1]
    }

    pub fn coefficients(&self) -> &[BigUint] {
        &self.coeffs
    }

    pub fn p(&self, k: usize) -> &BigUint {
        &self.p[k]
    }

    pub fn q(&self, k: usize) -> &BigUint {
        &self.q[k]
    }

    pub fn q_u64(&self, k: usize) -> Option<u64> {
        self.q.get(k).and_then(|x| x.to_u64())
    }

    pub fn ln_q(&self, k: usize) -> f64 {
        ln_biguint(&self.q[k])
    }

    pub fn value(&self) -> &BigReal {
        &self.value
    }

    /// The exact rational representative used for all derived quantities.
    pub fn alpha_rational(&self) -> BigRational {
        self.value.mid()
    }

    pub fn alpha_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn rotation(&self) -> Rotation {
        Rotation::from_rational(&self.alpha_rational())
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// True when the value is the finite continued fraction `p_N / q_N`.
    pub fn is_rational_truncation(&self) -> bool {
        self.rational_truncation
    }

    /// Largest `k` for which `q_k` is defined together with `q_{k+1}`.
    fn require_next(&self, n: usize) -> Result<()> {
        if n + 1 > self.depth() {
            Err(ArithmeticError::DepthExceeded {
                requested: n + 1,
                available: self.depth(),
            })
        } else {
            Ok(())
        }
    }
}

/// Expands `alpha` into `depth` certified coefficients.
///
/// The input is first rounded outward to the grid `2^-precision_bits`; a
/// coefficient is accepted only when both endpoints of the enclosure agree
/// on it.
pub fn cf_expand(alpha: &BigReal, depth: usize, precision_bits: u32) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(ArithmeticError::InvalidArgument("depth must be at least 1".into()));
    }
    let x = alpha.with_precision(precision_bits);
    let zero = BigRational::zero();
    let one = BigRational::one();
    if x.lo() <= &zero || x.hi() >= &one {
        return Err(ArithmeticError::NotInUnitInterval);
    }
    let mut lo = x.lo().clone();
    let mut hi = x.hi().clone();
    let mut coeffs = Vec::with_capacity(depth);
    while coeffs.len() < depth {
        if !lo.is_positive() {
            break;
        }
        let inv_lo = hi.recip();
        let inv_hi = lo.recip();
        let a = inv_lo.floor();
        if inv_hi.floor() != a || a.is_zero() {
            break;
        }
        lo = &inv_lo - &a;
        hi = &inv_hi - &a;
        coeffs.push(a.to_integer().magnitude().clone());
    }
    if coeffs.len() < depth {
        return Err(ArithmeticError::PrecisionExhausted {
            certified: coeffs.len(),
        });
    }
    Ok(ContinuedFraction::from_parts(coeffs, x, precision_bits, false))
}

/// Builds the finite continued fraction `[0; a_1, ..., a_N]`.
///
/// The value is the exact rational `p_N / q_N`, flagged as a truncation.
pub fn cf_from_coeffs(coeffs: &[BigUint], precision_bits: u32) -> Result<ContinuedFraction> {
    if coeffs.is_empty() {
        return Err(ArithmeticError::EmptyCoefficients);
    }
    if coeffs.iter().any(|a| a.is_zero()) {
        return Err(ArithmeticError::InvalidArgument("coefficients must be positive".into()));
    }
    let mut cf = ContinuedFraction::from_parts(coeffs.to_vec(), BigReal::from_integer(0), precision_bits, true);
    let n = cf.depth();
    let value = BigRational::new(biguint_to_bigint(&cf.p[n]), biguint_to_bigint(&cf.q[n]));
    cf.value = BigReal::exact(value);
    Ok(cf)
}

pub fn cf_from_u64(coeffs: &[u64], precision_bits: u32) -> Result<ContinuedFraction> {
    let big: Vec<BigUint> = coeffs.iter().map(|&a| BigUint::from(a)).collect();
    cf_from_coeffs(&big, precision_bits)
}

pub use crate::numeric::torus_norm;

fn qn_alpha_enclosure(cf: &ContinuedFraction, n: usize) -> Result<BigReal> {
    let qn = biguint_to_bigint(cf.q(n));
    cf.value
        .mul_int(&qn)
        .torus_norm()
        .ok_or(ArithmeticError::PrecisionExhausted { certified: n })
}

/// `||q_n alpha||`, certified against `1/(2 q_{n+1}) <= . <= 1/q_{n+1}`.
///
/// The bracket is asserted for `n >= 1`, and for `n = 0` when `a_1 >= 2`;
/// with `a_1 = 1` the lower bound fails at `n = 0` for every frequency.
pub fn qn_alpha_norm(cf: &ContinuedFraction, n: usize) -> Result<BigReal> {
    cf.require_next(n)?;
    let norm = qn_alpha_enclosure(cf, n)?;
    if n == 0 && cf.coefficient(1).is_one() {
        return Ok(norm);
    }
    let q_next = biguint_to_bigint(cf.q(n + 1));
    let upper = BigRational::new(BigInt::one(), q_next.clone());
    let lower = BigRational::new(BigInt::one(), q_next * 2);
    let inside = norm.lo() >= &lower && norm.hi() <= &upper;
    let outside = norm.hi() < &lower || norm.lo() > &upper;
    if inside {
        Ok(norm)
    } else if outside {
        Err(ArithmeticError::BracketViolated { n })
    } else {
        Err(ArithmeticError::PrecisionExhausted { certified: n })
    }
}

/// `beta_n` and `delta_n` at one scale.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleRecord {
    pub n: usize,
    pub q_n: BigUint,
    pub beta: f64,
    /// `(ln||q_n(theta-1/2)|| - ln||q_n alpha||) / q_n`.
    pub delta: f64,
    /// `(ln q_{n+1} + ln||q_n(theta-1/2)||) / q_n`, recorded for comparison.
    pub delta_alt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArithmeticProfile {
    pub scales: Vec<ScaleRecord>,
    pub beta_hat: f64,
    pub delta_hat: f64,
    pub depth: usize,
    pub n_min: usize,
}

impl ArithmeticProfile {
    pub fn beta_seq(&self) -> Vec<f64> {
        self.scales.iter().map(|s| s.beta).collect()
    }

    pub fn delta_seq(&self) -> Vec<f64> {
        self.scales.iter().map(|s| s.delta).collect()
    }

    pub fn scale(&self, n: usize) -> Option<&ScaleRecord> {
        self.scales.get(n)
    }

    /// A profile with prescribed truncated indices and no per-scale data.
    pub fn synthetic(beta_hat: f64, delta_hat: f64) -> Self {
        ArithmeticProfile {
            scales: Vec::new(),
            beta_hat,
            delta_hat,
            depth: 0,
            n_min: 0,
        }
    }
}

/// Rejects phases on the pole orbit `1/2 + alpha Z + Z` up to `|k| <= k_max`.
pub fn check_phase_allowed(cf: &ContinuedFraction, theta: &BigReal, k_max: u64) -> Result<()> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let x = theta.mid() - &half;
    let alpha = cf.alpha_rational();
    let rot = cf.rotation();
    let x_f = rational_to_f64(&signed_frac_dist(&x));
    let bits = cf.precision_bits().max(2);
    let tol = BigRational::new(BigInt::one(), BigInt::one() << (bits / 2) as usize);
    let k_max = k_max.min(100_000) as i64;
    for k in -k_max..=k_max {
        let approx = signed_torus(x_f - rot.multiple(k)).abs();
        if approx < 1e-6 || k == 0 {
            let exact = signed_frac_dist(&(&x - &alpha * BigInt::from(k))).abs();
            if exact < tol {
                return Err(ArithmeticError::ForbiddenPhase { k });
            }
        }
    }
    Ok(())
}

fn scale_record(cf: &ContinuedFraction, x: &BigRational, n: usize) -> Result<ScaleRecord> {
    let qn = biguint_to_bigint(cf.q(n));
    let qn_f = rational_to_f64(&BigRational::from_integer(qn.clone()));
    let ln_q_next = cf.ln_q(n + 1);
    let beta = ln_q_next / qn_f;
    let qx = signed_frac_dist(&(x * &qn)).abs();
    let ln_qx = ln_rational(&qx);
    let ln_qa = ln_rational(&qn_alpha_enclosure(cf, n)?.mid());
    Ok(ScaleRecord {
        n,
        q_n: cf.q(n).clone(),
        beta,
        delta: (ln_qx - ln_qa) / qn_f,
        delta_alt: (ln_q_next + ln_qx) / qn_f,
    })
}

/// Per-scale `beta_n`, `delta_n` for `0 <= n <= depth` and their maxima over
/// `[n_min, depth]`.
pub fn arithmetic_profile(
    cf: &ContinuedFraction,
    theta: &BigReal,
    depth: usize,
    n_min: usize,
) -> Result<ArithmeticProfile> {
    cf.require_next(depth)?;
    if n_min > depth {
        return Err(ArithmeticError::InvalidArgument(format!("n_min {n_min} exceeds depth {depth}")));
    }
    let k_max = cf.q_u64(depth).unwrap_or(u64::MAX);
    check_phase_allowed(cf, theta, k_max)?;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let x = theta.mid() - half;
    let scales = (0..=depth)
        .map(|n| scale_record(cf, &x, n))
        .collect::<Result<Vec<_>>>()?;
    let window = &scales[n_min..=depth];
    let beta_hat = window.iter().map(|s| s.beta).fold(0.0, f64::max);
    let delta_hat = window.iter().map(|s| s.delta).filter(|d| d.is_finite()).fold(0.0, f64::max);
    Ok(ArithmeticProfile {
        scales,
        beta_hat,
        delta_hat,
        depth,
        n_min,
    })
}

/// A Liouville-type frequency together with the `beta_n` it realises.
#[derive(Clone, Debug)]
pub struct LiouvilleFrequency {
    pub cf: ContinuedFraction,
    pub achieved_beta: Vec<f64>,
}

pub fn build_liouville(beta_target: f64, depth: usize) -> Result<LiouvilleFrequency> {
    build_liouville_with_budget(beta_target, depth, DEFAULT_DIGIT_BUDGET_BITS)
}

/// `a_1 = 1`, then `a_{n+1} = max(1, ceil(e^{beta q_n} / q_n))`.
///
/// Coefficients past `2^53` are formed from a 53-bit mantissa and a binary
/// shift.
pub fn build_liouville_with_budget(beta_target: f64, depth: usize, budget_bits: u64) -> Result<LiouvilleFrequency> {
    if !(beta_target > 0.0 && beta_target <= 10.0) {
        return Err(ArithmeticError::InvalidArgument("beta_target must lie in (0, 10]".into()));
    }
    if depth < 3 {
        return Err(ArithmeticError::InvalidArgument("depth must be at least 3".into()));
    }
    let mut coeffs = vec![BigUint::one()];
    let mut q_prev = BigUint::one();
    let mut q_cur = BigUint::one();
    for n in 1..depth {
        if q_cur.bits() > 60 {
            return Err(ArithmeticError::OverflowBudget {
                at: n + 1,
                budget_bits,
            });
        }
        let qf = q_cur.to_f64().unwrap_or(f64::INFINITY);
        let log_a = beta_target * qf - qf.ln();
        let a = if log_a <= 0.0 {
            BigUint::one()
        } else if log_a < 36.0 {
            BigUint::from(log_a.exp().ceil() as u64)
        } else {
            let log2_a = log_a / std::f64::consts::LN_2;
            if log2_a + 1.0 > budget_bits as f64 {
                return Err(ArithmeticError::OverflowBudget {
                    at: n + 1,
                    budget_bits,
                });
            }
            let e = log2_a.floor();
            let mantissa = (2f64.powf(log2_a - e) * 2f64.powi(52)).ceil() as u64;
            (BigUint::from(mantissa) << (e as usize - 52)) + 1u32
        };
        let q_next = &a * &q_cur + &q_prev;
        if q_next.bits() > budget_bits {
            return Err(ArithmeticError::OverflowBudget {
                at: n + 1,
                budget_bits,
            });
        }
        coeffs.push(a);
        q_prev = std::mem::replace(&mut q_cur, q_next);
    }
    let log2_q = q_cur.bits() as u32;
    let bits = 256u32.max(4 * log2_q);
    let cf = cf_from_coeffs(&coeffs, bits)?;
    let achieved_beta = (0..depth).map(|n| cf.ln_q(n + 1) / cf.q(n).to_f64().unwrap_or(f64::INFINITY)).collect();
    Ok(LiouvilleFrequency { cf, achieved_beta })
}

/// A phase tuned so that `delta_n` hits a target on a subsequence.
#[derive(Clone, Debug)]
pub struct ResonantPhase {
    pub theta: BigReal,
    /// Scales whose `||q_n(theta-1/2)||` was set directly.
    pub targeted: Vec<usize>,
    /// Scales in `[n_min, depth]` with `|delta_n - target| <= 0.1`.
    pub subsequence: Vec<usize>,
    pub achieved: Vec<f64>,
    pub profile: ArithmeticProfile,
}

/// Starts from `theta = alpha/3` and, scale by scale in increasing `q_n`,
/// moves `theta` by the smallest amount that makes the signed distance
/// `q_n(theta-1/2) mod 1` equal to `min(1/2, e^{delta q_n} ||q_n alpha||)`.
pub fn build_resonant_phase(cf: &ContinuedFraction, delta_target: f64, depth: usize) -> Result<ResonantPhase> {
    if !(delta_target >= 0.0) {
        return Err(ArithmeticError::InvalidArgument("delta_target must be nonnegative".into()));
    }
    cf.require_next(depth)?;
    let n_min = (depth / 2).max(1).min(depth);
    let betas: Vec<f64> = (0..=depth)
        .map(|n| cf.ln_q(n + 1) / cf.q(n).to_f64().unwrap_or(f64::INFINITY))
        .collect();
    let beta_hat = betas[n_min..=depth].iter().cloned().fold(0.0, f64::max);
    if delta_target > 0.0 && delta_target > beta_hat - RESONANCE_MARGIN {
        return Err(ArithmeticError::TargetUnreachable { delta_target, beta_hat });
    }
    let alpha = cf.alpha_rational();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut x = &alpha / BigInt::from(3) - &half;
    let mut targeted = Vec::new();
    for n in n_min..=depth {
        if betas[n] < delta_target + RESONANCE_MARGIN {
            continue;
        }
        let qn = biguint_to_bigint(cf.q(n));
        let qn_f = cf.q(n).to_f64().unwrap_or(f64::INFINITY);
        let ln_qa = ln_rational(&qn_alpha_enclosure(cf, n)?.mid());
        let ln_t = delta_target * qn_f + ln_qa;
        let t = if ln_t >= -std::f64::consts::LN_2 {
            half.clone()
        } else {
            BigRational::from_float(ln_t.exp()).unwrap_or_else(BigRational::zero)
        };
        let s = signed_frac_dist(&(&x * &qn));
        let up = signed_frac_dist(&(&t - &s));
        let down = signed_frac_dist(&(-&t - &s));
        let step = if up.abs() <= down.abs() { up } else { down };
        x += step / qn;
        targeted.push(n);
    }
    let theta_r = &x + &half;
    let theta_r = &theta_r - theta_r.floor();
    let theta = BigReal::exact(theta_r);
    let profile = arithmetic_profile(cf, &theta, depth, n_min)?;
    let mut subsequence = Vec::new();
    let mut achieved = Vec::new();
    for rec in &profile.scales[n_min..=depth] {
        if (rec.delta - delta_target).abs() <= 0.1 {
            subsequence.push(rec.n);
            achieved.push(rec.delta);
        }
    }
    if subsequence.is_empty() {
        return Err(ArithmeticError::TargetUnreachable { delta_target, beta_hat });
    }
    Ok(ResonantPhase {
        theta,
        targeted,
        subsequence,
        achieved,
        profile,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinimalityBranch {
    /// `a_{n+1} >= 4`: minimality along the whole `j` ladder.
    LargeQuotient,
    /// `a_{n+1} <= 3`: minimality of `m` alone.
    SmallQuotient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaMinimalPoint {
    pub m_n: i64,
    pub ell_n: i64,
    pub scale_n: usize,
    /// `||theta - 1/2 + (m_n + l_n q_n) alpha||`.
    pub witness_norm: f64,
    pub branch: MinimalityBranch,
    pub ell_cap_hit: bool,
    pub j_range_truncated: bool,
}

/// Scale data shared by the theta-minimal search and its re-check.
struct MinimalSetup {
    q: i64,
    rot: Rotation,
    x_f: f64,
    s: f64,
    ell_max: f64,
    a_next: BigUint,
}

fn minimal_setup(cf: &ContinuedFraction, theta: &BigReal, n: usize) -> Result<MinimalSetup> {
    cf.require_next(n)?;
    let q = cf
        .q_u64(n)
        .filter(|&q| q <= 10_000_000)
        .ok_or_else(|| ArithmeticError::InvalidArgument("q_n too large for exhaustive search".into()))? as i64;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let x = theta.mid() - half;
    let alpha = cf.alpha_rational();
    let s_r = signed_frac_dist(&(&alpha * BigInt::from(q)));
    let s = rational_to_f64(&s_r);
    let qx = rational_to_f64(&signed_frac_dist(&(&x * BigInt::from(q))).abs());
    let ratio = qx / s.abs();
    let ell_max = (ratio + q as f64 + 0.5) / q as f64;
    Ok(MinimalSetup {
        q,
        rot: Rotation::from_rational(&alpha),
        x_f: rational_to_f64(&signed_frac_dist(&x)),
        s,
        ell_max,
        a_next: cf.coefficient(n + 1).clone(),
    })
}

/// Exhaustive search for a theta-minimal pair at scale `q_n`.
///
/// Condition (3) is `||theta - 1/2 + (m + l q_n) alpha|| < (1/2 + 1/(2q_n)) ||q_n alpha||`.
/// Ties are broken by `|m|`, then `|l|`, then nonnegative sign first.
pub fn find_theta_minimal(cf: &ContinuedFraction, theta: &BigReal, n: usize) -> Result<ThetaMinimalPoint> {
    let st = minimal_setup(cf, theta, n)?;
    let q = st.q;
    let ell_cap_hit = st.ell_max > ELL_CAP;
    let ell_search = st.ell_max.min(ELL_CAP) + 1.0;
    let thr = (0.5 + 0.5 / q as f64) * st.s.abs();
    let m_lo = -(q / 2);
    let m_hi = (q + 1) / 2 - 1;

    let ys: Vec<f64> = (m_lo..=m_hi).map(|m| signed_torus(st.x_f + st.rot.multiple(m))).collect();
    let min_y = ys.iter().map(|y| y.abs()).fold(f64::INFINITY, f64::min);

    let mut cond2 = 0usize;
    let mut cond3 = 0usize;
    let mut candidates: Vec<(i64, i64)> = Vec::new();
    for (idx, &y) in ys.iter().enumerate() {
        let m = m_lo + idx as i64;
        let span = st.s.abs() * ell_search;
        let j_lo = (y - span).floor() as i64 - 1;
        let j_hi = (y + span).ceil() as i64 + 1;
        let mut found_any = false;
        let mut found_in_range = false;
        for j in j_lo..=j_hi {
            let l0 = (j as f64 - y) / st.s;
            // also rejects the saturated casts of a huge l0
            if !(l0.abs() <= ell_search + 2.0) {
                continue;
            }
            for ell in [l0.floor() as i64 - 1, l0.floor() as i64, l0.ceil() as i64, l0.ceil() as i64 + 1] {
                if (ell as f64).abs() > ell_search {
                    continue;
                }
                if signed_torus(y + ell as f64 * st.s).abs() < thr {
                    found_any = true;
                    if (ell as f64).abs() <= st.ell_max {
                        if !candidates.contains(&(m, ell)) {
                            candidates.push((m, ell));
                        }
                        found_in_range = true;
                    } else {
                        cond2 += 1;
                    }
                }
            }
        }
        if !found_any && !found_in_range {
            cond3 += 1;
        }
    }
    candidates.sort_by_key(|&(m, l)| (m.abs(), l.abs(), m < 0, l < 0));

    let large = st.a_next >= BigUint::from(4u32);
    let branch = if large {
        MinimalityBranch::LargeQuotient
    } else {
        MinimalityBranch::SmallQuotient
    };
    let mut j_range_truncated = false;
    let mut cond4 = 0usize;
    for &(m, ell) in &candidates {
        let y = ys[(m - m_lo) as usize];
        let ok = if large {
            let (ok, truncated) = ladder_minimal(&st, y);
            j_range_truncated |= truncated;
            ok
        } else {
            y.abs() <= 20.0 * min_y
        };
        if ok {
            let witness = exact_orbit_norm(cf, theta, m + ell * q);
            return Ok(ThetaMinimalPoint {
                m_n: m,
                ell_n: ell,
                scale_n: n,
                witness_norm: witness,
                branch,
                ell_cap_hit,
                j_range_truncated,
            });
        }
        cond4 += 1;
    }
    Err(ArithmeticError::NotFound {
        cond2_failures: cond2,
        cond3_failures: cond3,
        cond4_failures: cond4,
        ell_cap_hit,
    })
}

/// Condition (4)(i): for every `|j| <= a_{n+1}/6` the point `m + j q_n` is
/// within a factor 20 of the best point in its `q_n`-window.
fn ladder_minimal(st: &MinimalSetup, y_m: f64) -> (bool, bool) {
    let j_full = (&st.a_next / 6u32).to_u64().unwrap_or(u64::MAX);
    let budget = (40_000_000 / (2 * st.q as u64).max(1)).max(1);
    let j_max = j_full.min(J_CAP).min(budget);
    let truncated = j_max < j_full;
    for j in -(j_max as i64)..=(j_max as i64) {
        let z = signed_torus(y_m + j as f64 * st.s);
        let lhs = z.abs();
        let mut best = lhs;
        for k in (1 - st.q)..st.q {
            let d = signed_torus(z + st.rot.multiple(k)).abs();
            if d < best {
                best = d;
            }
        }
        if lhs > 20.0 * best {
            return (false, truncated);
        }
    }
    (true, truncated)
}

/// `||theta - 1/2 + k alpha||` in exact arithmetic.
pub fn exact_orbit_norm(cf: &ContinuedFraction, theta: &BigReal, k: i64) -> f64 {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let v = theta.mid() - half + cf.alpha_rational() * BigInt::from(k);
    rational_to_f64(&signed_frac_dist(&v).abs())
}

/// `|cos(pi(theta + k alpha))|` in exact arithmetic up to the final sine.
pub fn exact_cos_at(cf: &ContinuedFraction, theta: &BigReal, k: i64) -> f64 {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let v = theta.mid() - half + cf.alpha_rational() * BigInt::from(k);
    let d = rational_to_f64(&signed_frac_dist(&v));
    (std::f64::consts::PI * d).sin().abs()
}

/// `c_{n,l} = |cos(pi(theta + (m_n + l q_n) alpha))|` at the theta-minimal point.
pub fn c_n_ell(cf: &ContinuedFraction, theta: &BigReal, n: usize, ell: i64) -> Result<f64> {
    cf.require_next(n)?;
    let lhs = BigUint::from(6u32) * cf.q(n) * BigUint::from(ell.unsigned_abs());
    if lhs > *cf.q(n + 1) {
        return Err(ArithmeticError::EllOutOfRange { ell });
    }
    let point = find_theta_minimal(cf, theta, n)?;
    let q = cf.q_u64(n).unwrap_or(0) as i64;
    Ok(exact_cos_at(cf, theta, point.m_n + ell * q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResonanceKind {
    Resonant,
    NonResonant,
    EvenResonant,
    NotEvenResonant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceLabel {
    /// `Resonant` or `NonResonant`: `dist(y, q_n Z) <= b_n`.
    pub kind: ResonanceKind,
    /// `EvenResonant` or `NotEvenResonant`: `dist(y, 2 q_n Z) <= 2 b_n`.
    pub even_kind: ResonanceKind,
    pub scale_n: usize,
    pub b_n: i64,
    /// True when no `tau_n q_n` integer lies in the admissible interval and
    /// `b_n = ceil(eps q_n / (2 max(L, 1)))` was used instead.
    pub tau_fallback: bool,
}

/// `b_n = tau_n q_n` with `tau_n` the largest admissible multiple of `1/q_n`.
pub fn resonance_width(q: i64, epsilon: f64, lyapunov: f64) -> (i64, bool) {
    let m = lyapunov.max(1.0);
    let upper = epsilon * q as f64 / m;
    let lower = upper / 2.0;
    let b = upper.floor() as i64;
    if b >= 1 && (b as f64) > lower {
        (b, false)
    } else {
        (lower.ceil().max(1.0) as i64, true)
    }
}

pub fn classify_site_resonance(
    y: i64,
    cf: &ContinuedFraction,
    n: usize,
    epsilon: f64,
    lyapunov: f64,
) -> Result<ResonanceLabel> {
    if !(epsilon > 0.0 && lyapunov > 0.0) {
        return Err(ArithmeticError::InvalidArgument("epsilon and L must be positive".into()));
    }
    if n > cf.depth() {
        return Err(ArithmeticError::DepthExceeded {
            requested: n,
            available: cf.depth(),
        });
    }
    let q = cf
        .q_u64(n)
        .filter(|&q| q < (1 << 60))
        .ok_or_else(|| ArithmeticError::InvalidArgument("q_n exceeds 2^60".into()))? as i64;
    let (b, fallback) = resonance_width(q, epsilon, lyapunov);
    let dist = |modulus: i64| {
        let r = y.mod_floor(&modulus);
        r.min(modulus - r)
    };
    let kind = if dist(q) <= b {
        ResonanceKind::Resonant
    } else {
        ResonanceKind::NonResonant
    };
    let even_kind = if dist(2 * q) <= 2 * b {
        ResonanceKind::EvenResonant
    } else {
        ResonanceKind::NotEvenResonant
    };
    Ok(ResonanceLabel {
        kind,
        even_kind,
        scale_n: n,
        b_n: b,
        tau_fallback: fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn golden(depth: usize) -> ContinuedFraction {
        cf_expand(&BigReal::golden(256), depth, 256).unwrap()
    }

    fn qs(cf: &ContinuedFraction, upto: usize) -> Vec<u64> {
        (1..=upto).map(|k| cf.q_u64(k).unwrap()).collect()
    }

    #[test]
    fn golden_expansion_is_all_ones() {
        let cf = golden(10);
        assert!(cf.coefficients().iter().all(|a| a.is_one()));
        assert_eq!(qs(&cf, 10), vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
        assert_eq!(cf.q_u64(0), Some(1));
    }

    #[test]
    fn silver_expansion_is_all_twos() {
        let cf = cf_expand(&BigReal::silver(256), 5, 256).unwrap();
        assert!(cf.coefficients().iter().all(|a| *a == BigUint::from(2u32)));
        assert_eq!(qs(&cf, 5), vec![2, 5, 12, 29, 70]);
    }

    #[test]
    fn near_rational_exhausts_precision() {
        let third = BigRational::new(1.into(), 3.into());
        let tiny = BigRational::new(1.into(), BigInt::one() << 200usize);
        let alpha = BigReal::exact(third + tiny);
        match cf_expand(&alpha, 10, 128) {
            Err(ArithmeticError::PrecisionExhausted { certified }) => assert!(certified < 10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expand_rejects_outside_unit_interval() {
        let x = BigReal::from_ratio(3, 2);
        assert_eq!(cf_expand(&x, 3, 64).unwrap_err(), ArithmeticError::NotInUnitInterval);
    }

    #[test]
    fn from_coeffs_examples() {
        let cf = cf_from_u64(&[1; 30], 256).unwrap();
        assert_eq!(cf.q_u64(30), Some(1_346_269));
        assert!((cf.alpha_f64() - 0.618_033_988_7).abs() < 1e-10);

        let half = cf_from_u64(&[2], 64).unwrap();
        assert!(half.is_rational_truncation());
        assert_eq!(half.alpha_rational(), BigRational::new(1.into(), 2.into()));

        let big = cf_from_u64(&[1, 1_000_000], 64).unwrap();
        assert_eq!(big.q_u64(0), Some(1));
        assert_eq!(big.q_u64(1), Some(1));
        assert_eq!(big.q_u64(2), Some(1_000_001));

        assert_eq!(cf_from_coeffs(&[], 64).unwrap_err(), ArithmeticError::EmptyCoefficients);
    }

    #[test]
    fn qn_alpha_norm_examples() {
        let cf = golden(20);
        let n1 = qn_alpha_norm(&cf, 1).unwrap().to_f64();
        assert!((n1 - 0.381_966).abs() < 1e-6);
        let n2 = qn_alpha_norm(&cf, 2).unwrap().to_f64();
        assert!((n2 - 0.236_068).abs() < 1e-6);
        assert!(matches!(
            qn_alpha_norm(&cf, 20),
            Err(ArithmeticError::DepthExceeded { .. })
        ));
    }

    #[test]
    fn profile_golden_has_small_beta() {
        let cf = golden(40);
        let theta = BigReal::parse("0.1", 256).unwrap();
        let p = arithmetic_profile(&cf, &theta, 25, 13).unwrap();
        assert!(p.beta_hat < 0.02, "beta_hat {}", p.beta_hat);
        assert!(p.delta_hat <= p.beta_hat + 0.01);
    }

    #[test]
    fn profile_forbidden_phase() {
        let cf = golden(30);
        let theta = BigReal::from_ratio(1, 2);
        assert!(matches!(
            arithmetic_profile(&cf, &theta, 10, 5),
            Err(ArithmeticError::ForbiddenPhase { k: 0 })
        ));
        // theta = 1/2 + 3 alpha also lies on the pole orbit
        let shifted = BigReal::exact(BigRational::new(1.into(), 2.into()) + cf.alpha_rational() * BigInt::from(3));
        assert!(matches!(
            arithmetic_profile(&cf, &shifted, 10, 5),
            Err(ArithmeticError::ForbiddenPhase { k: 3 })
        ));
    }

    #[test]
    fn liouville_beta_one() {
        let lf = build_liouville(1.0, 4).unwrap();
        let b = lf.achieved_beta[3];
        assert!((0.9..=1.1).contains(&b), "beta_3 = {b}");
        let theta = BigReal::parse("0.1", 256).unwrap();
        let p = arithmetic_profile(&lf.cf, &theta, 3, 3).unwrap();
        assert!((p.beta_hat - 1.0).abs() <= 0.1);
        assert!(matches!(
            build_liouville(1.0, 6),
            Err(ArithmeticError::OverflowBudget { .. })
        ));
    }

    #[test]
    fn liouville_small_beta_has_small_coefficients() {
        let lf = build_liouville(0.01, 12).unwrap();
        assert!(lf.cf.coefficients().iter().all(|a| *a <= BigUint::from(2u32)));
        for n in 10..12 {
            assert!(lf.achieved_beta[n] <= 0.05, "beta_{n} = {}", lf.achieved_beta[n]);
        }
    }

    #[test]
    fn liouville_large_beta_overflows() {
        assert!(matches!(
            build_liouville(10.0, 50),
            Err(ArithmeticError::OverflowBudget { .. })
        ));
        assert!(build_liouville(0.0, 5).is_err());
        assert!(build_liouville(1.0, 2).is_err());
    }

    #[test]
    fn resonant_phase_targets() {
        let lf = build_liouville(1.0, 4).unwrap();
        let rp = build_resonant_phase(&lf.cf, 0.5, 3).unwrap();
        assert!(!rp.subsequence.is_empty());
        for d in &rp.achieved {
            assert!((d - 0.5).abs() <= 0.1);
        }
        let g = golden(30);
        assert!(matches!(
            build_resonant_phase(&g, 0.5, 20),
            Err(ArithmeticError::TargetUnreachable { .. })
        ));
        let generic = build_resonant_phase(&g, 0.0, 24).unwrap();
        for rec in &generic.profile.scales[generic.profile.n_min..] {
            assert!(rec.delta <= 0.05, "delta_{} = {}", rec.n, rec.delta);
        }
    }

    #[test]
    fn theta_minimal_golden_small_scale() {
        let cf = golden(20);
        let theta = BigReal::parse("0.1", 256).unwrap();
        let pt = find_theta_minimal(&cf, &theta, 5).unwrap();
        let qa = qn_alpha_norm(&cf, 5).unwrap().to_f64();
        assert!(pt.witness_norm < (0.5 + 1.0 / 16.0) * qa);
        assert!(pt.m_n >= -4 && pt.m_n < 4);
    }

    #[test]
    fn theta_minimal_origin_qualifies() {
        let cf = golden(20);
        let n = 6;
        let qa = qn_alpha_norm(&cf, n).unwrap().mid();
        let theta = BigReal::exact(BigRational::new(1.into(), 2.into()) + qa / BigInt::from(4));
        let pt = find_theta_minimal(&cf, &theta, n).unwrap();
        assert_eq!((pt.m_n, pt.ell_n), (0, 0));
    }

    #[test]
    fn c_n_ell_range_and_value() {
        let cf = golden(20);
        let theta = BigReal::parse("0.1", 256).unwrap();
        assert!(matches!(
            c_n_ell(&cf, &theta, 7, 1),
            Err(ArithmeticError::EllOutOfRange { ell: 1 })
        ));
        let c0 = c_n_ell(&cf, &theta, 7, 0).unwrap();
        assert!(c0 > 0.0 && c0 < 1.0);
    }

    #[test]
    fn resonance_labels_match_brute_force() {
        let cf = golden(20);
        let n = 10;
        let q = cf.q_u64(n).unwrap() as i64;
        let first = classify_site_resonance(0, &cf, n, 0.05, 0.5).unwrap();
        let b = first.b_n;
        assert!(!first.tau_fallback);
        assert!(b as f64 > 0.05 * q as f64 / 2.0 && b as f64 <= 0.05 * q as f64);
        for y in 0..=4 * q {
            let label = classify_site_resonance(y, &cf, n, 0.05, 0.5).unwrap();
            let d1 = (0..=5).map(|k| (y - k * q).abs()).min().unwrap();
            let d2 = (0..=3).map(|k| (y - 2 * k * q).abs()).min().unwrap();
            assert_eq!(label.kind == ResonanceKind::Resonant, d1 <= b);
            assert_eq!(label.even_kind == ResonanceKind::EvenResonant, d2 <= 2 * b);
        }
        let at = classify_site_resonance(2 * q, &cf, n, 0.05, 0.5).unwrap();
        assert_eq!(at.even_kind, ResonanceKind::EvenResonant);
        let off = classify_site_resonance(q + b + 1, &cf, n, 0.05, 0.5).unwrap();
        assert_eq!(off.kind, ResonanceKind::NonResonant);
    }

    #[test]
    fn resonance_fallback_when_interval_has_no_integer() {
        // eps q / M = 1.5: (0.75, 1.5] contains 1
        assert_eq!(resonance_width(30, 0.05, 1.0), (1, false));
        // eps q / M = 0.5: (0.25, 0.5] has no integer
        assert_eq!(resonance_width(10, 0.05, 1.0), (1, true));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn expand_inverts_from_coeffs(mut coeffs in proptest::collection::vec(1u64..50, 2..25), last in 2u64..50) {
            // a trailing 1 would merge into the previous coefficient
            coeffs.push(last);
            let cf = cf_from_u64(&coeffs, 512).unwrap();
            let back = cf_expand(cf.value(), coeffs.len() - 1, 4096).unwrap();
            let want: Vec<BigUint> = coeffs[..coeffs.len() - 1].iter().map(|&a| BigUint::from(a)).collect();
            prop_assert_eq!(back.coefficients(), &want[..]);
        }

        #[test]
        fn convergents_are_coprime_and_increasing(coeffs in proptest::collection::vec(1u64..1000, 3..30)) {
            let cf = cf_from_u64(&coeffs, 256).unwrap();
            for k in 1..=cf.depth() {
                prop_assert!(cf.p(k).gcd(cf.q(k)).is_one());
                if k >= 2 {
                    prop_assert!(cf.q(k) > cf.q(k - 1));
                }
            }
        }

        #[test]
        fn best_approximation(coeffs in proptest::collection::vec(1u64..6, 12..16), k_frac in 0.0f64..1.0) {
            let cf = cf_from_u64(&coeffs, 256).unwrap();
            let n = 8;
            let qn = cf.q_u64(n).unwrap();
            let k = 1 + ((qn - 1) as f64 * k_frac) as u64;
            let k = k.min(qn - 1).max(1);
            let alpha = cf.alpha_rational();
            let kd = signed_frac_dist(&(&alpha * BigInt::from(k))).abs();
            let prev = signed_frac_dist(&(&alpha * biguint_to_bigint(cf.q(n - 1)))).abs();
            prop_assert!(kd >= prev);
        }

        #[test]
        fn delta_hat_bounded_by_beta_hat(coeffs in proptest::collection::vec(1u64..40, 14..18), t in 0.01f64..0.49) {
            let cf = cf_from_u64(&coeffs, 256).unwrap();
            let theta = BigReal::from_f64(t).unwrap();
            let p = arithmetic_profile(&cf, &theta, 12, 4).unwrap();
            prop_assert!(p.beta_hat >= 0.0 && p.delta_hat >= 0.0);
            prop_assert!(p.delta_hat <= p.beta_hat + 0.01);
        }
    }
}
