//! Transfer matrices of the mosaic operator and their Lyapunov exponents.
//!
//! Sites carry `v_n = lambda tan(pi(theta + n alpha / 2))` on even `n` and
//! zero on odd `n`, so the even site `2j` sees the phase `theta + j alpha`.
//! Phases are reduced mod 1 for the potential and mod 2 for `cos`/`sin`,
//! so every cosine product equals its unreduced expression.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{LN_2, PI};
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

use crate::arithmetic::ContinuedFraction;
use crate::numeric::{mean_and_jackknife, snap_half_integer, torus_norm, weyl_phases, Rotation};
use crate::real::BigReal;

/// Minimum distance from the tan pole accepted by raw (unregularized) steps.
pub const SINGULARITY_GUARD: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("site {site} lies within the singularity guard of the tan pole")]
    SingularityHit { site: i64 },
    #[error("closed-form argument {argument} is below 1")]
    FormulaArgumentBelowOne { argument: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, CocycleError>;

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
    fn scale(self, k: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn mul(&self, o: &Mat2<T>) -> Mat2<T> {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> T {
        self.a + self.d
    }

    pub fn max_abs(&self) -> f64 {
        self.a
            .modulus()
            .max(self.b.modulus())
            .max(self.c.modulus())
            .max(self.d.modulus())
    }

    pub fn scaled(&self, k: f64) -> Mat2<T> {
        Mat2::new(self.a.scale(k), self.b.scale(k), self.c.scale(k), self.d.scale(k))
    }

    pub fn adjugate(&self) -> Mat2<T> {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn apply(&self, v: [T; 2]) -> [T; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        let f2 = self.a.modulus().powi(2) + self.b.modulus().powi(2) + self.c.modulus().powi(2) + self.d.modulus().powi(2);
        let det = self.det().modulus();
        let disc = (f2 * f2 - 4.0 * det * det).max(0.0);
        ((f2 + disc.sqrt()) / 2.0).sqrt()
    }

    pub fn sub(&self, o: &Mat2<T>) -> Mat2<T> {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

pub fn vec_norm<T: Scalar>(v: [T; 2]) -> f64 {
    v[0].modulus().hypot(v[1].modulus())
}

/// A matrix product stored as `unit * e^{log_scale}` with
/// `max_abs(unit)` kept in `[1/2, 2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogMatProduct<T> {
    pub unit: Mat2<T>,
    pub log_scale: f64,
    pub steps: u64,
}

impl<T: Scalar> Default for LogMatProduct<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Scalar> LogMatProduct<T> {
    pub fn identity() -> Self {
        LogMatProduct {
            unit: Mat2::identity(),
            log_scale: 0.0,
            steps: 0,
        }
    }

    /// Left-multiplies by `step`.
    pub fn push(&mut self, step: &Mat2<T>) {
        self.unit = step.mul(&self.unit);
        self.steps += 1;
        self.renormalize();
    }

    fn renormalize(&mut self) {
        let m = self.unit.max_abs();
        if !(0.5..=2.0).contains(&m) {
            if m > 0.0 && m.is_finite() {
                self.unit = self.unit.scaled(1.0 / m);
                self.log_scale += m.ln();
            } else if m == 0.0 {
                self.log_scale = f64::NEG_INFINITY;
            }
        }
    }

    /// `ln ||product||` in the operator norm.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.unit.op_norm().ln()
    }

    /// The product itself; overflows for long products.
    pub fn matrix(&self) -> Mat2<T> {
        self.unit.scaled(self.log_scale.exp())
    }

    /// `ln ||product * v||`.
    pub fn log_apply_norm(&self, v: [T; 2]) -> f64 {
        self.log_scale + vec_norm(self.unit.apply(v)).ln()
    }
}

/// One operator instance `(E, lambda, alpha, theta)` in double precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub energy: f64,
    pub lambda: f64,
    pub rotation: Rotation,
    pub theta: f64,
}

impl ModelParams {
    pub fn new(energy: f64, lambda: f64, alpha: f64, theta: f64) -> Self {
        ModelParams {
            energy,
            lambda,
            rotation: Rotation::new(alpha),
            theta,
        }
    }

    pub fn from_cf(energy: f64, lambda: f64, cf: &ContinuedFraction, theta: &BigReal) -> Self {
        ModelParams {
            energy,
            lambda,
            rotation: cf.rotation(),
            theta: theta.to_f64(),
        }
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        ModelParams { energy, ..*self }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        ModelParams { theta, ..*self }
    }

    pub fn alpha(&self) -> f64 {
        self.rotation.alpha()
    }

    /// Reduced phase `theta + j alpha (mod 1)` of the even site `2j`.
    pub fn phase(&self, j: i64) -> f64 {
        self.rotation.phase(self.theta, j)
    }

    /// `(cos, sin)` of `pi (theta + j alpha)`; the phase is reduced mod 2,
    /// so signs agree with the unreduced expression.
    pub fn cos_sin(&self, j: i64) -> (f64, f64) {
        let (s, c) = (PI * self.rotation.phase2(self.theta, j)).sin_cos();
        (c, s)
    }

    /// Potential at site `n`; errors within the guard of a pole.
    pub fn potential(&self, n: i64) -> Result<f64> {
        if n.rem_euclid(2) == 1 {
            return Ok(0.0);
        }
        let phi = self.phase(n.div_euclid(2));
        if torus_norm(phi - 0.5) <= SINGULARITY_GUARD {
            return Err(CocycleError::SingularityHit { site: n });
        }
        Ok(self.lambda * (PI * phi).tan())
    }
}

/// `S(n) = [[E - v_n, -1], [1, 0]]`.
pub fn step_s(params: &ModelParams, n: i64) -> Result<Mat2<f64>> {
    let v = params.potential(n)?;
    Ok(Mat2::new(params.energy - v, -1.0, 1.0, 0.0))
}

/// `D(theta) = [[E, -1], [1, 0]] [[E - lambda tan(pi theta), -1], [1, 0]]`.
pub fn two_step_d(params: &ModelParams, theta_eff: f64) -> Result<Mat2<f64>> {
    if torus_norm(theta_eff - 0.5) <= SINGULARITY_GUARD {
        return Err(CocycleError::SingularityHit { site: 0 });
    }
    let e = params.energy;
    let w = e - params.lambda * (PI * theta_eff).tan();
    Ok(Mat2::new(e * w - 1.0, -e, w, -1.0))
}

/// `cos(pi phi) D(phi)` with `cos * tan` replaced by `sin`; finite everywhere.
pub fn a_matrix(energy: f64, lambda: f64, c: f64, s: f64) -> Mat2<f64> {
    let e = energy;
    Mat2::new((e * e - 1.0) * c - lambda * e * s, -e * c, e * c - lambda * s, -c)
}

/// Regularized step at the reduced phase of even site `2j`.
pub fn regularized_step_a(params: &ModelParams, j: i64) -> Mat2<f64> {
    let (c, s) = params.cos_sin(j);
    a_matrix(params.energy, params.lambda, c, s)
}

/// Left-ordered product `M(start + count - 1) ... M(start)`.
pub fn product_lognorm<T, F>(mut step: F, count: u64, start_index: i64) -> Result<LogMatProduct<T>>
where
    T: Scalar,
    F: FnMut(i64) -> Result<Mat2<T>>,
{
    if count == 0 {
        return Err(CocycleError::InvalidArgument("count must be at least 1".into()));
    }
    let mut prod = LogMatProduct::identity();
    for i in 0..count {
        prod.push(&step(start_index + i as i64)?);
    }
    Ok(prod)
}

/// `A_count(theta_{start}) = A(theta + (start+count-1) alpha) ... A(theta + start alpha)`.
pub fn a_product(params: &ModelParams, start_j: i64, count: u64) -> LogMatProduct<f64> {
    let mut prod = LogMatProduct::identity();
    for i in 0..count {
        prod.push(&regularized_step_a(params, start_j + i as i64));
    }
    prod
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum LyapunovMethod {
    ClosedForm,
    Dynamical,
    SpectralRadiusDinf,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovResult {
    /// Two-step exponent.
    pub l2: f64,
    /// Per-site exponent, exactly `l2 / 2`.
    pub l1: f64,
    pub method: LyapunovMethod,
    pub n_steps: u64,
    pub std_error: f64,
    /// Phase-to-phase spread exceeded `max(10 std_error, 1e-2)`.
    pub non_convergence: bool,
}

impl LyapunovResult {
    fn exact(l2: f64, method: LyapunovMethod) -> Self {
        LyapunovResult {
            l2,
            l1: l2 / 2.0,
            method,
            n_steps: 0,
            std_error: 0.0,
            non_convergence: false,
        }
    }

    /// `L1 - ln(2)/2`, the per-site growth rate of the regularized determinants.
    pub fn l_tilde(&self) -> f64 {
        self.l1 - LN_2 / 2.0
    }
}

/// `arccosh((sqrt((E^2-4)^2 + (lambda E)^2) + sqrt(E^4 + (lambda E)^2)) / 4)`.
///
/// The argument minus one is assembled from nonnegative pieces, so the
/// zero set (`E = 0`, or `lambda = 0` with `|E| <= 2`) is reproduced exactly.
pub fn lyapunov_closed_form(energy: f64, lambda: f64) -> Result<LyapunovResult> {
    let u = energy * energy;
    let w = (lambda * energy).powi(2);
    let a = ((u - 4.0).powi(2) + w).sqrt();
    let b = (u * u + w).sqrt();
    let frac = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let delta = if u <= 4.0 {
        (frac(w, a + 4.0 - u) + frac(w, b + u)) / 4.0
    } else {
        (frac(w, a + u - 4.0) + b + u - 8.0) / 4.0
    };
    if !(delta >= -1e-9) {
        return Err(CocycleError::FormulaArgumentBelowOne { argument: 1.0 + delta });
    }
    let delta = delta.max(0.0);
    let l2 = (delta + (delta * (2.0 + delta)).sqrt()).ln_1p();
    Ok(LyapunovResult::exact(l2, LyapunovMethod::ClosedForm))
}

/// `D_inf = [[E, -1], [1, 0]] [[E - i lambda, -1], [1, 0]]`.
pub fn d_infinity(energy: f64, lambda: f64) -> Mat2<Complex64> {
    let e = Complex64::new(energy, 0.0);
    let w = Complex64::new(energy, -lambda);
    let one = Complex64::new(1.0, 0.0);
    Mat2::new(e * w - one, -e, w, -one)
}

/// Larger root of `x^2 - t x + 1 = 0` with `t = E^2 - i lambda E - 2`.
pub fn dinf_dominant_root(energy: f64, lambda: f64) -> Complex64 {
    let t = Complex64::new(energy * energy - 2.0, -lambda * energy);
    // t^2 - 4 = (t - 2)(t + 2), each factor formed without cancellation
    let tm = Complex64::new((energy - 2.0) * (energy + 2.0), -lambda * energy);
    let tp = Complex64::new(energy * energy, -lambda * energy);
    let root = (tm * tp).sqrt();
    let x1 = (t + root) / 2.0;
    let x2 = (t - root) / 2.0;
    if x1.norm() >= x2.norm() {
        x1
    } else {
        x2
    }
}

pub fn lyapunov_dinf(energy: f64, lambda: f64) -> LyapunovResult {
    let x = dinf_dominant_root(energy, lambda);
    LyapunovResult::exact(x.norm().ln().max(0.0), LyapunovMethod::SpectralRadiusDinf)
}

fn summarize(samples: &[f64], shift: f64, n_steps: u64, method: LyapunovMethod) -> LyapunovResult {
    let (mean, se) = mean_and_jackknife(samples);
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let l2 = mean + shift;
    LyapunovResult {
        l2,
        l1: l2 / 2.0,
        method,
        n_steps,
        std_error: se,
        non_convergence: hi - lo > (10.0 * se).max(1e-2),
    }
}

/// Per-phase `ln ||A_n(theta_k)|| / n` for Weyl phases `theta_k`.
pub fn a_cocycle_samples(params: &ModelParams, n_steps: u64, n_phases: usize) -> Vec<f64> {
    weyl_phases(params.theta, n_phases)
        .into_par_iter()
        .map(|th| a_product(&params.with_theta(th), 0, n_steps).log_norm() / n_steps as f64)
        .collect()
}

/// `L2 = L(alpha, A) + ln 2` estimated from the regularized cocycle.
pub fn lyapunov_dynamical(params: &ModelParams, n_steps: u64, n_phases: usize) -> Result<LyapunovResult> {
    if n_steps < 1000 || n_phases == 0 {
        return Err(CocycleError::InvalidArgument("need n_steps >= 1000 and n_phases >= 1".into()));
    }
    let samples = a_cocycle_samples(params, n_steps, n_phases);
    Ok(summarize(&samples, LN_2, n_steps, LyapunovMethod::Dynamical))
}

/// `tan(pi(theta + i eps))` via `-i (w - 1)/(w + 1)`, `w = e^{-2 pi eps} e^{2 pi i theta}`.
pub fn complex_tan(theta: f64, eps: f64) -> Complex64 {
    let w = Complex64::from_polar((-2.0 * PI * eps).exp(), 2.0 * PI * theta);
    let one = Complex64::new(1.0, 0.0);
    Complex64::new(0.0, -1.0) * (w - one) / (w + one)
}

/// `D(theta + i eps)`.
pub fn complex_d(energy: f64, lambda: f64, theta: f64, eps: f64) -> Mat2<Complex64> {
    let e = Complex64::new(energy, 0.0);
    let w = e - complex_tan(theta, eps) * lambda;
    let one = Complex64::new(1.0, 0.0);
    Mat2::new(e * w - one, -e, w, -one)
}

fn complexified_samples(params: &ModelParams, eps: f64, n_steps: u64, n_phases: usize) -> Vec<f64> {
    weyl_phases(params.theta, n_phases)
        .into_par_iter()
        .map(|th| {
            let mut prod = LogMatProduct::identity();
            for j in 0..n_steps as i64 {
                let phi = params.rotation.phase(th, j);
                prod.push(&complex_d(params.energy, params.lambda, phi, eps));
            }
            prod.log_norm() / n_steps as f64
        })
        .collect()
}

/// `L(alpha, D_eps)` for the cocycle `theta -> D(theta + i eps)`.
///
/// At `eps = 0` the raw cocycle is singular; the value is then taken from
/// the regularized cocycle, `L(alpha, D_0) = L(alpha, A) + ln 2`.
pub fn complexified_le(params: &ModelParams, eps: f64, n_steps: u64, n_phases: usize) -> Result<LyapunovResult> {
    if !(eps >= 0.0) {
        return Err(CocycleError::InvalidArgument("epsilon must be nonnegative".into()));
    }
    if eps == 0.0 {
        return lyapunov_dynamical(params, n_steps, n_phases);
    }
    if n_steps == 0 || n_phases == 0 {
        return Err(CocycleError::InvalidArgument("need n_steps, n_phases >= 1".into()));
    }
    let samples = complexified_samples(params, eps, n_steps, n_phases);
    Ok(summarize(&samples, 0.0, n_steps, LyapunovMethod::Dynamical))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccelerationEstimate {
    pub omega: f64,
    pub nearest_half_integer: f64,
    pub distance: f64,
}

/// Snaps a raw slope `dL/d eps` to the half-integer lattice of `omega`.
pub fn snap_acceleration(slope: f64) -> AccelerationEstimate {
    let omega = slope / (2.0 * PI);
    let (nearest, distance) = snap_half_integer(omega);
    AccelerationEstimate {
        omega,
        nearest_half_integer: nearest,
        distance,
    }
}

/// Central difference `(L(eps + h) - L(eps - h)) / (2h) / (2 pi)`, both sides
/// sampled on the same phases so the sampling noise cancels.
pub fn acceleration_estimate(params: &ModelParams, eps: f64, h: f64, n_steps: u64, n_phases: usize) -> Result<AccelerationEstimate> {
    if !(eps > 0.0 && h > 0.0 && h < eps) {
        return Err(CocycleError::InvalidArgument("need 0 < h < epsilon".into()));
    }
    let plus = complexified_samples(params, eps + h, n_steps, n_phases);
    let minus = complexified_samples(params, eps - h, n_steps, n_phases);
    let diff: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect();
    let (slope, _) = mean_and_jackknife(&diff);
    Ok(snap_acceleration(slope))
}
