//! Finite boxes, their eigenpairs, decay of eigenvectors, Gordon norms and
//! the pure-point / singular-continuous classifier.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

use crate::arithmetic::{classify_site_resonance, ArithmeticError, ArithmeticProfile, ContinuedFraction};
use crate::cocycle::{a_product, lyapunov_closed_form, CocycleError, ModelParams};
use crate::numeric::{linear_fit, torus_norm};

pub const DEFAULT_GUARD: f64 = 1e-13;
pub const MAX_BOX_SIZE: usize = 200_000;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const BOUNDARY_TOL: f64 = 0.02;
pub const MIN_R_SQUARED: f64 = 0.8;
pub const COSINE_UNDERFLOW: f64 = -1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("fit rejected: r^2 = {r_squared:.3}")]
    FitRejected { r_squared: f64, slope: f64 },
    #[error("eigenvector peak at site {peak} is within 10% of the box edge")]
    PeakNearBoundary { peak: i64 },
    #[error(transparent)]
    Arithmetic(#[from] ArithmeticError),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// `H` restricted to `[-N, N]` with Dirichlet boundary; symmetric
/// tridiagonal with unit off-diagonal.
#[derive(Clone, Debug)]
pub struct FiniteBox {
    pub first_site: i64,
    pub diagonal: Vec<f64>,
    /// Even sites whose phase lies within `guard` of the pole.
    pub pole_report: Vec<i64>,
    /// Some entry was clamped to `+-1/guard`.
    pub capped: bool,
    pub guard: f64,
    pub params: ModelParams,
}

impl FiniteBox {
    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    pub fn last_site(&self) -> i64 {
        self.first_site + self.len() as i64 - 1
    }

    pub fn index_of(&self, site: i64) -> Option<usize> {
        let i = site - self.first_site;
        (0..self.len() as i64).contains(&i).then_some(i as usize)
    }

    /// `||(H - E) v||_2 / ||v||_2`.
    pub fn residual(&self, energy: f64, v: &[f64]) -> f64 {
        let n = v.len();
        let mut num = 0.0;
        for i in 0..n {
            let mut r = (self.diagonal[i] - energy) * v[i];
            if i > 0 {
                r += v[i - 1];
            }
            if i + 1 < n {
                r += v[i + 1];
            }
            num += r * r;
        }
        (num / v.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    fn rayleigh(&self, v: &[f64]) -> f64 {
        let n = v.len();
        let mut num = 0.0;
        for i in 0..n {
            let mut hv = self.diagonal[i] * v[i];
            if i > 0 {
                hv += v[i - 1];
            }
            if i + 1 < n {
                hv += v[i + 1];
            }
            num += v[i] * hv;
        }
        num / v.iter().map(|x| x * x).sum::<f64>()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diagonal.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - 1.0 / q };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let lo = self.diagonal.iter().fold(f64::INFINITY, |m, &d| m.min(d)) - 2.0;
        let hi = self.diagonal.iter().fold(f64::NEG_INFINITY, |m, &d| m.max(d)) + 2.0;
        (lo, hi)
    }
}

pub fn build_box(params: &ModelParams, n: usize, guard: f64) -> Result<FiniteBox> {
    if n == 0 || 2 * n + 1 > MAX_BOX_SIZE {
        return Err(SpectralError::InvalidArgument(format!("box half-width {n} out of range")));
    }
    if !(guard > 0.0) {
        return Err(SpectralError::InvalidArgument("guard must be positive".into()));
    }
    let first = -(n as i64);
    let cap = 1.0 / guard;
    let mut pole_report = Vec::new();
    let mut capped = false;
    let diagonal = (first..=n as i64)
        .map(|site| {
            if site.rem_euclid(2) == 1 {
                return 0.0;
            }
            let phi = params.phase(site.div_euclid(2));
            let near = torus_norm(phi - 0.5) < guard;
            if near {
                pole_report.push(site);
            }
            let v = params.lambda * (PI * phi).tan();
            if near || !v.is_finite() || v.abs() > cap {
                capped = true;
                cap.copysign(if v.is_nan() { 1.0 } else { v })
            } else {
                v
            }
        })
        .collect();
    Ok(FiniteBox {
        first_site: first,
        diagonal,
        pole_report,
        capped,
        guard,
        params: *params,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub energy: f64,
    /// Values on the box, scaled so the peak equals `+1`.
    pub vector: Vec<f64>,
    pub first_site: i64,
    pub residual: f64,
}

impl EigenPair {
    pub fn value_at(&self, site: i64) -> Option<f64> {
        let i = site - self.first_site;
        (0..self.vector.len() as i64).contains(&i).then(|| self.vector[i as usize])
    }

    /// Site of the peak; ties within `1e-6` relative go to the box center.
    pub fn peak_site(&self) -> i64 {
        let center = (self.vector.len() as f64 - 1.0) / 2.0;
        let m = self.vector.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let idx = self
            .vector
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() >= m * (1.0 - 1e-6))
            .min_by(|a, b| (a.0 as f64 - center).abs().total_cmp(&(b.0 as f64 - center).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.first_site + idx as i64
    }
}

#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub pairs: Vec<EigenPair>,
    /// Pairs excluded for a residual above tolerance.
    pub failures: usize,
    /// Eigenvalues in the requested window by Sturm count.
    pub sturm_count: usize,
}

const LANES: usize = 8;

impl FiniteBox {
    /// Sturm counts at several points in one sweep; independent lanes hide
    /// the latency of the serial division chain.
    fn sturm_counts(&self, xs: &[f64; LANES]) -> [usize; LANES] {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = [0usize; LANES];
        let mut q = [1.0f64; LANES];
        for (i, &d) in self.diagonal.iter().enumerate() {
            for l in 0..LANES {
                let mut v = if i == 0 { d - xs[l] } else { d - xs[l] - 1.0 / q[l] };
                if v == 0.0 {
                    v = -tiny;
                }
                count[l] += (v < 0.0) as usize;
                q[l] = v;
            }
        }
        count
    }
}

/// Eigenvalues with indices `ks` (ascending order index) by bisection;
/// invariant per lane: `count(lo) <= k < count(hi)`.
fn bisect_eigenvalues(b: &FiniteBox, ks: &[usize], lo: f64, hi: f64) -> Vec<f64> {
    let mut los = [lo; LANES];
    let mut his = [hi; LANES];
    let mut target = [usize::MAX; LANES];
    target[..ks.len()].copy_from_slice(ks);
    for _ in 0..2200 {
        let mut mids = [0.0; LANES];
        let mut active = false;
        for l in 0..ks.len() {
            mids[l] = 0.5 * (los[l] + his[l]);
            active |= mids[l] > los[l] && mids[l] < his[l];
        }
        if !active {
            break;
        }
        let counts = b.sturm_counts(&mids);
        for l in 0..ks.len() {
            if !(mids[l] > los[l] && mids[l] < his[l]) {
                continue;
            }
            if counts[l] > target[l] {
                his[l] = mids[l];
            } else {
                los[l] = mids[l];
            }
        }
    }
    (0..ks.len()).map(|l| 0.5 * (los[l] + his[l])).collect()
}

/// Solves `(T - shift) x = rhs` in place by Gaussian elimination with
/// partial pivoting on the tridiagonal band.
fn tridiagonal_solve(diag: &[f64], shift: f64, rhs: &mut [f64], pivot_floor: f64) {
    let n = diag.len();
    if n == 1 {
        let p = diag[0] - shift;
        rhs[0] /= if p.abs() < pivot_floor { pivot_floor } else { p };
        return;
    }
    // rows hold (d, u, u2) after elimination: upper triangular with two superdiagonals
    let mut d = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let mut cur_d = diag[0] - shift;
    let mut cur_u = 1.0;
    for i in 0..n - 1 {
        let below_l = 1.0;
        let below_d = diag[i + 1] - shift;
        let below_u = if i + 2 < n { 1.0 } else { 0.0 };
        if cur_d.abs() >= below_l {
            let m = below_l / if cur_d == 0.0 { pivot_floor } else { cur_d };
            d[i] = cur_d;
            u[i] = cur_u;
            u2[i] = 0.0;
            rhs[i + 1] -= m * rhs[i];
            cur_d = below_d - m * cur_u;
            cur_u = below_u;
        } else {
            let m = cur_d / below_l;
            d[i] = below_l;
            u[i] = below_d;
            u2[i] = below_u;
            rhs.swap(i, i + 1);
            rhs[i + 1] -= m * rhs[i];
            cur_d = cur_u - m * below_d;
            cur_u = -m * below_u;
        }
    }
    d[n - 1] = cur_d;
    for p in d.iter_mut() {
        if p.abs() < pivot_floor {
            *p = if *p < 0.0 { -pivot_floor } else { pivot_floor };
        }
    }
    rhs[n - 1] /= d[n - 1];
    if n >= 2 {
        rhs[n - 2] = (rhs[n - 2] - u[n - 2] * rhs[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - u[i] * rhs[i + 1] - u2[i] * rhs[i + 2]) / d[i];
    }
}

fn normalize2(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn inverse_iteration(b: &FiniteBox, energy: f64, previous: &[Vec<f64>], seed: usize) -> Vec<f64> {
    let n = b.len();
    let scale = b.diagonal.iter().fold(2.0f64, |m, d| m.max(d.abs()));
    let floor = f64::EPSILON * scale;
    // deterministic pseudo-random start
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (seed as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    for _ in 0..4 {
        for w in previous {
            let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(w).for_each(|(a, b)| *a -= dot * b);
        }
        normalize2(&mut v);
        tridiagonal_solve(&b.diagonal, energy, &mut v, floor);
        normalize2(&mut v);
    }
    for w in previous {
        let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(w).for_each(|(a, b)| *a -= dot * b);
    }
    normalize2(&mut v);
    v
}

/// All eigenpairs in `energy_window` (or the whole spectrum), by Sturm
/// bisection and inverse iteration. Near-degenerate eigenvalues are grouped
/// and their vectors orthogonalized within the group.
pub fn eigensolve(b: &FiniteBox, energy_window: Option<(f64, f64)>) -> Result<EigenSolution> {
    if b.len() > MAX_BOX_SIZE {
        return Err(SpectralError::InvalidArgument("box too large".into()));
    }
    let (glo, ghi) = b.gershgorin();
    let (lo, hi) = match energy_window {
        Some((a, c)) if a <= c => (a.max(glo), c.min(ghi)),
        Some(_) => return Err(SpectralError::InvalidArgument("empty energy window".into())),
        None => (glo, ghi),
    };
    if lo > hi {
        return Ok(EigenSolution {
            pairs: Vec::new(),
            failures: 0,
            sturm_count: 0,
        });
    }
    let k_lo = b.sturm_count(lo);
    let k_hi = b.sturm_count(hi);
    let indices: Vec<usize> = (k_lo..k_hi).collect();
    let energies: Vec<f64> = indices
        .par_chunks(LANES)
        .flat_map_iter(|ks| bisect_eigenvalues(b, ks, lo, hi))
        .collect();
    let scale = b.diagonal.iter().fold(2.0f64, |m, d| m.max(d.abs()));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, e) in energies.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if (e - energies[*c.last().unwrap()]).abs() <= 1e-10 * scale => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let results: Vec<Vec<(usize, Vec<f64>)>> = clusters
        .par_iter()
        .map(|cluster| {
            let mut done: Vec<Vec<f64>> = Vec::new();
            let mut out = Vec::new();
            for &i in cluster {
                let v = inverse_iteration(b, energies[i], &done, k_lo + i);
                done.push(v.clone());
                out.push((i, v));
            }
            out
        })
        .collect();
    let mut pairs = Vec::with_capacity(energies.len());
    let mut failures = 0;
    for (_, mut v) in results.into_iter().flatten() {
        let energy = b.rayleigh(&v);
        let residual = b.residual(energy, &v);
        if !(residual <= RESIDUAL_TOL) {
            failures += 1;
            continue;
        }
        let peak = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        v.iter_mut().for_each(|x| *x /= peak);
        pairs.push(EigenPair {
            energy,
            vector: v,
            first_site: b.first_site,
            residual,
        });
    }
    pairs.sort_by(|a, c| a.energy.total_cmp(&c.energy));
    Ok(EigenSolution {
        pairs,
        failures,
        sturm_count: k_hi - k_lo,
    })
}

/// The eigenpair whose eigenvalue is closest to `energy`: two bisections
/// and one inverse iteration, so cost is linear in the box size.
pub fn nearest_eigenpair(b: &FiniteBox, energy: f64) -> Result<Option<EigenPair>> {
    if b.len() > MAX_BOX_SIZE {
        return Err(SpectralError::InvalidArgument("box too large".into()));
    }
    let (glo, ghi) = b.gershgorin();
    let k = b.sturm_count(energy.clamp(glo, ghi));
    let ks: Vec<usize> = [k.checked_sub(1), (k < b.len()).then_some(k)].into_iter().flatten().collect();
    let Some(e) = bisect_eigenvalues(b, &ks, glo, ghi)
        .into_iter()
        .min_by(|a, c| (a - energy).abs().total_cmp(&(c - energy).abs()))
    else {
        return Ok(None);
    };
    let mut v = inverse_iteration(b, e, &[], k);
    let energy = b.rayleigh(&v);
    let residual = b.residual(energy, &v);
    if !(residual <= RESIDUAL_TOL) {
        return Ok(None);
    }
    let peak = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    v.iter_mut().for_each(|x| *x /= peak);
    Ok(Some(EigenPair {
        energy,
        vector: v,
        first_site: b.first_site,
        residual,
    }))
}

/// The central half of a spectrum sorted by energy.
pub fn mid_spectrum(pairs: &[EigenPair]) -> &[EigenPair] {
    let n = pairs.len();
    &pairs[n / 4..n - n / 4]
}

/// `||H u - E u||_inf` over interior sites for `u = 1, 0, -1, 0` repeating
/// with `u_n = 1` at `n = 1 (mod 4)`.
pub fn zero_energy_mode(params: &ModelParams, n: usize) -> Result<f64> {
    if n < 4 {
        return Err(SpectralError::InvalidArgument("N must be at least 4".into()));
    }
    let u = |k: i64| match k.rem_euclid(4) {
        1 => 1.0,
        3 => -1.0,
        _ => 0.0,
    };
    let n = n as i64;
    let mut worst: f64 = 0.0;
    for k in (-n + 1)..n {
        let mut r = u(k + 1) + u(k - 1) - params.energy * u(k);
        // u vanishes on even sites, so the tan potential only enters where it is zero
        if u(k) != 0.0 {
            r += params.potential(k)? * u(k);
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockMaximum {
    pub ell: i64,
    /// `max |phi|` over `[2 ell q_n - 2 b_n, 2 ell q_n + 2 b_n]` relative to the peak.
    pub r: f64,
    /// `2 (delta_n/2 - L + 54 eps) |ell| q_n`.
    pub log_bound: f64,
    /// `log_bound - ln r`; positive when the block bound holds.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// Per-site slope of `ln |phi|` against distance from the peak.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window_used: (i64, i64),
    pub peak_site: i64,
    pub b_n: i64,
    pub block_maxima: Vec<BlockMaximum>,
}

/// Least-squares decay rate of an eigenvector and its block maxima at
/// scale `q_n`.
pub fn decay_fit(
    pair: &EigenPair,
    cf: &ContinuedFraction,
    n_scale: usize,
    epsilon: f64,
    l1: f64,
    delta_n: f64,
) -> Result<DecayFit> {
    let len = pair.vector.len() as i64;
    let peak = pair.peak_site();
    let margin = (len as f64 * 0.1).ceil() as i64;
    let offset = peak - pair.first_site;
    if offset < margin || offset > len - 1 - margin {
        return Err(SpectralError::PeakNearBoundary { peak });
    }
    let peak_abs = pair.value_at(peak).unwrap().abs();
    let threshold = 1e-12 * peak_abs;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut window = (peak, peak);
    for (i, &x) in pair.vector.iter().enumerate() {
        if x.abs() > threshold {
            let site = pair.first_site + i as i64;
            xs.push((site - peak).abs() as f64);
            ys.push((x.abs() / peak_abs).ln());
            window = (window.0.min(site), window.1.max(site));
        }
    }
    let (intercept, slope, r_squared) = linear_fit(&xs, &ys).unwrap_or((0.0, 0.0, 0.0));
    // a flat profile has no decay to report, whatever its r^2
    if r_squared < MIN_R_SQUARED || !(slope < 0.0) {
        return Err(SpectralError::FitRejected { r_squared, slope });
    }
    let lyap = if l1 > 0.0 { l1 } else { f64::MIN_POSITIVE };
    let label = classify_site_resonance(0, cf, n_scale, epsilon, lyap)?;
    let q = cf.q_u64(n_scale).unwrap_or(u64::MAX) as i64;
    let b = label.b_n;
    let mut block_maxima = Vec::new();
    if q > 0 && q < i64::MAX / 4 {
        let ell_lo = (pair.first_site - peak - 2 * b).div_euclid(2 * q);
        let ell_hi = (pair.first_site + len - 1 - peak + 2 * b).div_euclid(2 * q) + 1;
        for ell in ell_lo..=ell_hi {
            let center = peak + 2 * ell * q;
            let r = (center - 2 * b..=center + 2 * b)
                .filter_map(|s| pair.value_at(s))
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x.abs(), |m| m.max(x.abs()))));
            if let Some(r) = r {
                let r = r / peak_abs;
                let log_bound = 2.0 * (delta_n / 2.0 - l1 + 54.0 * epsilon) * (ell.abs() * q) as f64;
                block_maxima.push(BlockMaximum {
                    ell,
                    r,
                    log_bound,
                    margin: log_bound - r.ln(),
                });
            }
        }
    }
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        window_used: window,
        peak_site: peak,
        b_n: b,
        block_maxima,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GordonNorms {
    pub scale_n: usize,
    pub q_n: u64,
    /// `||B_{2q} u||`, `||B_{-2q} u||`, `||B_{4q} u||` for unit `u`.
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    /// Set when a cosine log-sum fell below the underflow threshold.
    pub cosine_underflow: bool,
}

impl GordonNorms {
    pub fn max(&self) -> f64 {
        self.g1.max(self.g2).max(self.g3)
    }
}

fn cos_log_sum(params: &ModelParams, from: i64, count: i64) -> f64 {
    // compensated sum: the terms are many and of mixed magnitude
    let mut sum = 0.0;
    let mut comp = 0.0;
    for j in from..from + count {
        let y = params.cos_sin(j).0.abs().ln() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Gordon norms from the vector `(phi(0), phi(-1))` of an eigenpair.
///
/// `B_{2m}(theta) = A_m(theta) / prod_{j<m} cos pi(theta + j alpha)`, and
/// `B_{-2m}(theta) = adj A_m(theta - m alpha) / prod_{j=-m}^{-1} cos`.
pub fn gordon_quantities(params: &ModelParams, cf: &ContinuedFraction, n_index: usize, pair: &EigenPair) -> Result<GordonNorms> {
    if n_index > cf.depth() {
        return Err(ArithmeticError::DepthExceeded {
            requested: n_index,
            available: cf.depth(),
        }
        .into());
    }
    let q = cf
        .q_u64(n_index)
        .filter(|&q| q <= 100_000)
        .ok_or_else(|| SpectralError::InvalidArgument("q_n exceeds 1e5".into()))?;
    let (u0, u1) = match (pair.value_at(0), pair.value_at(-1)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(SpectralError::InvalidArgument("pair does not cover sites 0 and -1".into())),
    };
    let norm = u0.hypot(u1);
    if norm == 0.0 {
        return Err(SpectralError::InvalidArgument("(phi(0), phi(-1)) vanishes".into()));
    }
    let u = [u0 / norm, u1 / norm];
    let p = params.with_energy(pair.energy);
    let qi = q as i64;
    let forward = |m: i64| {
        let prod = a_product(&p, 0, m as u64);
        let cs = cos_log_sum(&p, 0, m);
        (prod.log_apply_norm(u) - cs, cs)
    };
    let (l1, c1) = forward(qi);
    let (l3, c3) = forward(2 * qi);
    let back = a_product(&p, -qi, q);
    let c2 = cos_log_sum(&p, -qi, qi);
    let adj = back.unit.adjugate();
    let l2 = adj.apply(u);
    // adj(k M) = k adj(M) for 2x2, so the log scale carries over unchanged
    let l2 = (l2[0].hypot(l2[1])).ln() + back.log_scale - c2;
    Ok(GordonNorms {
        scale_n: n_index,
        q_n: q,
        g1: l1.exp(),
        g2: l2.exp(),
        g3: l3.exp(),
        cosine_underflow: c1.min(c2).min(c3) < COSINE_UNDERFLOW,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    PurePoint,
    SingularContinuous,
    Boundary,
    ZeroEnergy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
pub enum ThresholdConvention {
    /// `L2 > delta / 2`.
    HalfDelta,
    /// `L2 > delta`, i.e. `2 L1 > delta` with the per-site exponent.
    #[default]
    TwoL,
}

impl ThresholdConvention {
    pub fn name(&self) -> &'static str {
        match self {
            ThresholdConvention::HalfDelta => "half-delta",
            ThresholdConvention::TwoL => "two-l",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralVerdict {
    pub kind: VerdictKind,
    pub l2: f64,
    pub threshold: f64,
    pub convention: ThresholdConvention,
    pub margin: f64,
}

pub fn classify_energy(energy: f64, lambda: f64, profile: &ArithmeticProfile, convention: ThresholdConvention) -> SpectralVerdict {
    let l2 = lyapunov_closed_form(energy, lambda).map(|r| r.l2).unwrap_or(f64::NAN);
    let threshold = match convention {
        ThresholdConvention::HalfDelta => profile.delta_hat / 2.0,
        ThresholdConvention::TwoL => profile.delta_hat,
    };
    let margin = l2 - threshold;
    let kind = if energy.abs() < 1e-12 {
        VerdictKind::ZeroEnergy
    } else if margin.abs() < BOUNDARY_TOL {
        VerdictKind::Boundary
    } else if margin > 0.0 {
        VerdictKind::PurePoint
    } else {
        VerdictKind::SingularContinuous
    };
    SpectralVerdict {
        kind,
        l2,
        threshold,
        convention,
        margin,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseCell {
    pub energy: f64,
    pub lambda: f64,
    pub delta_hat: f64,
    pub verdict: SpectralVerdict,
}

/// Row-major over `lambdas`, then `energies`.
pub fn phase_diagram(energies: &[f64], lambdas: &[f64], profile: &ArithmeticProfile, convention: ThresholdConvention) -> Vec<PhaseCell> {
    lambdas
        .par_iter()
        .flat_map_iter(|&lambda| {
            energies.iter().map(move |&energy| PhaseCell {
                energy,
                lambda,
                delta_hat: profile.delta_hat,
                verdict: classify_energy(energy, lambda, profile, convention),
            })
        })
        .collect()
}

pub fn phase_diagram_csv(cells: &[PhaseCell]) -> std::result::Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["E", "lambda", "L2", "delta_hat", "convention", "verdict", "margin"])?;
    for c in cells {
        w.write_record([
            c.energy.to_string(),
            c.lambda.to_string(),
            c.verdict.l2.to_string(),
            c.delta_hat.to_string(),
            c.verdict.convention.name().to_string(),
            format!("{:?}", c.verdict.kind),
            c.verdict.margin.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Rows `pair, k, phi_k`.
pub fn eigen_csv(pairs: &[EigenPair]) -> std::result::Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pair", "k", "phi_k"])?;
    for (i, p) in pairs.iter().enumerate() {
        for (j, x) in p.vector.iter().enumerate() {
            w.write_record([i.to_string(), (p.first_site + j as i64).to_string(), x.to_string()])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
