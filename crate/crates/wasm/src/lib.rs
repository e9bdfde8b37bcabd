//! Browser bindings. Every entry point takes plain numbers and JSON specs
//! and returns a JSON string, so the page needs no glue beyond
//! `JSON.parse`. The `*_json` functions hold the logic and run natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use mosaic_core::cocycle::{lyapunov_closed_form, lyapunov_dynamical, ModelParams};
use mosaic_core::config::{resolve, FrequencySpec, PhaseSpec, ResolvedArithmetic};
use mosaic_core::spectral::{build_box, classify_energy, nearest_eigenpair, ThresholdConvention, DEFAULT_GUARD};

const PRECISION_BITS: u32 = 256;
/// Keeps a single call interactive on one browser thread.
const MAX_GRID: usize = 400;
const MAX_HALF_WIDTH: usize = 5000;
const MAX_STEPS: u64 = 1_000_000;

fn grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>, String> {
    if !(lo.is_finite() && hi.is_finite()) || count == 0 || count > MAX_GRID {
        return Err(format!("grid needs finite bounds and 1..={MAX_GRID} points"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

fn arithmetic(frequency: &str, phase: &str) -> Result<ResolvedArithmetic, String> {
    let f: FrequencySpec = serde_json::from_str(frequency).map_err(|e| format!("frequency: {e}"))?;
    let p: PhaseSpec = serde_json::from_str(phase).map_err(|e| format!("phase: {e}"))?;
    resolve(&f, &p, PRECISION_BITS).map_err(|e| e.to_string())
}

/// Closed-form `L2(E)` on a grid, with a dynamical estimate beside it when
/// `steps > 0`. Non-finite values become `null`.
pub fn le_curve_json(lambda: f64, e_min: f64, e_max: f64, count: usize, alpha: f64, steps: u64) -> Result<Value, String> {
    let energies = grid(e_min, e_max, count)?;
    if steps > MAX_STEPS || (steps > 0 && steps < 1000) {
        return Err(format!("steps must be 0 or in 1000..={MAX_STEPS}"));
    }
    let mut closed = Vec::with_capacity(count);
    let mut dynamical = Vec::with_capacity(count);
    for &e in &energies {
        closed.push(lyapunov_closed_form(e, lambda).map(|r| r.l2).map_err(|e| e.to_string())?);
        if steps > 0 {
            let r = lyapunov_dynamical(&ModelParams::new(e, lambda, alpha, 0.1), steps, 1).map_err(|e| e.to_string())?;
            dynamical.push(r.l2);
        }
    }
    Ok(json!({"lambda": lambda, "energies": energies, "closed": closed, "dynamical": dynamical}))
}

/// The finite-box eigenvector nearest `energy`, as `log10 |phi|` per site,
/// plus the per-site exponent `L1` for a reference slope.
pub fn eigenvector_profile_json(frequency: &str, phase: &str, lambda: f64, half_width: usize, energy: f64) -> Result<Value, String> {
    if half_width == 0 || half_width > MAX_HALF_WIDTH {
        return Err(format!("half_width must be in 1..={MAX_HALF_WIDTH}"));
    }
    let ar = arithmetic(frequency, phase)?;
    let params = ModelParams::from_cf(energy, lambda, &ar.cf, &ar.theta);
    let b = build_box(&params, half_width, DEFAULT_GUARD).map_err(|e| e.to_string())?;
    let pair = nearest_eigenpair(&b, energy)
        .map_err(|e| e.to_string())?
        .ok_or("no converged eigenpair near this energy")?;
    let peak = pair.vector.iter().enumerate().fold(0, |best, (i, x)| if x.abs() > pair.vector[best].abs() { i } else { best });
    let log10: Vec<f64> = pair.vector.iter().map(|x| x.abs().max(1e-300).log10()).collect();
    let l1 = lyapunov_closed_form(pair.energy, lambda).map(|r| r.l1).unwrap_or(f64::NAN);
    Ok(json!({
        "energy": pair.energy,
        "residual": pair.residual,
        "first_site": pair.first_site,
        "peak_site": pair.first_site + peak as i64,
        "log10_abs": log10,
        "l1": l1,
        "delta_hat": ar.profile.delta_hat,
    }))
}

/// Verdict grid, `cells[j][i]` for `(energies[i], lambdas[j])`.
#[allow(clippy::too_many_arguments)]
pub fn phase_diagram_json(
    frequency: &str,
    phase: &str,
    e_min: f64,
    e_max: f64,
    e_count: usize,
    l_min: f64,
    l_max: f64,
    l_count: usize,
    half_delta: bool,
) -> Result<Value, String> {
    let energies = grid(e_min, e_max, e_count)?;
    let lambdas = grid(l_min, l_max, l_count)?;
    let ar = arithmetic(frequency, phase)?;
    let convention = if half_delta { ThresholdConvention::HalfDelta } else { ThresholdConvention::TwoL };
    let cells: Vec<Vec<String>> = lambdas
        .iter()
        .map(|&l| {
            energies
                .iter()
                .map(|&e| format!("{:?}", classify_energy(e, l, &ar.profile, convention).kind))
                .collect()
        })
        .collect();
    Ok(json!({
        "energies": energies,
        "lambdas": lambdas,
        "cells": cells,
        "delta_hat": ar.profile.delta_hat,
        "beta_hat": ar.profile.beta_hat,
        "convention": convention.name(),
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn le_curve(lambda: f64, e_min: f64, e_max: f64, count: usize, alpha: f64, steps: u32) -> Result<String, JsValue> {
    to_js(le_curve_json(lambda, e_min, e_max, count, alpha, steps as u64))
}

#[wasm_bindgen]
pub fn eigenvector_profile(frequency: &str, phase: &str, lambda: f64, half_width: usize, energy: f64) -> Result<String, JsValue> {
    to_js(eigenvector_profile_json(frequency, phase, lambda, half_width, energy))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn phase_diagram(
    frequency: &str,
    phase: &str,
    e_min: f64,
    e_max: f64,
    e_count: usize,
    l_min: f64,
    l_max: f64,
    l_count: usize,
    half_delta: bool,
) -> Result<String, JsValue> {
    to_js(phase_diagram_json(frequency, phase, e_min, e_max, e_count, l_min, l_max, l_count, half_delta))
}
