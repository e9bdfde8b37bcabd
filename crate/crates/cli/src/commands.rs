//! One function per subcommand. Each returns the process exit code.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use mosaic_core::arithmetic::ContinuedFraction;
use mosaic_core::cocycle::{complexified_le, lyapunov_closed_form, lyapunov_dinf, ModelParams};
use mosaic_core::config::{resolve, resolve_frequency, ResolvedArithmetic};
use mosaic_core::harness::{run_all, scan_cos3_subsequence, shipped_configs, HarnessConfig, HarnessRun};
use mosaic_core::spectral::{
    build_box, classify_energy, decay_fit, eigen_csv, eigensolve, gordon_quantities, mid_spectrum, phase_diagram,
    phase_diagram_csv, EigenPair, EigenSolution, SpectralError, ThresholdConvention, VerdictKind, DEFAULT_GUARD,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{csv_string, Output};
use crate::svg;

fn resolved(cfg: &RunConfig) -> Result<ResolvedArithmetic, CliError> {
    Ok(resolve(cfg.frequency()?, cfg.phase()?, cfg.precision_bits)?)
}

fn first_lambda(cfg: &RunConfig, explicit: Option<f64>) -> Result<f64, CliError> {
    explicit
        .or_else(|| cfg.lambda_points().first().copied())
        .ok_or_else(|| CliError::Config("no lambda given".into()))
}

pub fn indices(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let ar = resolved(cfg)?;
    let rows = ar.profile.scales.iter().map(|s| {
        vec![
            s.n.to_string(),
            s.q_n.to_string(),
            s.beta.to_string(),
            s.delta.to_string(),
        ]
    });
    out.csv("profile.csv", &csv_string(&["n", "q_n", "beta_n", "delta_n"], rows)?)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        beta_hat: f64,
        delta_hat: f64,
        depth: usize,
        n_min: usize,
        theta: f64,
        resonant_subsequence: &'a [usize],
    }
    let summary = Summary {
        beta_hat: ar.profile.beta_hat,
        delta_hat: ar.profile.delta_hat,
        depth: ar.profile.depth,
        n_min: ar.profile.n_min,
        theta: ar.theta.to_f64(),
        resonant_subsequence: &ar.resonant_subsequence,
    };
    out.json(None, "indices.json", &summary)?;
    Ok(0)
}

fn base_params(cf: &ContinuedFraction, energy: f64, lambda: f64, theta: f64) -> ModelParams {
    ModelParams {
        energy,
        lambda,
        rotation: cf.rotation(),
        theta,
    }
}

pub fn le(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let (energies, lambdas) = cfg.require_grids()?;
    let cf = resolve_frequency(cfg.frequency()?, cfg.precision_bits)?;
    let opts = &cfg.le;
    let cells: Vec<(f64, f64)> = lambdas.iter().flat_map(|&l| energies.iter().map(move |&e| (e, l))).collect();
    let rows: Vec<[f64; 6]> = cells
        .par_iter()
        .map(|&(e, l)| {
            let closed = lyapunov_closed_form(e, l).map_err(CliError::numeric)?;
            let dinf = lyapunov_dinf(e, l);
            let dynamic = complexified_le(&base_params(&cf, e, l, cfg.seed_phase), opts.epsilon, opts.steps, opts.phases)
                .map_err(|err| CliError::Config(err.to_string()))?;
            Ok([e, l, closed.l2, dinf.l2, dynamic.l2, dynamic.std_error])
        })
        .collect::<Result<_, CliError>>()?;
    let body = csv_string(
        &["E", "lambda", "L2_closed", "L2_dinf", "L2_dyn", "std_error", "n_steps"],
        rows.iter().map(|r| {
            let mut v: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            v.push(opts.steps.to_string());
            v
        }),
    )?;
    out.csv("le.csv", &body)?;
    if opts.svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = lambdas
            .iter()
            .map(|&l| {
                let pts = rows.iter().filter(|r| r[1] == l).map(|r| (r[0], r[2])).collect();
                (format!("lambda = {l}"), pts)
            })
            .collect();
        out.svg("le.svg", &svg::line_chart("Lyapunov exponent L2 against E", "E", "L2", &series))?;
    }
    Ok(0)
}

fn parse_convention(name: &str) -> Result<ThresholdConvention, CliError> {
    match name {
        "two-l" => Ok(ThresholdConvention::TwoL),
        "half-delta" => Ok(ThresholdConvention::HalfDelta),
        _ => Err(CliError::Config(format!("unknown convention {name:?}; use two-l or half-delta"))),
    }
}

const VERDICT_CLASSES: [(&str, &str); 4] = [
    ("pure point", "#3b6fb6"),
    ("singular continuous", "#e07b39"),
    ("boundary", "#cccccc"),
    ("zero energy", "#222222"),
];

fn verdict_class(kind: VerdictKind) -> usize {
    match kind {
        VerdictKind::PurePoint => 0,
        VerdictKind::SingularContinuous => 1,
        VerdictKind::Boundary => 2,
        VerdictKind::ZeroEnergy => 3,
    }
}

pub fn phase_diagram_cmd(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let (energies, lambdas) = cfg.require_grids()?;
    let conventions = cfg
        .phase_diagram
        .conventions
        .iter()
        .map(|c| parse_convention(c))
        .collect::<Result<Vec<_>, _>>()?;
    if conventions.is_empty() {
        return Err(CliError::Config("no convention requested".into()));
    }
    let ar = resolved(cfg)?;
    let mut all = Vec::new();
    for conv in conventions {
        let cells = phase_diagram(&energies, &lambdas, &ar.profile, conv);
        if cfg.phase_diagram.svg {
            let class: Vec<Vec<usize>> = cells
                .chunks(energies.len())
                .map(|row| row.iter().map(|c| verdict_class(c.verdict.kind)).collect())
                .collect();
            let title = format!("Spectral type, {} convention, delta_hat = {:.3}", conv.name(), ar.profile.delta_hat);
            out.svg(
                &format!("phase_{}.svg", conv.name()),
                &svg::heat_map(&title, "E", "lambda", &energies, &lambdas, &class, &VERDICT_CLASSES),
            )?;
        }
        all.extend(cells);
    }
    out.csv("phase_diagram.csv", &phase_diagram_csv(&all)?)?;
    Ok(0)
}

fn solve_box(ar: &ResolvedArithmetic, lambda: f64, half_width: usize, window: Option<(f64, f64)>) -> Result<(ModelParams, EigenSolution), CliError> {
    let p = ModelParams::from_cf(0.0, lambda, &ar.cf, &ar.theta);
    let b = build_box(&p, half_width, DEFAULT_GUARD).map_err(|e| match e {
        SpectralError::InvalidArgument(m) => CliError::Config(m),
        other => CliError::numeric(other),
    })?;
    if !b.pole_report.is_empty() {
        eprintln!("warning: sites {:?} sit on a tan pole and were capped", b.pole_report);
    }
    let sol = eigensolve(&b, window).map_err(CliError::numeric)?;
    if sol.failures > 0 {
        eprintln!("warning: {} eigenpairs failed the residual check", sol.failures);
    }
    Ok((p, sol))
}

pub fn eigen(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let opts = &cfg.eigen;
    let ar = resolved(cfg)?;
    let lambda = first_lambda(cfg, opts.lambda)?;
    let (_, sol) = solve_box(&ar, lambda, opts.half_width, opts.window)?;
    let delta_n = ar.profile.scale(opts.scale_n).map(|s| s.delta).unwrap_or(0.0);
    let mid_range = {
        let mid = mid_spectrum(&sol.pairs);
        (mid.first().map(|p| p.energy), mid.last().map(|p| p.energy))
    };
    let mut rows = Vec::new();
    let (mut fitted, mut rejected, mut boundary, mut within) = (0usize, 0usize, 0usize, 0usize);
    for (i, pair) in sol.pairs.iter().enumerate() {
        let l1 = lyapunov_closed_form(pair.energy, lambda).map_err(CliError::numeric)?.l1;
        let fit = decay_fit(pair, &ar.cf, opts.scale_n, opts.epsilon, l1, delta_n);
        let (status, slope, r2, peak, ok) = match fit {
            Ok(f) => {
                fitted += 1;
                let ok = (-f.slope - l1).abs() <= 0.2 * l1;
                within += ok as usize;
                ("ok", f.slope, f.r_squared, f.peak_site, ok)
            }
            Err(SpectralError::FitRejected { r_squared, slope }) => {
                rejected += 1;
                ("rejected", slope, r_squared, pair.peak_site(), false)
            }
            Err(SpectralError::PeakNearBoundary { peak }) => {
                boundary += 1;
                ("peak_near_boundary", f64::NAN, f64::NAN, peak, false)
            }
            Err(SpectralError::Arithmetic(e)) => return Err(e.into()),
            Err(e) => return Err(CliError::numeric(e)),
        };
        rows.push(vec![
            i.to_string(),
            pair.energy.to_string(),
            pair.residual.to_string(),
            l1.to_string(),
            slope.to_string(),
            r2.to_string(),
            peak.to_string(),
            status.to_string(),
            ok.to_string(),
        ]);
    }
    let header = ["pair", "E", "residual", "L1", "slope", "r_squared", "peak_site", "status", "within_20pct"];
    out.csv("decay.csv", &csv_string(&header, rows)?)?;
    #[derive(Serialize)]
    struct Summary {
        lambda: f64,
        sites: usize,
        pairs: usize,
        failures: usize,
        fitted: usize,
        rejected: usize,
        peak_near_boundary: usize,
        within_20pct: usize,
        mid_spectrum_energy_range: (Option<f64>, Option<f64>),
    }
    out.json(
        None,
        "eigen_summary.json",
        &Summary {
            lambda,
            sites: 2 * opts.half_width + 1,
            pairs: sol.pairs.len(),
            failures: sol.failures,
            fitted,
            rejected,
            peak_near_boundary: boundary,
            within_20pct: within,
            mid_spectrum_energy_range: mid_range,
        },
    )?;
    if opts.vectors {
        out.csv("eigenvectors.csv", &eigen_csv(&sol.pairs)?)?;
    }
    if opts.svg && !sol.pairs.is_empty() {
        let pair = &sol.pairs[sol.pairs.len() / 2];
        out.svg("eigenvector.svg", &profile_svg(pair))?;
    }
    Ok(0)
}

fn profile_svg(pair: &EigenPair) -> String {
    let pts: Vec<(f64, f64)> = pair
        .vector
        .iter()
        .enumerate()
        .map(|(i, v)| ((pair.first_site + i as i64) as f64, v.abs().max(1e-300).log10()))
        .collect();
    svg::line_chart(
        &format!("Eigenvector profile, E = {:.6}", pair.energy),
        "site k",
        "log10 |phi(k)|",
        &[("log10 |phi|".to_string(), pts)],
    )
}

fn nearest(pairs: &[EigenPair], e: f64) -> Option<usize> {
    (0..pairs.len()).min_by(|&a, &b| (pairs[a].energy - e).abs().total_cmp(&(pairs[b].energy - e).abs()))
}

pub fn gordon(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let opts = &cfg.gordon;
    let ar = resolved(cfg)?;
    let lambda = first_lambda(cfg, opts.lambda)?;
    let (p, sol) = solve_box(&ar, lambda, opts.half_width, None)?;
    let mut chosen: Vec<usize> = if opts.energies.is_empty() {
        let nonzero: Vec<usize> = (0..sol.pairs.len()).filter(|&i| sol.pairs[i].energy.abs() > 0.05).collect();
        let k = opts.pairs.min(nonzero.len());
        // interior quantiles: the spectral edges hold pole-localized states
        (1..=k).map(|i| nonzero[i * nonzero.len() / (k + 1)]).collect()
    } else {
        opts.energies.iter().filter_map(|&e| nearest(&sol.pairs, e)).collect()
    };
    chosen.dedup();
    let scales: Vec<usize> = scan_cos3_subsequence(&ar.cf, &ar.theta, opts.epsilon, ar.profile.depth, ar.profile.delta_hat)
        .into_iter()
        .filter(|&n| ar.cf.q_u64(n).is_some_and(|q| q <= opts.max_q))
        .collect();
    if scales.is_empty() {
        eprintln!("warning: no cosine-product scale with q_n <= {}", opts.max_q);
    }
    let mut rows = Vec::new();
    for pair in chosen.into_iter().map(|i| &sol.pairs[i]) {
        let verdict = classify_energy(pair.energy, lambda, &ar.profile, ThresholdConvention::default());
        for &n in &scales {
            let g = gordon_quantities(&p, &ar.cf, n, pair).map_err(CliError::numeric)?;
            rows.push(vec![
                pair.energy.to_string(),
                lambda.to_string(),
                n.to_string(),
                g.q_n.to_string(),
                g.g1.to_string(),
                g.g2.to_string(),
                g.g3.to_string(),
                g.max().to_string(),
                format!("{:?}", verdict.kind),
                g.cosine_underflow.to_string(),
            ]);
        }
    }
    let header = ["E", "lambda", "n", "q_n", "g1", "g2", "g3", "g_max", "verdict", "cosine_underflow"];
    out.csv("gordon.csv", &csv_string(&header, rows)?)?;
    Ok(0)
}

fn suite_configs(cfg: &RunConfig, suite: Option<&str>, from_file: bool) -> Result<Vec<HarnessConfig>, CliError> {
    let suite = suite.map(str::to_string).or_else(|| cfg.lemma.suite.clone());
    match suite.as_deref() {
        Some("all") => Ok(shipped_configs()),
        Some(name) => shipped_configs()
            .into_iter()
            .find(|c| c.name == name)
            .map(|c| vec![c])
            .ok_or_else(|| CliError::Config(format!("unknown suite {name:?}"))),
        None if !from_file => Ok(shipped_configs()),
        None => {
            let energies = cfg.lemma.energies.as_ref().unwrap_or(&cfg.energies).points();
            let lambdas = cfg.lemma.lambdas.as_ref().unwrap_or(&cfg.lambdas).points();
            if energies.is_empty() || lambdas.is_empty() {
                return Err(CliError::Config("energy and lambda grids must be nonempty".into()));
            }
            Ok(vec![HarnessConfig {
                name: "custom".into(),
                frequency: cfg.frequency()?.clone(),
                phase: cfg.phase()?.clone(),
                energies,
                lambdas,
                epsilon: cfg.lemma.epsilon.unwrap_or(0.05),
                precision_bits: cfg.precision_bits,
                fault: None,
            }])
        }
    }
}

pub fn lemma_check(cfg: &RunConfig, out: &mut Output, suite: Option<&str>, json: Option<&Path>, from_file: bool) -> Result<i32, CliError> {
    let configs = suite_configs(cfg, suite, from_file)?;
    let runs: Vec<HarnessRun> = configs.iter().map(run_all).collect::<Result<_, _>>().map_err(|e| match e {
        mosaic_core::harness::HarnessError::Arithmetic(a) => CliError::from(a),
        other => CliError::numeric(other),
    })?;
    for r in &runs {
        let s = &r.summary;
        println!(
            "{}: {} checks, {} holds, {} violated, {} inconclusive",
            s.config, s.total, s.holds, s.violated, s.inconclusive
        );
    }
    out.json(json, "lemmas.json", &runs)?;
    Ok(if runs.iter().any(HarnessRun::any_violated) { 1 } else { 0 })
}
