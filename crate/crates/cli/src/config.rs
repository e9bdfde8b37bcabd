//! Run configuration: one JSON document shared by every subcommand.

use serde::{Deserialize, Serialize};

use mosaic_core::config::{FrequencySpec, PhaseSpec};

use crate::error::CliError;

/// An explicit list or `count` evenly spaced points on `[start, stop]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Default for Grid {
    fn default() -> Self {
        Grid::List(Vec::new())
    }
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { count: 0, .. } => Vec::new(),
            Grid::Range { start, count: 1, .. } => vec![*start],
            Grid::Range { start, stop, count } => {
                let step = (stop - start) / (*count - 1) as f64;
                (0..*count).map(|i| start + step * i as f64).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeOptions {
    pub steps: u64,
    pub phases: usize,
    /// Imaginary phase shift; `0` is the regularized real cocycle.
    pub epsilon: f64,
    pub svg: bool,
}

impl Default for LeOptions {
    fn default() -> Self {
        LeOptions {
            steps: 100_000,
            phases: 8,
            epsilon: 0.0,
            svg: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDiagramOptions {
    /// Any of `"two-l"` and `"half-delta"`.
    pub conventions: Vec<String>,
    pub svg: bool,
}

impl Default for PhaseDiagramOptions {
    fn default() -> Self {
        PhaseDiagramOptions {
            conventions: vec!["two-l".into()],
            svg: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenOptions {
    /// The box is `[-half_width, half_width]`.
    pub half_width: usize,
    /// Defaults to the first entry of `lambdas`.
    pub lambda: Option<f64>,
    pub window: Option<(f64, f64)>,
    /// Continued-fraction scale of the block maxima.
    pub scale_n: usize,
    pub epsilon: f64,
    pub vectors: bool,
    pub svg: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            half_width: 2000,
            lambda: None,
            window: None,
            scale_n: 8,
            epsilon: 0.01,
            vectors: false,
            svg: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GordonOptions {
    /// Defaults to the first entry of `lambdas`.
    pub lambda: Option<f64>,
    /// Eigenpairs nearest these energies; when empty, `pairs` eigenpairs
    /// at interior quantiles of the spectrum away from `E = 0`.
    pub energies: Vec<f64>,
    pub half_width: usize,
    pub epsilon: f64,
    pub max_q: u64,
    pub pairs: usize,
}

impl Default for GordonOptions {
    fn default() -> Self {
        GordonOptions {
            lambda: None,
            energies: Vec::new(),
            half_width: 300,
            epsilon: 0.05,
            max_q: 10_000,
            pairs: 5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaOptions {
    /// A shipped suite name or `"all"`; when absent the run config itself is used.
    pub suite: Option<String>,
    pub epsilon: Option<f64>,
    /// Grids for the custom suite; each falls back to the top-level grid.
    pub energies: Option<Grid>,
    pub lambdas: Option<Grid>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub frequency: Option<FrequencySpec>,
    pub phase: Option<PhaseSpec>,
    pub energies: Grid,
    pub lambdas: Grid,
    /// First phase of the Weyl sampling sequence.
    pub seed_phase: f64,
    pub precision_bits: u32,
    pub le: LeOptions,
    pub phase_diagram: PhaseDiagramOptions,
    pub eigen: EigenOptions,
    pub gordon: GordonOptions,
    pub lemma: LemmaOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            frequency: None,
            phase: None,
            energies: Grid::default(),
            lambdas: Grid::default(),
            seed_phase: 0.1,
            precision_bits: 256,
            le: LeOptions::default(),
            phase_diagram: PhaseDiagramOptions::default(),
            eigen: EigenOptions::default(),
            gordon: GordonOptions::default(),
            lemma: LemmaOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))
    }

    pub fn frequency(&self) -> Result<&FrequencySpec, CliError> {
        self.frequency
            .as_ref()
            .ok_or_else(|| CliError::Config("missing frequency spec".into()))
    }

    pub fn phase(&self) -> Result<&PhaseSpec, CliError> {
        self.phase.as_ref().ok_or_else(|| CliError::Config("missing phase spec".into()))
    }

    pub fn energy_points(&self) -> Vec<f64> {
        self.energies.points()
    }

    pub fn lambda_points(&self) -> Vec<f64> {
        self.lambdas.points()
    }

    pub fn require_grids(&self) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let (e, l) = (self.energy_points(), self.lambda_points());
        if e.is_empty() || l.is_empty() {
            return Err(CliError::Config("energy and lambda grids must be nonempty".into()));
        }
        Ok((e, l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_grid_includes_endpoints() {
        let g = Grid::Range {
            start: -3.0,
            stop: 3.0,
            count: 61,
        };
        let p = g.points();
        assert_eq!(p.len(), 61);
        assert_eq!(p[0], -3.0);
        assert!((p[60] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn minimal_config_parses() {
        let c = RunConfig::from_json(r#"{"frequency": {"kind": "real", "value": "golden", "depth": 20}, "lambdas": [1.0]}"#)
            .unwrap();
        assert!(c.phase.is_none());
        assert_eq!(c.lambda_points(), vec![1.0]);
        assert_eq!(c.le.steps, 100_000);
        assert!(RunConfig::from_json(r#"{"frequencey": {}}"#).is_err());
    }
}
