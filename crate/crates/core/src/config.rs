//! Frequency and phase descriptions shared by the harness and the CLI.

use serde::{Deserialize, Serialize};

use crate::arithmetic::{
    arithmetic_profile, build_liouville, build_resonant_phase, cf_expand, cf_from_u64, ArithmeticError,
    ArithmeticProfile, ContinuedFraction,
};
use crate::real::BigReal;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FrequencySpec {
    /// Continued-fraction coefficients `a_1, a_2, ...`.
    Coefficients { coeffs: Vec<u64> },
    /// A real number (`"golden"`, `"silver"`, `"p/q"` or a decimal) expanded to `depth`.
    Real { value: String, depth: usize },
    Liouville { beta_target: f64, depth: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PhaseSpec {
    Real { value: String },
    Resonant { delta_target: f64 },
}

/// A frequency, a phase and their arithmetic profile.
#[derive(Clone, Debug)]
pub struct ResolvedArithmetic {
    pub cf: ContinuedFraction,
    pub theta: BigReal,
    pub profile: ArithmeticProfile,
    /// Scales where the resonant construction hit its target.
    pub resonant_subsequence: Vec<usize>,
}

pub fn resolve_frequency(spec: &FrequencySpec, precision_bits: u32) -> Result<ContinuedFraction, ArithmeticError> {
    match spec {
        FrequencySpec::Coefficients { coeffs } => cf_from_u64(coeffs, precision_bits),
        FrequencySpec::Real { value, depth } => {
            let x = BigReal::parse(value, precision_bits)
                .ok_or_else(|| ArithmeticError::InvalidArgument(format!("cannot parse frequency {value:?}")))?;
            cf_expand(&x, *depth, precision_bits)
        }
        FrequencySpec::Liouville { beta_target, depth } => build_liouville(*beta_target, *depth).map(|l| l.cf),
    }
}

/// Resolves both specs; the profile uses every scale with a successor and
/// `n_min = max(1, depth / 2)`.
pub fn resolve(frequency: &FrequencySpec, phase: &PhaseSpec, precision_bits: u32) -> Result<ResolvedArithmetic, ArithmeticError> {
    let cf = resolve_frequency(frequency, precision_bits)?;
    let depth = cf.depth().saturating_sub(1);
    match phase {
        PhaseSpec::Real { value } => {
            let theta = BigReal::parse(value, precision_bits)
                .ok_or_else(|| ArithmeticError::InvalidArgument(format!("cannot parse phase {value:?}")))?;
            let n_min = (depth / 2).max(1).min(depth);
            let profile = arithmetic_profile(&cf, &theta, depth, n_min)?;
            Ok(ResolvedArithmetic {
                cf,
                theta,
                profile,
                resonant_subsequence: Vec::new(),
            })
        }
        PhaseSpec::Resonant { delta_target } => {
            let r = build_resonant_phase(&cf, *delta_target, depth)?;
            Ok(ResolvedArithmetic {
                cf,
                theta: r.theta,
                profile: r.profile,
                resonant_subsequence: r.subsequence,
            })
        }
    }
}
