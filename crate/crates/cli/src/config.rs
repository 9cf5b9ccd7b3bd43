//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use nlskdv_core::bourgain::{Lattice, LemmaId, LemmaParams};
use nlskdv_core::commutators::ETermReading;
use nlskdv_core::continuation::{Branch, ContinuationConfig};
use nlskdv_core::data::DataSpec;
use nlskdv_core::i_operator::{IOperatorSpec, SymbolVariant};
use nlskdv_core::solver::{SolverConfig, SystemParams};
use nlskdv_core::spectral::Grid;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    AlmostConservationSweep,
    IdentityResidual,
    LemmaRatios,
    Thresholds,
    Continuation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IOperatorConfig {
    pub n: f64,
    pub s: f64,
    #[serde(default)]
    pub variant: SymbolVariant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub t_final: f64,
    /// Number of output rows after the initial one.
    #[serde(default = "default_samples")]
    pub samples: u64,
}

fn default_samples() -> u64 {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<f64>,
    pub s: f64,
    pub delta: f64,
    /// Steps between evaluations of the modified functionals.
    #[serde(default = "default_stride")]
    pub stride: u64,
    #[serde(default)]
    pub variant: SymbolVariant,
}

fn default_stride() -> u64 {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualConfig {
    pub t: f64,
    pub h_values: Vec<f64>,
    #[serde(default)]
    pub reading: ETermReading,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaEntry {
    pub lemma: LemmaId,
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub b_prime: f64,
}

impl LemmaEntry {
    pub fn params(&self) -> LemmaParams {
        LemmaParams { k: self.k, s: self.s, b: self.b, b_prime: self.b_prime }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaRatiosConfig {
    pub lattices: Vec<Lattice>,
    pub sample_count: usize,
    #[serde(default = "yes")]
    pub strichartz: bool,
    #[serde(default)]
    pub lemmas: Vec<LemmaEntry>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    pub branch: Branch,
}

/// One experiment run. Sections not used by the chosen experiment are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_operator: Option<IOperatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_residual: Option<ResidualConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma_ratios: Option<LemmaRatiosConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<ContinuationConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("nlskdv-output")
}

fn missing(section: &str) -> CliError {
    CliError::Validation(format!("the experiment needs a \"{section}\" section"))
}

fn require<'a, T>(value: &'a Option<T>, section: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| missing(section))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(require(&self.grid, "grid")?.m)?)
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        require(&self.solver, "solver").copied()
    }

    pub fn system(&self) -> Result<SystemParams> {
        let p = *require(&self.system, "system")?;
        if ![p.alpha, p.beta, p.gamma].iter().all(|x| x.is_finite()) {
            return Err(CliError::Validation("system coefficients must be finite".into()));
        }
        Ok(p)
    }

    pub fn data(&self) -> Result<DataSpec> {
        require(&self.data, "data").copied()
    }

    /// The configured operator, or the identity when the section is absent.
    pub fn i_operator(&self) -> Result<IOperatorSpec> {
        match self.i_operator {
            Some(c) => Ok(IOperatorSpec::for_regularity(c.n, c.s, c.variant)?),
            None => Ok(IOperatorSpec::new(1.0, 0.0, SymbolVariant::Smooth)?),
        }
    }

    pub fn simulate(&self) -> Result<&SimulateConfig> {
        require(&self.simulate, "simulate")
    }

    pub fn sweep(&self) -> Result<&SweepConfig> {
        require(&self.sweep, "sweep")
    }

    pub fn identity_residual(&self) -> Result<&ResidualConfig> {
        require(&self.identity_residual, "identity_residual")
    }

    pub fn lemma_ratios(&self) -> Result<&LemmaRatiosConfig> {
        require(&self.lemma_ratios, "lemma_ratios")
    }

    pub fn thresholds(&self) -> Result<&ThresholdsConfig> {
        require(&self.thresholds, "thresholds")
    }

    pub fn continuation(&self) -> Result<&ContinuationConfig> {
        require(&self.continuation, "continuation")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_experiment_lists_valid_names() {
        let err = ExperimentConfig::from_json(r#"{"experiment": "bogus"}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("almost_conservation_sweep") && msg.contains("thresholds"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"experiment": "thresholds", "thresholds": {"branch": "resonant"}, "colour": 1}"#);
        assert!(err.is_err());
    }

    #[test]
    fn missing_section_is_named() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "simulate"}"#).unwrap();
        assert!(cfg.grid().unwrap_err().to_string().contains("\"grid\""));
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn identity_operator_by_default() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "simulate"}"#).unwrap();
        assert!(cfg.i_operator().unwrap().is_identity_up_to(1 << 20));
    }
}
