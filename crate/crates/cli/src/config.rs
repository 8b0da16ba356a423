use bogobind::asymptotics::{FitModel, SweepConfig};
use bogobind::{EigenSettings, PotentialSpec, TorusModel};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workflow {
    Eval,
    Ed,
    Study,
    Selfcheck,
}

impl Workflow {
    pub fn name(self) -> &'static str {
        match self {
            Workflow::Eval => "eval",
            Workflow::Ed => "ed",
            Workflow::Study => "study",
            Workflow::Selfcheck => "selfcheck",
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// Defaults to 1/N.
    #[serde(default)]
    pub lambda: Option<f64>,
    pub potential: PotentialSpec,
    pub mode_cutoff: f64,
    #[serde(default = "yes")]
    pub include_zero_mode: bool,
}

impl ModelConfig {
    pub fn build(&self) -> Result<TorusModel, CliError> {
        let model = TorusModel::new(self.d, self.n, self.potential.clone(), self.mode_cutoff)
            .map_err(|e| CliError::Config(format!("model: {e}")))?
            .with_zero_mode(self.include_zero_mode);
        let model = match self.lambda {
            Some(l) => model.with_lambda(l),
            None => model,
        };
        model.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
        Ok(model)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdConfig {
    pub k: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub dense_threshold: Option<usize>,
    pub max_krylov: Option<usize>,
    /// Starting excitation cutoff for the Bogoliubov Hamiltonian.
    pub excitation_cutoff: Option<usize>,
}

impl EdConfig {
    pub fn settings(&self) -> Result<EigenSettings, CliError> {
        let d = EigenSettings::default();
        let s = EigenSettings {
            k: self.k.unwrap_or(d.k),
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            seed: self.seed.unwrap_or(d.seed),
            dense_threshold: self.dense_threshold.unwrap_or(d.dense_threshold),
            max_krylov: self.max_krylov.unwrap_or(d.max_krylov),
        };
        if !(s.tol > 0.0 && s.tol.is_finite()) {
            return Err(CliError::Config(format!("ed.tol must be positive, got {}", s.tol)));
        }
        if s.k == 0 || s.max_iter == 0 || s.max_krylov < 2 {
            return Err(CliError::Config("ed.k and ed.max_iter must be positive, ed.max_krylov at least 2".into()));
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "N_values")]
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub coupling: Option<f64>,
    #[serde(default)]
    pub fit: FitModel,
    #[serde(default = "yes")]
    pub overlaps: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub workflow: Option<Workflow>,
    pub model: ModelConfig,
    #[serde(default)]
    pub ed: EdConfig,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Rejects a config whose `workflow` tag names a different verb.
    pub fn check_workflow(&self, verb: Workflow) -> Result<(), CliError> {
        match self.workflow {
            Some(w) if w != verb => Err(CliError::Config(format!(
                "config is tagged for `{}` but was run with `{}`",
                w.name(),
                verb.name()
            ))),
            _ => Ok(()),
        }
    }

    pub fn sweep(&self) -> Result<SweepConfig, CliError> {
        let section = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("missing field `sweep`".into()))?;
        let model = self.model.build()?;
        let mut cfg = SweepConfig::new(model, section.n_values.clone());
        cfg.coupling = section.coupling.unwrap_or(1.0);
        cfg.fit = section.fit;
        cfg.eigen = self.ed.settings()?;
        cfg.overlaps = section.overlaps;
        if let Some(m) = self.ed.excitation_cutoff {
            cfg.excitation_cutoff = m;
        }
        cfg.validate().map_err(|e| CliError::Config(format!("sweep: {e}")))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"model": {"d": 1, "N": 4, "potential": {"entries": [[1, 1.0], [-1, 1.0]]}, "mode_cutoff": 6.5}}"#;

    #[test]
    fn lambda_defaults_to_inverse_n() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.model.build().unwrap().lambda, 0.25);
    }

    #[test]
    fn missing_particle_number_is_named() {
        let text = MINIMAL.replace(r#""N": 4, "#, "");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("`N`"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace(r#""d": 1"#, r#""d": 1, "dims": 2"#);
        assert!(RunConfig::parse(&text).is_err());
        let text = MINIMAL.replace('}', r#", "ed": {"tolerance": 1}}"#);
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn workflow_tag_must_match() {
        let text = MINIMAL.replacen('{', r#"{"workflow": "study", "#, 1);
        let c = RunConfig::parse(&text).unwrap();
        assert!(c.check_workflow(Workflow::Study).is_ok());
        assert!(c.check_workflow(Workflow::Ed).is_err());
    }
}
