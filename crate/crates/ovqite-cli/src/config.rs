//! Experiment configuration: a sectioned TOML file capturing every knob of
//! a run, archivable next to its outputs. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ovqite::{Algorithm, EstimatorMode, EvolutionConfig, SetName, SolverKind, TfimParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub ansatz: AnsatzSection,
    pub evolution: EvolutionSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub j: f64,
    pub h: f64,
    #[serde(default = "default_true")]
    pub periodic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    pub layers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    /// "vqite" or "ovqite".
    pub algorithm: String,
    /// "S_H", "S_NN" or "S_IM"; required for ovqite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_set: Option<String>,
    pub delta: f64,
    pub steps: usize,
    /// "exact" or "shots".
    pub mode: String,
    /// Shots per circuit; required when mode = "shots".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    /// Relative singular-value cutoff; tabulated default when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rcond: Option<f64>,
    /// "pinv" (default) or "eiv".
    #[serde(default = "default_solver")]
    pub solver: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: String,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_true() -> bool {
    true
}

fn default_solver() -> String {
    "pinv".into()
}

fn default_format() -> String {
    "csv".into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    fn validate(&self) -> anyhow::Result<()> {
        self.algorithm()?;
        self.mode()?;
        self.solver()?;
        self.operator_set()?;
        if self.output.format != "csv" {
            anyhow::bail!("unsupported output format '{}'", self.output.format);
        }
        Ok(())
    }

    pub fn algorithm(&self) -> anyhow::Result<Algorithm> {
        Ok(self.evolution.algorithm.parse::<Algorithm>()?)
    }

    pub fn operator_set(&self) -> anyhow::Result<Option<SetName>> {
        match &self.evolution.operator_set {
            None => Ok(None),
            Some(name) => Ok(Some(name.parse::<SetName>()?)),
        }
    }

    pub fn mode(&self) -> anyhow::Result<EstimatorMode> {
        match self.evolution.mode.as_str() {
            "exact" => Ok(EstimatorMode::Exact),
            "shots" => {
                let shots = self
                    .evolution
                    .shots
                    .ok_or_else(|| anyhow::anyhow!("mode = \"shots\" needs a shots count"))?;
                if shots == 0 {
                    anyhow::bail!("shots must be >= 1");
                }
                Ok(EstimatorMode::Shots(shots))
            }
            other => anyhow::bail!("unknown mode '{other}' (expected \"exact\" or \"shots\")"),
        }
    }

    pub fn solver(&self) -> anyhow::Result<SolverKind> {
        match self.evolution.solver.as_str() {
            "pinv" => Ok(SolverKind::Pinv),
            "eiv" => Ok(SolverKind::Eiv),
            other => anyhow::bail!("unknown solver '{other}' (expected \"pinv\" or \"eiv\")"),
        }
    }

    pub fn model_params(&self) -> TfimParams {
        TfimParams {
            n: self.model.n,
            j: self.model.j,
            h: self.model.h,
            periodic: self.model.periodic,
        }
    }

    /// Library evolution config; `seed_override` replaces the file seed.
    pub fn evolution_config(&self, seed_override: Option<u64>) -> anyhow::Result<EvolutionConfig> {
        Ok(EvolutionConfig {
            algorithm: self.algorithm()?,
            operator_set: self.operator_set()?,
            delta: self.evolution.delta,
            steps: self.evolution.steps,
            mode: self.mode()?,
            rcond: self.evolution.rcond,
            seed: seed_override.unwrap_or(self.evolution.seed),
            solver: self.solver()?,
        })
    }

    /// Stable hash of the canonical serialized form, for provenance headers.
    pub fn hash(&self) -> anyhow::Result<String> {
        let canonical = self.to_toml()?;
        let digest = Sha256::digest(canonical.as_bytes());
        Ok(hex_prefix(&digest, 16))
    }
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}
