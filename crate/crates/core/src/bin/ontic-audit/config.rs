use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ontic::product::ContextList;
use ontic::quantum::{Context, PureState, C64};

use crate::Failure;

/// One JSON file with a section per subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub validate: Option<ValidateSection>,
    pub onticity: Option<OnticitySection>,
    pub determinate: Option<DeterminateSection>,
    #[serde(rename = "mkc-gen")]
    pub mkc_gen: Option<MkcGenSection>,
    pub antidistinguish: Option<AntidistinguishSection>,
    pub discriminate: Option<DiscriminateSection>,
}

/// Real amplitudes, or `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

impl StateSpec {
    pub fn state(&self) -> Result<PureState, Failure> {
        let s = match self {
            StateSpec::Real(v) => PureState::from_real(v),
            StateSpec::Complex(v) => {
                PureState::from_complex(&v.iter().map(|p| C64::new(p[0], p[1])).collect::<Vec<_>>())
            }
        };
        s.map_err(|e| Failure::Usage(format!("bad state {self:?}: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedState {
    pub label: String,
    pub state: StateSpec,
}

pub fn named_states(list: &[NamedState]) -> Result<Vec<(String, PureState)>, Failure> {
    list.iter()
        .map(|n| Ok((n.label.clone(), n.state.state()?)))
        .collect()
}

/// Explicit contexts and preparations for a Gudder model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GudderFile {
    pub dim: usize,
    pub contexts: Vec<Context>,
    pub preparations: Vec<NamedState>,
}

impl GudderFile {
    pub fn context_list(&self) -> Result<ContextList, Failure> {
        ContextList::new(self.dim, self.contexts.clone()).map_err(|e| Failure::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Contexts drawn from the seed, `contexts_per_state` through each
    /// preparation.
    Gudder {
        dim: usize,
        preparations: Vec<NamedState>,
        contexts_per_state: usize,
    },
    GudderFile {
        path: PathBuf,
    },
    OnticFile {
        path: PathBuf,
    },
    /// Gudder measures over a generated MKC set.
    Mkc {
        dim: usize,
        preparations: Vec<NamedState>,
        targets: usize,
        epsilon: f64,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default = "default_budget")]
        budget: usize,
    },
}

pub fn default_tau() -> f64 {
    ontic::mkc::DEFAULT_TAU
}

pub fn default_budget() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub model: ModelSpec,
    #[serde(default)]
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnticitySection {
    #[serde(default)]
    pub gudder: Option<GudderTrajectory>,
    #[serde(default)]
    pub mkc: Option<MkcTrajectory>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GudderTrajectory {
    pub dim: usize,
    pub psi: StateSpec,
    pub phi: StateSpec,
    pub ks: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MkcTrajectory {
    pub dim: usize,
    pub psi: StateSpec,
    pub phi: StateSpec,
    pub ns: Vec<u32>,
    pub depths: Vec<usize>,
    pub targets: usize,
    pub epsilon: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeterminateSection {
    pub dim: usize,
    /// Explicit states; otherwise `random_states` Haar-random ones.
    #[serde(default)]
    pub states: Vec<NamedState>,
    #[serde(default)]
    pub random_states: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MkcGenSection {
    pub dim: usize,
    pub targets: usize,
    pub epsilon: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Random pure preparations for the deviation report.
    #[serde(default)]
    pub preparations: usize,
    #[serde(default)]
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntidistinguishSection {
    #[serde(default)]
    pub measurement: Measurement,
    #[serde(default)]
    pub etas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_trials() -> usize {
    100
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Measurement {
    #[default]
    Pbr,
    Custom {
        states: Vec<StateSpec>,
        /// Effect matrices as rows of `[re, im]` pairs.
        effects: Vec<Vec<Vec<[f64; 2]>>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscriminateSection {
    pub models: Vec<ModelSpec>,
    pub pairs: Vec<[String; 2]>,
    pub shots: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
}

fn default_runs() -> usize {
    1
}

pub fn load(path: &Path) -> Result<(RunConfig, serde_json::Value), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("malformed config {}: {e}", path.display())))?;
    let config = serde_json::from_value(value.clone())
        .map_err(|e| Failure::Usage(format!("malformed config {}: {e}", path.display())))?;
    Ok((config, value))
}

/// Resolves `path` against the directory of the config file.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(path)
    }
}
