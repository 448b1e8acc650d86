//! Experiment configuration (JSON) and the parameter auto-rules.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversaries::AdversaryKind;
use crate::agents::{AgentModel, ResponseMode, TieRule, UtilityFunction};
use crate::error::{Error, Result};
use crate::forecaster::ForecasterParams;

/// A number, or `"auto"` for the horizon-dependent default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl Default for Param {
    fn default() -> Self {
        Param::Auto(AutoTag::Auto)
    }
}

impl Param {
    pub fn auto() -> Self {
        Self::default()
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Param::Value(v) => Some(*v),
            Param::Auto(_) => None,
        }
    }

    pub fn or_else(&self, f: impl FnOnce() -> f64) -> f64 {
        self.value().unwrap_or_else(f)
    }
}

/// `ε = 1/√T` for one free dimension, `T^{−3/8}` for two.
pub fn auto_epsilon(free_dims: usize, horizon: usize) -> Result<f64> {
    let t = horizon.max(1) as f64;
    match free_dims {
        1 => Ok((1.0 / t.sqrt()).min(1.0)),
        2 => Ok(t.powf(-3.0 / 8.0).min(1.0)),
        d => Err(Error::Config(format!("no automatic epsilon for {d} free dimensions; set epsilon explicitly"))),
    }
}

/// Snapped agents: `δ = 1/((d+1)√T)`.
pub fn auto_snap_delta(free_dims: usize, horizon: usize) -> f64 {
    (1.0 / ((free_dims as f64 + 1.0) * (horizon.max(1) as f64).sqrt())).min(1.0)
}

/// Logistic agents: `η = (ln k + 1)·√T`.
pub fn auto_logistic_eta(k: usize, horizon: usize) -> f64 {
    ((k as f64).ln() + 1.0) * (horizon.max(1) as f64).sqrt()
}

/// Bucket width `τ = 1/(k·L·T^{1/3})`, capped at 1.
pub fn auto_tau(k: usize, lipschitz: f64, horizon: usize) -> f64 {
    (1.0 / (k as f64 * lipschitz.max(1e-12) * (horizon.max(1) as f64).cbrt())).min(1.0)
}

pub const LOGISTIC_DELTA_RANGE: (f64, f64) = (1e-3, 0.5);

/// Cover resolution for logistic families: `ln(1/(k√T) + 1)/((d+1)√T)`
/// clamped to [`LOGISTIC_DELTA_RANGE`]. Returns the value and whether it was
/// clamped.
pub fn auto_logistic_delta(k: usize, free_dims: usize, horizon: usize) -> (f64, bool) {
    let st = (horizon.max(1) as f64).sqrt();
    let raw = (1.0 / (k as f64 * st)).ln_1p() / ((free_dims as f64 + 1.0) * st);
    let (lo, hi) = LOGISTIC_DELTA_RANGE;
    let clamped = raw.clamp(lo, hi);
    (clamped, clamped != raw)
}

/// Independent sub-seed for a named component.
pub fn derive_seed(master: u64, component: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(component.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// All intervals of a one-dimensional grid.
    Intervals,
    /// All convex-closed subsets of a two-dimensional grid.
    Polygons,
    /// Best-response events of every utility in a δ-cover.
    BrCover {
        k: usize,
        #[serde(default)]
        delta: Param,
        #[serde(default)]
        tie_rule: TieRule,
    },
    /// Logistic-probability bucket events of every utility in a δ-cover.
    LogisticCover {
        k: usize,
        #[serde(default)]
        delta: Param,
        #[serde(default)]
        eta: Param,
        #[serde(default)]
        tau: Param,
    },
    /// Best-response events of the configured agents' own utilities.
    AgentBestResponse {
        #[serde(default)]
        tie_rule: TieRule,
    },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Intervals => "intervals",
            FamilySpec::Polygons => "polygons",
            FamilySpec::BrCover { .. } => "br_cover",
            FamilySpec::LogisticCover { .. } => "logistic_cover",
            FamilySpec::AgentBestResponse { .. } => "agent_best_response",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryName {
    Constant,
    IidUniformCorners,
    Periodic,
    Scripted,
    GreedyBias,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub kind: AdversaryName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_predictions: Option<Vec<Vec<f64>>>,
    /// CSV script; relative paths resolve against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_file: Option<PathBuf>,
}

impl AdversarySpec {
    pub fn from_kind(kind: &AdversaryKind) -> Self {
        let mut s = Self {
            kind: AdversaryName::Constant,
            seed: None,
            y: None,
            sequence: None,
            outcomes: None,
            forced_predictions: None,
            script_file: None,
        };
        match kind {
            AdversaryKind::Constant { y } => s.y = Some(y.clone()),
            AdversaryKind::IidUniformCorners => s.kind = AdversaryName::IidUniformCorners,
            AdversaryKind::Periodic { sequence } => {
                s.kind = AdversaryName::Periodic;
                s.sequence = Some(sequence.clone());
            }
            AdversaryKind::Scripted { outcomes, forced_predictions } => {
                s.kind = AdversaryName::Scripted;
                s.outcomes = Some(outcomes.clone());
                s.forced_predictions = forced_predictions.clone();
            }
            AdversaryKind::GreedyBias => s.kind = AdversaryName::GreedyBias,
        }
        s
    }

    pub fn resolve(&self) -> Result<AdversaryKind> {
        let missing = |what: &str| Error::Config(format!("{:?} adversary needs `{what}`", self.kind));
        Ok(match self.kind {
            AdversaryName::Constant => AdversaryKind::Constant { y: self.y.clone().ok_or_else(|| missing("y"))? },
            AdversaryName::IidUniformCorners => AdversaryKind::IidUniformCorners,
            AdversaryName::Periodic => {
                AdversaryKind::Periodic { sequence: self.sequence.clone().ok_or_else(|| missing("sequence"))? }
            }
            AdversaryName::Scripted => match (&self.script_file, &self.outcomes) {
                (Some(path), _) => AdversaryKind::scripted_from_csv(path)?,
                (None, Some(outcomes)) => AdversaryKind::Scripted {
                    outcomes: outcomes.clone(),
                    forced_predictions: self.forced_predictions.clone(),
                },
                (None, None) => return Err(missing("outcomes or script_file")),
            },
            AdversaryName::GreedyBias => AdversaryKind::GreedyBias,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Exact,
    Snapped,
    Logistic,
}

/// Either explicit payoff vectors or the string `"random"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSource {
    Explicit(Vec<Vec<f64>>),
    Random(RandomTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomTag {
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: usize,
    pub mode: ModeName,
    pub vectors: VectorSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Param>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Param>,
    #[serde(default)]
    pub tie_rule: TieRule,
    /// Random vectors only: number of actions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<usize>,
    /// Random vectors only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Random vectors only: round entries to multiples of this step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<f64>,
}

impl AgentSpec {
    pub fn exact(id: usize, vectors: Vec<Vec<f64>>) -> Self {
        Self {
            id,
            mode: ModeName::Exact,
            vectors: VectorSource::Explicit(vectors),
            eta: None,
            delta: None,
            tie_rule: TieRule::HighestIndex,
            actions: None,
            seed: None,
            lattice: None,
        }
    }

    pub fn random(id: usize, mode: ModeName, actions: usize, seed: u64) -> Self {
        Self { mode, vectors: VectorSource::Random(RandomTag::Random), actions: Some(actions), seed: Some(seed), ..Self::exact(id, vec![]) }
    }

    /// Entries uniform on `[0,1]` (optionally on a lattice), one vector of
    /// length `dim` per action.
    pub fn utility(&self, dim: usize, lifted: bool) -> Result<UtilityFunction> {
        let vectors = match &self.vectors {
            VectorSource::Explicit(v) => v.clone(),
            VectorSource::Random(_) => {
                let k = self.actions.ok_or_else(|| Error::Config(format!("agent {}: random vectors need `actions`", self.id)))?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(self.id as u64));
                (0..k)
                    .map(|_| {
                        (0..dim)
                            .map(|_| {
                                let x: f64 = rng.random();
                                match self.lattice {
                                    Some(step) if step > 0.0 => ((x / step).round() * step).min(1.0),
                                    _ => x,
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        let u = UtilityFunction::new(self.id, vectors, lifted).map_err(|e| Error::Config(format!("agent {}: {e}", self.id)))?;
        if u.dim() != dim {
            return Err(Error::Config(format!("agent {}: vectors have length {}, grid dimension is {dim}", self.id, u.dim())));
        }
        Ok(u)
    }

    pub fn model(&self, dim: usize, lifted: bool, free_dims: usize, horizon: usize) -> Result<AgentModel> {
        let u = self.utility(dim, lifted)?;
        let k = u.action_count();
        let mode = match self.mode {
            ModeName::Exact => ResponseMode::Exact { tie_rule: self.tie_rule },
            ModeName::Snapped => ResponseMode::Snapped {
                delta: self.delta.unwrap_or_default().or_else(|| auto_snap_delta(free_dims, horizon)),
                tie_rule: self.tie_rule,
            },
            ModeName::Logistic => {
                ResponseMode::Logistic { eta: self.eta.unwrap_or_default().or_else(|| auto_logistic_eta(k, horizon)) }
            }
        };
        AgentModel::new(u, mode).map_err(|e| Error::Config(format!("agent {}: {e}", self.id)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    #[serde(default)]
    pub master: u64,
    /// Number of reseeded runs performed by `run`.
    #[serde(default = "one")]
    pub replays: usize,
}

fn one() -> usize {
    1
}

impl Default for Seeds {
    fn default() -> Self {
        Self { master: 0, replays: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
    /// Also write the bit-packed membership matrix of the family.
    #[serde(default)]
    pub membership_matrix: bool,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

/// Desk-scale limits; a config may override any subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    pub grid: u128,
    pub events: u128,
    pub horizon: u128,
    pub cover: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Self { grid: 10_000, events: 5_000_000, horizon: 1_000_000, cover: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: usize,
    /// Free dimension `d` of the outcome box.
    pub dim: usize,
    /// Append a coordinate pinned to 1, so affine utilities become linear.
    #[serde(default)]
    pub lifted: bool,
    #[serde(default)]
    pub epsilon: Param,
    /// Explicit per-coordinate grid values, replacing the ε-net.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Vec<f64>>,
    pub family: FamilySpec,
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub forecaster: ForecasterParams,
    #[serde(default)]
    pub strict: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub caps: Caps,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file. A relative `script_file` resolves against the
    /// file's directory; output paths stay relative to the working directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = cfg.adversary.script_file.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn grid_dim(&self) -> usize {
        self.dim + usize::from(self.lifted)
    }

    /// The resolution actually used: explicit, or the auto-rule.
    pub fn resolved_epsilon(&self) -> Result<f64> {
        match self.epsilon {
            Param::Value(e) => Ok(e),
            Param::Auto(_) => auto_epsilon(self.dim, self.horizon),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_rules() {
        assert_eq!(auto_epsilon(1, 4096).unwrap(), 1.0 / 64.0);
        assert!((auto_epsilon(2, 4096).unwrap() - 4096f64.powf(-0.375)).abs() < 1e-15);
        assert!(auto_epsilon(3, 10).is_err());
        assert_eq!(auto_snap_delta(1, 4096), 1.0 / 128.0);
        assert_eq!(auto_logistic_eta(1, 100), 10.0);
        assert!((auto_logistic_eta(2, 4096) - (2f64.ln() + 1.0) * 64.0).abs() < 1e-12);
        assert!((auto_tau(2, 1.0, 4096) - 1.0 / 32.0).abs() < 1e-12);
        let (d, clamped) = auto_logistic_delta(2, 1, 4096);
        assert!(clamped && d == LOGISTIC_DELTA_RANGE.0);
        // k = 1, T = 1: ln 2 / 2 lies inside the range
        let (d, clamped) = auto_logistic_delta(1, 1, 1);
        assert!(!clamped && (d - 2f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn seeds_differ_per_component() {
        assert_ne!(derive_seed(1, "forecaster"), derive_seed(1, "adversary"));
        assert_eq!(derive_seed(1, "forecaster"), derive_seed(1, "forecaster"));
    }

    #[test]
    fn caps_override_a_subset() {
        let c = ExperimentConfig::from_json(
            r#"{"horizon": 5, "dim": 1, "family": {"kind": "intervals"},
                "adversary": {"kind": "iid_uniform_corners"}, "caps": {"grid": 7}}"#,
        )
        .unwrap();
        assert_eq!(c.caps, Caps { grid: 7, ..Caps::default() });
    }

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"horizon": 16, "dim": 1, "family": {"kind": "intervals"},
                "adversary": {"kind": "constant", "y": [1.0]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.epsilon, Param::auto());
        assert_eq!(cfg.resolved_epsilon().unwrap(), 0.25);
        assert_eq!(cfg.seeds.replays, 1);
        assert!(ExperimentConfig::from_json(r#"{"horizon": 16}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"horizon": 1, "dim": 1, "family": {"kind": "intervals"}, "adversary": {"kind": "constant"}, "bogus": 1}"#
        )
        .is_err());
    }

    #[test]
    fn parses_agents_and_params() {
        let cfg = ExperimentConfig::from_json(
            r#"{"horizon": 100, "dim": 1, "lifted": true, "epsilon": 0.1,
                "family": {"kind": "logistic_cover", "k": 2, "delta": 0.5, "eta": "auto", "tau": 0.25},
                "adversary": {"kind": "periodic", "sequence": [[0.0], [1.0]]},
                "agents": [
                  {"id": 0, "mode": "exact", "vectors": [[0.1, 0.2], [0.3, 0.4]]},
                  {"id": 1, "mode": "logistic", "eta": 4.0, "vectors": "random", "actions": 3, "seed": 5}
                ]}"#,
        )
        .unwrap();
        assert_eq!(cfg.epsilon, Param::Value(0.1));
        let m = cfg.agents[1].model(2, true, 1, 100).unwrap();
        assert_eq!(m.utility.action_count(), 3);
        assert_eq!(m.mode, ResponseMode::Logistic { eta: 4.0 });
        let again = cfg.agents[1].model(2, true, 1, 100).unwrap();
        assert_eq!(m, again);
        assert!(cfg.agents[0].model(3, true, 2, 100).is_err());
    }
}
