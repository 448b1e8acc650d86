//! The protocol loop: adversary commits, forecaster emits, outcome is
//! revealed, state updates. Metrics are computed from the finished transcript.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{
    auto_logistic_delta, auto_logistic_eta, auto_snap_delta, auto_tau, derive_seed, ExperimentConfig, FamilySpec,
    Param,
};
use crate::adversaries::{AdversaryKind, AdversaryState};
use crate::agents::{
    expected_swap_regret, realized_swap_regret, snap_utility, AgentModel, ResponseMode, SwapRegretResult,
    UtilityCover, UtilityFunction,
};
use crate::error::{Error, Result};
use crate::events::{
    best_response_events, convex_polygon_events_2d, intervals_1d, logistic_bucket_events, BucketScheme, EventFamily,
};
use crate::forecaster::{forecast_round, update_state, ForecasterParams, ForecasterState, RoundDiagnostics};
use crate::geometry::{ForecastDistribution, PredictionGrid};
use crate::metrics::{conditional_bias, l1_calibration, l2_calibration, weighted_bucket_bias, BiasReport, WeightedBucketBias};
use crate::transcript::{outcome_commitment, Transcript};

/// Above this many (utility, action) pairs only the agents' own cover
/// elements get a weighted-bias check.
const WEIGHTED_CHECK_LIMIT: usize = 20_000;

/// Parameters as actually used, after auto-rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub epsilon: f64,
    pub grid_size: usize,
    pub grid_uniform: bool,
    pub family_size: usize,
    pub learning_rate: f64,
    pub gap_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cover_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cover_size: Option<usize>,
    /// The logistic cover δ came from the auto-rule and was clamped.
    pub delta_clamped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family_eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub forecaster_seed: u64,
    pub adversary_seed: u64,
    pub warnings: Vec<String>,
}

/// Everything a run needs, built from a config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Arc<PredictionGrid>,
    pub family: Arc<EventFamily>,
    pub agents: Vec<AgentModel>,
    /// Lattice covers for snapped agents, one per agent (None otherwise).
    pub agent_covers: Vec<Option<Arc<UtilityCover>>>,
    /// The materialized cover behind a cover family.
    pub family_cover: Option<Arc<UtilityCover>>,
    pub bucket: Option<(f64, BucketScheme)>,
    pub adversary: AdversaryKind,
    pub params: ForecasterParams,
    pub resolved: ResolvedParams,
}

fn cap_check(what: &str, size: u128, cap: u128) -> Result<()> {
    if size > cap {
        return Err(Error::CapExceeded { what: what.into(), size, cap });
    }
    Ok(())
}

fn cap_usize(cap: u128) -> usize {
    usize::try_from(cap).unwrap_or(usize::MAX)
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    }
}

/// Validates a config and builds grid, family, agents and adversary.
pub fn prepare(config: &ExperimentConfig) -> Result<Setup> {
    let caps = config.caps;
    cap_check("horizon", config.horizon as u128, caps.horizon)?;
    if config.dim == 0 {
        return Err(Error::Config("dim must be at least 1".into()));
    }
    let t = config.horizon;
    let d = config.dim;
    let gdim = config.grid_dim();
    let mut warnings = Vec::new();

    let grid = match &config.axis {
        Some(axis) => {
            let size = (axis.len() as u128).saturating_pow(d as u32);
            cap_check("grid size", size, caps.grid)?;
            PredictionGrid::from_axis(gdim, axis.clone(), config.lifted).map_err(config_err)?
        }
        None => {
            let mut eps = config.resolved_epsilon()?;
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::Config(format!("epsilon must lie in (0,1], got {eps}")));
            }
            if matches!(config.family, FamilySpec::Polygons) {
                let steps = (1.0 / eps - 1e-9).ceil();
                let uniform = 1.0 / steps;
                if (uniform - eps).abs() > 1e-12 {
                    warnings.push(format!("polygon family needs a uniform grid; epsilon {eps} tightened to {uniform}"));
                    eps = uniform;
                }
            }
            cap_check("grid size", PredictionGrid::net_size(gdim, eps, config.lifted), caps.grid)?;
            PredictionGrid::epsilon_net(gdim, eps, config.lifted).map_err(config_err)?
        }
    };
    let grid = Arc::new(grid);
    let n = grid.len();

    let agents: Vec<AgentModel> =
        config.agents.iter().map(|a| a.model(gdim, config.lifted, d, t)).collect::<Result<_>>()?;
    let mut ids = std::collections::BTreeSet::new();
    for a in &agents {
        if !ids.insert(a.utility.id) {
            return Err(Error::Config(format!("duplicate agent id {}", a.utility.id)));
        }
        for w in a.utility.warnings(&grid) {
            warnings.push(w);
        }
    }
    let mut lattice: BTreeMap<(usize, u64), Arc<UtilityCover>> = BTreeMap::new();
    let mut agent_covers = Vec::with_capacity(agents.len());
    for a in &agents {
        agent_covers.push(match a.mode {
            ResponseMode::Snapped { delta, .. } => {
                if !config.lifted {
                    return Err(Error::Config(format!("snapped agent {} needs a lifted grid", a.utility.id)));
                }
                let k = a.utility.action_count();
                let c = match lattice.get(&(k, delta.to_bits())) {
                    Some(c) => c.clone(),
                    None => {
                        let c = Arc::new(UtilityCover::lattice(k, gdim, delta).map_err(config_err)?);
                        lattice.insert((k, delta.to_bits()), c.clone());
                        c
                    }
                };
                Some(c)
            }
            _ => None,
        });
    }

    let events_cap = cap_usize(caps.events);
    let mut cover_delta = None;
    let mut delta_clamped = false;
    let mut family_cover = None;
    let mut bucket = None;
    let build_cover = |k: usize, delta: f64| -> Result<Arc<UtilityCover>> {
        if !config.lifted {
            return Err(Error::Config("cover families need a lifted grid".into()));
        }
        if k == 0 {
            return Err(Error::Config("cover needs k ≥ 1".into()));
        }
        Ok(Arc::new(UtilityCover::build(k, gdim, delta, caps.cover).map_err(config_err)?))
    };
    let family = match &config.family {
        FamilySpec::Intervals => {
            if grid.free_dims() != 1 {
                return Err(Error::Config("interval family needs one free dimension".into()));
            }
            cap_check("event family size", (n as u128) * (n as u128 + 1) / 2, caps.events)?;
            intervals_1d(grid.clone())?
        }
        FamilySpec::Polygons => {
            if grid.free_dims() != 2 {
                return Err(Error::Config("polygon family needs two free dimensions".into()));
            }
            convex_polygon_events_2d(grid.clone(), events_cap).map_err(config_err)?
        }
        FamilySpec::BrCover { k, delta, tie_rule } => {
            let delta = delta.or_else(|| auto_snap_delta(d, t));
            let cover = build_cover(*k, delta)?;
            cap_check("event family size", (*k as u128) * cover.len() as u128, caps.events)?;
            cover_delta = Some(delta);
            let fam = best_response_events(&cover.utilities, grid.clone(), *tie_rule, events_cap)?;
            family_cover = Some(cover);
            fam
        }
        FamilySpec::LogisticCover { k, delta, eta, tau } => {
            let delta = match delta {
                Param::Value(v) => *v,
                Param::Auto(_) => {
                    let (v, clamped) = auto_logistic_delta(*k, d, t);
                    if clamped {
                        warnings.push(format!("logistic cover delta clamped to {v}"));
                    }
                    delta_clamped = clamped;
                    v
                }
            };
            let eta = eta.or_else(|| auto_logistic_eta(*k, t));
            // Cover utilities have entries in [0,1], so L ≤ d.
            let tau = tau.or_else(|| auto_tau(*k, d as f64, t));
            let scheme = BucketScheme::new(tau).map_err(config_err)?;
            let cover = build_cover(*k, delta)?;
            cap_check(
                "event family size",
                (*k as u128) * cover.len() as u128 * scheme.count() as u128,
                caps.events,
            )?;
            cover_delta = Some(delta);
            bucket = Some((eta, scheme));
            let fam = logistic_bucket_events(&cover.utilities, grid.clone(), eta, scheme, events_cap).map_err(config_err)?;
            family_cover = Some(cover);
            fam
        }
        FamilySpec::AgentBestResponse { tie_rule } => {
            if agents.is_empty() {
                return Err(Error::Config("agent_best_response family needs at least one agent".into()));
            }
            let us: Vec<UtilityFunction> = agents.iter().map(|a| a.utility.clone()).collect();
            best_response_events(&us, grid.clone(), *tie_rule, events_cap)?
        }
    };
    if family.is_empty() {
        return Err(Error::Config("event family is empty".into()));
    }
    let family = Arc::new(family);

    let adversary = config.adversary.resolve()?;
    let mut params = config.forecaster;
    params.strict |= config.strict;
    let forecaster_seed = derive_seed(config.seeds.master, "forecaster");
    let adversary_seed = config.adversary.seed.unwrap_or_else(|| derive_seed(config.seeds.master, "adversary"));
    let probe = ForecasterState::new(family.clone(), t, params, forecaster_seed).map_err(config_err)?;
    let resolved = ResolvedParams {
        epsilon: grid.epsilon(),
        grid_size: n,
        grid_uniform: grid.is_uniform(),
        family_size: family.len(),
        learning_rate: probe.learning_rate(),
        gap_tol: probe.gap_tol(),
        cover_size: family_cover.as_ref().map(|c| c.len()),
        cover_delta,
        delta_clamped,
        family_eta: bucket.map(|b| b.0),
        tau: bucket.map(|b| b.1.tau()),
        forecaster_seed,
        adversary_seed,
        warnings,
    };
    Ok(Setup { grid, family, agents, agent_covers, family_cover, bucket, adversary, params, resolved })
}

/// One protocol event, recorded when tracing is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum ProtocolStep {
    OutcomeCommitted { t: usize },
    ForecastEmitted { t: usize },
    OutcomeRevealed { t: usize },
    StateUpdated { t: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub id: usize,
    pub mode: ResponseMode,
    pub actions: usize,
    pub lipschitz: f64,
    /// ℓ∞ distance from the agent's utility to the family's cover lattice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cover_distance: Option<f64>,
    pub expected: SwapRegretResult,
    pub realized: SwapRegretResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub resolved: ResolvedParams,
    pub transcript_hash: String,
    pub rounds: usize,
    /// Rounds whose solve missed the gap or value tolerance.
    pub uncertified_rounds: usize,
    pub max_gap: f64,
    pub max_value: f64,
    /// `None` for rounds whose prediction was forced by the script.
    pub diagnostics: Vec<Option<RoundDiagnostics>>,
    pub bias: BiasReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
    pub agents: Vec<AgentReport>,
    pub weighted_bucket: Vec<WeightedBucketBias>,
}

impl ExperimentReport {
    pub fn max_expected_regret(&self) -> f64 {
        self.agents.iter().map(|a| a.expected.value).fold(0.0, f64::max)
    }

    pub fn mean_expected_regret(&self) -> f64 {
        if self.agents.is_empty() {
            return 0.0;
        }
        self.agents.iter().map(|a| a.expected.value).sum::<f64>() / self.agents.len() as f64
    }

    pub fn agent(&self, id: usize) -> Option<&AgentReport> {
        self.agents.iter().find(|a| a.id == id)
    }
}

/// Wall-clock figures, kept out of the report so reports stay reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub setup_secs: f64,
    pub rounds_secs: f64,
    pub metrics_secs: f64,
    pub total_secs: f64,
    pub per_round_secs: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: ExperimentReport,
    pub transcript: Transcript,
    pub family: Arc<EventFamily>,
    pub timing: RunTiming,
    pub trace: Vec<ProtocolStep>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    run_experiment_with(config, RunOptions::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, options: RunOptions) -> Result<RunOutcome> {
    let start = Instant::now();
    let setup = prepare(config)?;
    let setup_secs = start.elapsed().as_secs_f64();
    run_prepared(config, setup, options, setup_secs)
}

/// Runs `seeds.replays` copies; replay 0 uses the master seed itself.
pub fn run_replications(config: &ExperimentConfig) -> Result<Vec<RunOutcome>> {
    (0..config.seeds.replays.max(1))
        .map(|r| {
            let mut c = config.clone();
            if r > 0 {
                c.seeds.master = derive_seed(config.seeds.master, &format!("replay/{r}"));
            }
            c.seeds.replays = 1;
            run_experiment(&c)
        })
        .collect()
}

fn run_prepared(config: &ExperimentConfig, setup: Setup, options: RunOptions, setup_secs: f64) -> Result<RunOutcome> {
    let t_rounds = Instant::now();
    let horizon = config.horizon;
    let grid = setup.grid.clone();
    let mut state =
        ForecasterState::new(setup.family.clone(), horizon, setup.params, setup.resolved.forecaster_seed)?;
    let mut adversary = AdversaryState::new(
        setup.adversary.clone(),
        grid.clone(),
        Some(setup.family.clone()),
        setup.resolved.adversary_seed,
    )?;
    let mut transcript = Transcript::new(grid.clone(), horizon);
    let mut diagnostics = Vec::with_capacity(horizon);
    let mut trace = Vec::new();
    for t in 1..=horizon {
        let y = adversary.next_outcome(t, &transcript.rounds)?;
        let commitment = outcome_commitment(t, &y);
        if options.trace {
            trace.push(ProtocolStep::OutcomeCommitted { t });
        }
        let (forecast, realized, diag) = match adversary.forced_prediction(t)? {
            Some(p) => {
                let j = grid.nearest(&p)?;
                (ForecastDistribution::point_mass(j), j, None)
            }
            None => {
                let r = forecast_round(&mut state)?;
                (r.forecast, r.realized, Some(r.diagnostics))
            }
        };
        if options.trace {
            trace.push(ProtocolStep::ForecastEmitted { t });
            trace.push(ProtocolStep::OutcomeRevealed { t });
        }
        update_state(&mut state, &forecast, &y)?;
        if options.trace {
            trace.push(ProtocolStep::StateUpdated { t });
        }
        transcript.push_committed(forecast, realized, y, commitment)?;
        diagnostics.push(diag);
    }
    let rounds_secs = t_rounds.elapsed().as_secs_f64();

    let t_metrics = Instant::now();
    let report = metrics_report(config, &setup, &transcript, diagnostics, state.uncertified_rounds)?;
    let metrics_secs = t_metrics.elapsed().as_secs_f64();
    let timing = RunTiming {
        setup_secs,
        rounds_secs,
        metrics_secs,
        total_secs: setup_secs + rounds_secs + metrics_secs,
        per_round_secs: if horizon == 0 { 0.0 } else { rounds_secs / horizon as f64 },
    };
    Ok(RunOutcome { report, transcript, family: setup.family, timing, trace })
}

fn lattice_distance(u: &UtilityFunction, cover: &UtilityCover) -> f64 {
    u.vectors()
        .iter()
        .flatten()
        .map(|&x| cover.values().iter().map(|v| (v - x).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Recomputes every metric from a finished transcript.
pub fn metrics_report(
    config: &ExperimentConfig,
    setup: &Setup,
    transcript: &Transcript,
    diagnostics: Vec<Option<RoundDiagnostics>>,
    uncertified_rounds: usize,
) -> Result<ExperimentReport> {
    let bias = conditional_bias(transcript, &setup.family)?;
    let calibration = if setup.grid.free_dims() == 1 {
        Some(Calibration { l1: l1_calibration(transcript)?, l2: l2_calibration(transcript)? })
    } else {
        None
    };
    let mut agents = Vec::with_capacity(setup.agents.len());
    for (model, cover) in setup.agents.iter().zip(&setup.agent_covers) {
        let cover = cover.as_deref();
        let cover_distance = setup
            .family_cover
            .as_ref()
            .filter(|c| c.k == model.utility.action_count() && c.dim == model.utility.dim())
            .map(|c| lattice_distance(&model.utility, c));
        agents.push(AgentReport {
            id: model.utility.id,
            mode: model.mode,
            actions: model.utility.action_count(),
            lipschitz: model.utility.lipschitz(),
            cover_distance,
            expected: expected_swap_regret(transcript, model, cover)?,
            realized: realized_swap_regret(transcript, model, cover)?,
        });
    }
    let mut weighted_bucket = Vec::new();
    if let (Some(cover), Some((eta, scheme))) = (&setup.family_cover, setup.bucket) {
        let targets: Vec<UtilityFunction> = if cover.len() * cover.k <= WEIGHTED_CHECK_LIMIT {
            cover.utilities.clone()
        } else {
            let mut seen = std::collections::BTreeSet::new();
            setup
                .agents
                .iter()
                .filter(|a| a.utility.action_count() == cover.k)
                .filter_map(|a| snap_utility(&a.utility, cover).ok())
                .filter(|u| seen.insert(u.id))
                .collect()
        };
        for u in &targets {
            for a in 0..u.action_count() {
                weighted_bucket.push(weighted_bucket_bias(transcript, &setup.family, &bias, u, a, eta, scheme)?);
            }
        }
    }
    let solved = diagnostics.iter().flatten();
    let max_gap = solved.clone().map(|d| d.gap).fold(0.0, f64::max);
    let max_value = solved.map(|d| d.value).fold(0.0, f64::max);
    Ok(ExperimentReport {
        config: config.clone(),
        resolved: setup.resolved.clone(),
        transcript_hash: transcript.hash(),
        rounds: transcript.len(),
        uncertified_rounds,
        max_gap,
        max_value,
        diagnostics,
        bias,
        calibration,
        agents,
        weighted_bucket,
    })
}
