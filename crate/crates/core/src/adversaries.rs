//! Outcome generators.
//!
//! An adversary sees only completed rounds: the run loop passes the history
//! through round `t − 1` and commits the returned outcome before the forecast
//! for round `t` exists. Outcomes are given by their free coordinates; the
//! lift coordinate is appended automatically on lifted grids.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::UtilityFunction;
use crate::error::{Error, Result};
use crate::events::EventFamily;
use crate::geometry::{OutcomePoint, PredictionGrid};
use crate::transcript::RoundRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryKind {
    Constant {
        y: Vec<f64>,
    },
    /// Each free coordinate is 0 or 1 with probability ½, independently.
    IidUniformCorners,
    /// Round `t` (1-based) plays `sequence[(t − 1) mod len]`.
    Periodic {
        sequence: Vec<Vec<f64>>,
    },
    Scripted {
        outcomes: Vec<Vec<f64>>,
        /// When present, these predictions replace the forecaster's.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        forced_predictions: Option<Vec<Vec<f64>>>,
    },
    /// Heuristic stress test: per coordinate, finds the event with the largest
    /// accumulated expected bias and plays the corner that enlarges it.
    GreedyBias,
}

impl AdversaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryKind::Constant { .. } => "constant",
            AdversaryKind::IidUniformCorners => "iid_uniform_corners",
            AdversaryKind::Periodic { .. } => "periodic",
            AdversaryKind::Scripted { .. } => "scripted",
            AdversaryKind::GreedyBias => "greedy_bias (heuristic)",
        }
    }

    /// Reads a script CSV: columns named `y*` hold outcome coordinates, and
    /// optional `p*` columns hold forced predictions.
    pub fn scripted_from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers = rdr.headers()?.clone();
        let y_cols: Vec<usize> = (0..headers.len()).filter(|&c| headers[c].starts_with('y')).collect();
        let p_cols: Vec<usize> = (0..headers.len()).filter(|&c| headers[c].starts_with('p')).collect();
        if y_cols.is_empty() {
            return Err(Error::Config(format!("{}: script needs at least one y column", path.display())));
        }
        let parse = |rec: &csv::StringRecord, cols: &[usize]| -> Result<Vec<f64>> {
            cols.iter()
                .map(|&c| {
                    rec[c].parse::<f64>().map_err(|e| Error::Config(format!("{}: bad number {:?}: {e}", path.display(), &rec[c])))
                })
                .collect()
        };
        let mut outcomes = Vec::new();
        let mut preds = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            outcomes.push(parse(&rec, &y_cols)?);
            if !p_cols.is_empty() {
                preds.push(parse(&rec, &p_cols)?);
            }
        }
        Ok(AdversaryKind::Scripted { outcomes, forced_predictions: (!p_cols.is_empty()).then_some(preds) })
    }
}

/// Turns a free-coordinate vector into a point on `grid`'s outcome space.
pub fn outcome_on(grid: &PredictionGrid, coords: &[f64]) -> Result<OutcomePoint> {
    let y = if grid.lifted() && coords.len() == grid.free_dims() {
        OutcomePoint::lifted(coords.to_vec())
    } else {
        OutcomePoint::new(coords.to_vec())
    };
    grid.check_outcome(&y)?;
    Ok(y)
}

pub struct AdversaryState {
    kind: AdversaryKind,
    grid: Arc<PredictionGrid>,
    rng: ChaCha8Rng,
    greedy: Option<GreedyLedger>,
}

/// Expected bias per (event, coordinate), rebuilt from the visible history.
struct GreedyLedger {
    family: Arc<EventFamily>,
    by_point: Vec<Vec<u32>>,
    cum: Vec<f64>,
    seen: usize,
}

impl AdversaryState {
    /// `family` is only consulted by `GreedyBias`; without one it tracks the
    /// overall bias.
    pub fn new(kind: AdversaryKind, grid: Arc<PredictionGrid>, family: Option<Arc<EventFamily>>, seed: u64) -> Result<Self> {
        let check = |v: &[f64]| outcome_on(&grid, v).map(|_| ());
        match &kind {
            AdversaryKind::Constant { y } => check(y)?,
            AdversaryKind::Periodic { sequence } => {
                if sequence.is_empty() {
                    return Err(Error::Config("periodic adversary needs a nonempty sequence".into()));
                }
                sequence.iter().try_for_each(|v| check(v))?;
            }
            AdversaryKind::Scripted { outcomes, forced_predictions } => {
                outcomes.iter().try_for_each(|v| check(v))?;
                if let Some(p) = forced_predictions {
                    if p.len() != outcomes.len() {
                        return Err(Error::Config("forced predictions and outcomes differ in length".into()));
                    }
                    p.iter().try_for_each(|v| check(v))?;
                }
            }
            _ => {}
        }
        let greedy = matches!(kind, AdversaryKind::GreedyBias).then(|| {
            let family = family.unwrap_or_else(|| Arc::new(whole_grid_family(&grid)));
            GreedyLedger {
                by_point: family.events_by_point(),
                cum: vec![0.0; family.len() * grid.free_dims()],
                family,
                seen: 0,
            }
        });
        Ok(Self { kind, grid, rng: ChaCha8Rng::seed_from_u64(seed), greedy })
    }

    pub fn kind(&self) -> &AdversaryKind {
        &self.kind
    }

    /// Prediction the script forces for round `t`, if any.
    pub fn forced_prediction(&self, t: usize) -> Result<Option<OutcomePoint>> {
        match &self.kind {
            AdversaryKind::Scripted { forced_predictions: Some(p), .. } => {
                let v = p.get(t - 1).ok_or(Error::ScriptExhausted(t))?;
                outcome_on(&self.grid, v).map(Some)
            }
            _ => Ok(None),
        }
    }

    /// Outcome for round `t` (1-based) given the rounds before it.
    pub fn next_outcome(&mut self, t: usize, history: &[RoundRecord]) -> Result<OutcomePoint> {
        if t == 0 || history.len() != t - 1 {
            return Err(Error::invalid(format!("round {t} requested with {} rounds of history", history.len())));
        }
        let d = self.grid.free_dims();
        let coords = match &self.kind {
            AdversaryKind::Constant { y } => y.clone(),
            AdversaryKind::IidUniformCorners => (0..d).map(|_| f64::from(u8::from(self.rng.random::<bool>()))).collect(),
            AdversaryKind::Periodic { sequence } => sequence[(t - 1) % sequence.len()].clone(),
            AdversaryKind::Scripted { outcomes, .. } => outcomes.get(t - 1).ok_or(Error::ScriptExhausted(t))?.clone(),
            AdversaryKind::GreedyBias => {
                let ledger = self.greedy.as_mut().expect("greedy ledger");
                ledger.absorb(&self.grid, history);
                ledger.corner(d)
            }
        };
        outcome_on(&self.grid, &coords)
    }
}

fn whole_grid_family(grid: &Arc<PredictionGrid>) -> EventFamily {
    let mut b = crate::events::FamilyBuilder::new(grid.clone(), 1);
    b.push(
        crate::events::Membership::full(grid.len()),
        crate::events::EventLabel::Interval { lo: 0, hi: grid.len() - 1 },
    )
    .expect("one event fits");
    b.finish("whole_grid")
}

impl GreedyLedger {
    fn absorb(&mut self, grid: &PredictionGrid, history: &[RoundRecord]) {
        let d = grid.free_dims();
        for r in &history[self.seen..] {
            let y = r.outcome.coords();
            for (j, w) in r.forecast.iter() {
                let p = grid.point(j);
                for &e in &self.by_point[j] {
                    for i in 0..d {
                        self.cum[e as usize * d + i] += w * (p[i] - y[i]);
                    }
                }
            }
        }
        self.seen = history.len();
    }

    fn corner(&self, d: usize) -> Vec<f64> {
        (0..d)
            .map(|i| {
                let mut best = 0.0_f64;
                for e in 0..self.family.len() {
                    let c = self.cum[e * d + i];
                    if c.abs() > best.abs() {
                        best = c;
                    }
                }
                // positive bias: forecasts run high, so a low outcome enlarges it
                if best > 0.0 {
                    0.0
                } else {
                    1.0
                }
            })
            .collect()
    }
}

/// The fixed prediction/outcome sequences and the two utilities from the
/// best-response discontinuity counterexample.
#[derive(Debug, Clone)]
pub struct LemmaScenario {
    pub delta: f64,
    pub horizon: usize,
    /// Lifted line with the predictions on it: axis `{0, 0.5 − δ, 0.5 + δ, 1}`.
    pub grid: Arc<PredictionGrid>,
    pub forced_predictions: Vec<f64>,
    pub outcomes: Vec<f64>,
    /// Threshold at `0.5 − δ`.
    pub u: UtilityFunction,
    /// Threshold at `0.5`.
    pub u_tilde: UtilityFunction,
}

impl LemmaScenario {
    pub fn adversary_kind(&self) -> AdversaryKind {
        AdversaryKind::Scripted {
            outcomes: self.outcomes.iter().map(|&y| vec![y]).collect(),
            forced_predictions: Some(self.forced_predictions.iter().map(|&p| vec![p]).collect()),
        }
    }
}

pub fn lemma_counterexample_scenario(delta: f64, horizon: usize) -> Result<LemmaScenario> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::invalid(format!("delta must lie in (0, 0.5), got {delta}")));
    }
    if horizon % 2 != 0 {
        return Err(Error::invalid(format!("horizon must be even, got {horizon}")));
    }
    let grid = Arc::new(PredictionGrid::from_axis(2, vec![0.0, 0.5 - delta, 0.5 + delta, 1.0], true)?);
    let odd = |t: usize| t % 2 == 1;
    let forced_predictions = (1..=horizon).map(|t| if odd(t) { 0.5 - delta } else { 0.5 + delta }).collect();
    let outcomes = (1..=horizon).map(|t| if odd(t) { 1.0 } else { 0.0 }).collect();
    let s = 1.0 + 2.0 * delta;
    // u(a, y) = (a(y + δ) + (1 − a)(1 − y − δ) + δ) / (1 + 2δ)
    let u = UtilityFunction::new(0, vec![vec![-1.0 / s, 1.0 / s], vec![1.0 / s, 2.0 * delta / s]], true)?;
    // ũ(a, y) = a·y + (1 − a)(1 − y)
    let u_tilde = UtilityFunction::new(1, vec![vec![-1.0, 1.0], vec![1.0, 0.0]], true)?;
    Ok(LemmaScenario { delta, horizon, grid, forced_predictions, outcomes, u, u_tilde })
}
