//! The unbiased-prediction algorithm.
//!
//! Every (event, free coordinate, sign) triple is an expert whose loss is the
//! signed expected bias it measures. Exponential weights over the experts are
//! turned into a forecast distribution by solving the per-round minmax game in
//! [`minmax`]. Updates use the expected bias over the forecast support, so the
//! sequence of forecasts depends only on the outcome history, never on the
//! sampled predictions.

pub mod minmax;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventFamily;
use crate::geometry::{ForecastDistribution, OutcomePoint, PredictionGrid};

pub use minmax::{MinmaxProblem, MinmaxSolution, SolverKind};

/// Default exponential-weights rate `√(8 ln(2d|ℰ|) / T)`.
pub fn default_learning_rate(free_dims: usize, events: usize, horizon: usize) -> f64 {
    let experts = (2 * free_dims * events).max(2) as f64;
    (8.0 * experts.ln() / horizon.max(1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecasterParams {
    /// Exponential-weights rate; defaults to [`default_learning_rate`].
    #[serde(default)]
    pub learning_rate: Option<f64>,
    /// Certified duality gap required of each round's solve; defaults to ε/4.
    #[serde(default)]
    pub gap_tol: Option<f64>,
    #[serde(default)]
    pub solver: SolverKind,
    /// Iteration budget for the dynamics solver.
    #[serde(default)]
    pub max_iterations: Option<usize>,
    /// Abort on a round whose solve misses `gap_tol`.
    #[serde(default)]
    pub strict: bool,
}

impl Default for ForecasterParams {
    fn default() -> Self {
        Self { learning_rate: None, gap_tol: None, solver: SolverKind::Simplex, max_iterations: None, strict: false }
    }
}

/// Softmax over experts, laid out as `[(event · d + coord) · 2 + s]` with
/// `s = 0` for σ = +1 and `s = 1` for σ = −1.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertWeights {
    free_dims: usize,
    weights: Vec<f64>,
}

impl ExpertWeights {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, event: usize, coord: usize, sign: i8) -> f64 {
        self.weights[(event * self.free_dims + coord) * 2 + usize::from(sign < 0)]
    }

    /// `q(E,i,+) − q(E,i,−)`.
    #[inline]
    fn net(&self, flat: usize) -> f64 {
        self.weights[2 * flat] - self.weights[2 * flat + 1]
    }
}

/// Diagnostics for one round's forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundDiagnostics {
    pub value: f64,
    pub gap: f64,
    pub gap_tol: f64,
    pub iterations: usize,
    pub entropy: f64,
    pub support: usize,
}

#[derive(Debug, Clone)]
pub struct RoundForecast {
    pub forecast: ForecastDistribution,
    pub realized: usize,
    pub diagnostics: RoundDiagnostics,
}

#[derive(Debug, Clone)]
pub struct ForecasterState {
    round: usize,
    horizon: usize,
    learning_rate: f64,
    gap_tol: f64,
    solver: SolverKind,
    max_iterations: Option<usize>,
    strict: bool,
    family: Arc<EventFamily>,
    grid: Arc<PredictionGrid>,
    free_dims: usize,
    /// `cum_bias[e · d + i]`.
    cum_bias: Vec<f64>,
    /// Events containing each grid point, flattened: `point_events[offsets[j]..offsets[j+1]]`.
    offsets: Vec<usize>,
    point_events: Vec<u32>,
    rng: ChaCha8Rng,
    /// Rounds whose solve missed `gap_tol` (non-strict mode only).
    pub uncertified_rounds: usize,
}

impl ForecasterState {
    pub fn new(family: Arc<EventFamily>, horizon: usize, params: ForecasterParams, seed: u64) -> Result<Self> {
        let grid = family.grid.clone();
        let free_dims = grid.free_dims();
        let learning_rate =
            params.learning_rate.unwrap_or_else(|| default_learning_rate(free_dims, family.len(), horizon));
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {learning_rate}")));
        }
        let gap_tol = params.gap_tol.unwrap_or(grid.epsilon() / 4.0);
        if !(gap_tol > 0.0) {
            return Err(Error::invalid(format!("gap tolerance must be positive, got {gap_tol}")));
        }
        let by_point = family.events_by_point();
        let mut offsets = Vec::with_capacity(by_point.len() + 1);
        offsets.push(0);
        let mut point_events = Vec::new();
        for evs in by_point {
            point_events.extend(evs);
            offsets.push(point_events.len());
        }
        Ok(Self {
            round: 0,
            horizon,
            learning_rate,
            gap_tol,
            solver: params.solver,
            max_iterations: params.max_iterations,
            strict: params.strict,
            cum_bias: vec![0.0; family.len() * free_dims],
            family,
            grid,
            free_dims,
            offsets,
            point_events,
            rng: ChaCha8Rng::seed_from_u64(seed),
            uncertified_rounds: 0,
        })
    }

    /// Rounds completed so far.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn gap_tol(&self) -> f64 {
        self.gap_tol
    }

    pub fn family(&self) -> &Arc<EventFamily> {
        &self.family
    }

    pub fn grid(&self) -> &Arc<PredictionGrid> {
        &self.grid
    }

    pub fn free_dims(&self) -> usize {
        self.free_dims
    }

    /// `Σ_s E_{ŷ∼p_s}[E(ŷ)(ŷ_i − y_s,i)]` so far.
    pub fn cum_bias(&self, event: usize, coord: usize) -> f64 {
        self.cum_bias[event * self.free_dims + coord]
    }

    pub fn cum_bias_all(&self) -> &[f64] {
        &self.cum_bias
    }

    fn events_at(&self, point: usize) -> &[u32] {
        &self.point_events[self.offsets[point]..self.offsets[point + 1]]
    }
}

pub fn compute_expert_weights(state: &ForecasterState) -> ExpertWeights {
    let half = state.learning_rate / 2.0;
    let top = state.cum_bias.iter().map(|c| (half * c).abs()).fold(0.0, f64::max);
    let mut weights = Vec::with_capacity(2 * state.cum_bias.len());
    for c in &state.cum_bias {
        weights.push((half * c - top).exp());
        weights.push((-half * c - top).exp());
    }
    let z: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= z);
    ExpertWeights { free_dims: state.free_dims, weights }
}

/// The per-round game for expert weights `q`.
pub fn round_problem(state: &ForecasterState, q: &ExpertWeights) -> MinmaxProblem {
    let d = state.free_dims;
    let n = state.grid.len();
    let mut a = vec![0.0; n];
    let mut b = vec![vec![0.0; n]; d];
    let mut s = vec![0.0; d];
    for j in 0..n {
        s.iter_mut().for_each(|v| *v = 0.0);
        for &e in state.events_at(j) {
            let base = e as usize * d;
            for (i, v) in s.iter_mut().enumerate() {
                *v += q.net(base + i);
            }
        }
        let y = state.grid.point(j);
        for i in 0..d {
            a[j] += s[i] * y[i];
            b[i][j] = -s[i];
        }
    }
    MinmaxProblem { a, b }
}

/// Solves the round game and packages `p` as a forecast distribution.
pub fn solve_round_minmax(
    state: &ForecasterState,
    q: &ExpertWeights,
) -> Result<(ForecastDistribution, MinmaxSolution)> {
    let prob = round_problem(state, q);
    let sol = prob.solve_with_limit(state.solver, state.gap_tol, state.max_iterations)?;
    let p = ForecastDistribution::new(sol.p.iter().copied().enumerate().filter(|&(_, w)| w > 0.0), state.grid.len())?;
    Ok((p, sol))
}

/// Computes `p_t`, samples `ŷ_t` from it, and reports the solver certificate.
pub fn forecast_round(state: &mut ForecasterState) -> Result<RoundForecast> {
    if state.round >= state.horizon {
        return Err(Error::invalid(format!("horizon {} already reached", state.horizon)));
    }
    let q = compute_expert_weights(state);
    let (forecast, sol) = solve_round_minmax(state, &q)?;
    let certified = sol.gap <= state.gap_tol && sol.value <= state.grid.epsilon() + state.gap_tol;
    if !certified {
        if state.strict {
            return Err(Error::SolverFailure { gap: sol.gap, tol: state.gap_tol, iterations: sol.iterations });
        }
        state.uncertified_rounds += 1;
    }
    let u: f64 = state.rng.random();
    let realized = forecast.sample(u);
    let diagnostics = RoundDiagnostics {
        value: sol.value,
        gap: sol.gap,
        gap_tol: state.gap_tol,
        iterations: sol.iterations,
        entropy: forecast.entropy(),
        support: forecast.support().len(),
    };
    Ok(RoundForecast { forecast, realized, diagnostics })
}

/// Adds this round's expected bias to the ledger.
pub fn update_state(state: &mut ForecasterState, p: &ForecastDistribution, y: &OutcomePoint) -> Result<()> {
    state.grid.check_outcome(y)?;
    let d = state.free_dims;
    let y = y.coords();
    for (j, w) in p.iter() {
        let point = state.grid.point(j);
        let resid: Vec<f64> = (0..d).map(|i| w * (point[i] - y[i])).collect();
        for k in state.offsets[j]..state.offsets[j + 1] {
            let base = state.point_events[k] as usize * d;
            for i in 0..d {
                state.cum_bias[base + i] += resid[i];
            }
        }
    }
    state.round += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{intervals_1d, EventLabel, FamilyBuilder, Membership};

    fn always_on(eps: f64) -> Arc<EventFamily> {
        let g = Arc::new(PredictionGrid::epsilon_net(1, eps, false).unwrap());
        let mut b = FamilyBuilder::new(g.clone(), 10);
        b.push(Membership::full(g.len()), EventLabel::Interval { lo: 0, hi: g.len() - 1 }).unwrap();
        Arc::new(b.finish("all"))
    }

    fn state(family: Arc<EventFamily>, t: usize) -> ForecasterState {
        ForecasterState::new(family, t, ForecasterParams::default(), 1).unwrap()
    }

    #[test]
    fn initial_weights_are_uniform() {
        let g = Arc::new(PredictionGrid::epsilon_net(1, 0.25, false).unwrap());
        let s = state(Arc::new(intervals_1d(g).unwrap()), 10);
        let q = compute_expert_weights(&s);
        assert_eq!(q.len(), 2 * 15);
        assert!(q.as_slice().iter().all(|&w| (w - 1.0 / 30.0).abs() < 1e-15));
    }

    #[test]
    fn weight_closed_form() {
        let mut s = ForecasterState::new(
            always_on(0.5),
            10,
            ForecasterParams { learning_rate: Some(1.0), ..Default::default() },
            0,
        )
        .unwrap();
        s.cum_bias[0] = -0.5;
        let q = compute_expert_weights(&s);
        let expect = 0.25f64.exp() / (0.25f64.exp() + (-0.25f64).exp());
        assert!((q.get(0, 0, -1) - expect).abs() < 1e-15);
        assert!((q.get(0, 0, -1) - 0.6225).abs() < 1e-4);
        s.cum_bias[0] = 0.0;
        assert_eq!(compute_expert_weights(&s).get(0, 0, 1), 0.5);
    }

    #[test]
    fn update_examples() {
        let fam = always_on(0.5);
        let mut s = state(fam.clone(), 10);
        update_state(&mut s, &ForecastDistribution::point_mass(1), &OutcomePoint::new(vec![0.5])).unwrap();
        assert_eq!(s.cum_bias(0, 0), 0.0);
        update_state(&mut s, &ForecastDistribution::point_mass(1), &OutcomePoint::new(vec![1.0])).unwrap();
        assert_eq!(s.cum_bias(0, 0), -0.5);
        let half = ForecastDistribution::new([(0, 0.5), (2, 0.5)], 3).unwrap();
        update_state(&mut s, &half, &OutcomePoint::new(vec![0.5])).unwrap();
        assert_eq!(s.cum_bias(0, 0), -0.5);
        assert_eq!(s.round(), 3);
        assert!(update_state(&mut s, &half, &OutcomePoint::new(vec![0.5, 1.0])).is_err());
    }

    #[test]
    fn round_problem_shape() {
        // all mass on (E, 0, +1) for the always-on event on {0, .5, 1}
        let s = state(always_on(0.5), 4);
        let q = ExpertWeights { free_dims: 1, weights: vec![1.0, 0.0] };
        let prob = round_problem(&s, &q);
        assert_eq!(prob.a, vec![0.0, 0.5, 1.0]);
        assert_eq!(prob.b, vec![vec![-1.0; 3]]);
        let (p, sol) = solve_round_minmax(&s, &q).unwrap();
        assert_eq!(p.support(), &[0]);
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn forecasts_are_certified_and_depend_only_on_history() {
        let g = Arc::new(PredictionGrid::epsilon_net(1, 0.125, false).unwrap());
        let fam = Arc::new(intervals_1d(g).unwrap());
        let mut a = ForecasterState::new(fam.clone(), 50, ForecasterParams::default(), 1).unwrap();
        let mut b = ForecasterState::new(fam, 50, ForecasterParams::default(), 2).unwrap();
        let mut realized_differ = false;
        for t in 0..50 {
            let y = OutcomePoint::new(vec![if t % 3 == 0 { 1.0 } else { 0.2 }]);
            let ra = forecast_round(&mut a).unwrap();
            let rb = forecast_round(&mut b).unwrap();
            assert_eq!(ra.forecast, rb.forecast);
            realized_differ |= ra.realized != rb.realized;
            assert!(ra.diagnostics.gap <= a.gap_tol());
            assert!(ra.diagnostics.value <= 0.125 + a.gap_tol());
            update_state(&mut a, &ra.forecast, &y).unwrap();
            update_state(&mut b, &rb.forecast, &y).unwrap();
        }
        assert_eq!(a.cum_bias_all(), b.cum_bias_all());
        assert!(realized_differ);
        assert!(forecast_round(&mut a).is_err());
    }

    #[test]
    fn same_seed_replays_exactly() {
        let g = Arc::new(PredictionGrid::epsilon_net(1, 0.1, false).unwrap());
        let fam = Arc::new(intervals_1d(g).unwrap());
        let run = || {
            let mut s = ForecasterState::new(fam.clone(), 30, ForecasterParams::default(), 9).unwrap();
            let mut out = Vec::new();
            for t in 0..30 {
                let r = forecast_round(&mut s).unwrap();
                update_state(&mut s, &r.forecast, &OutcomePoint::new(vec![(t % 2) as f64])).unwrap();
                out.push((r.forecast, r.realized));
            }
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn dynamics_solver_also_certifies() {
        let g = Arc::new(PredictionGrid::epsilon_net(1, 0.25, false).unwrap());
        let fam = Arc::new(intervals_1d(g).unwrap());
        let params = ForecasterParams { solver: SolverKind::Dynamics, strict: true, ..Default::default() };
        let mut s = ForecasterState::new(fam, 20, params, 3).unwrap();
        for t in 0..20 {
            let r = forecast_round(&mut s).unwrap();
            update_state(&mut s, &r.forecast, &OutcomePoint::new(vec![if t % 2 == 0 { 0.9 } else { 0.3 }])).unwrap();
        }
    }
}
