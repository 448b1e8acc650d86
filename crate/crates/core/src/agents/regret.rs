use serde::{Deserialize, Serialize};

use super::{AgentModel, ResponseTable, UtilityCover};
use crate::error::{Error, Result};
use crate::transcript::Transcript;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRegretResult {
    /// Average per-round regret of the best swap.
    pub value: f64,
    /// `best_swap[a]` is where the maximizing rule sends action `a`.
    pub best_swap: Vec<usize>,
    /// Unnormalized gain of each source action under `best_swap`.
    pub per_action_terms: Vec<f64>,
}

const BRUTE_MAX_ACTIONS: usize = 5;
const BRUTE_MAX_ROUNDS: usize = 1000;

/// Per-round action distributions of the agent.
fn plays(tr: &Transcript, table: &ResponseTable, expected: bool) -> Vec<Vec<f64>> {
    let k = table.actions();
    tr.rounds
        .iter()
        .map(|r| {
            if expected {
                let mut agg = vec![0.0; k];
                for (i, w) in r.forecast.iter() {
                    for (a, q) in table.at(i).iter().enumerate() {
                        agg[a] += w * q;
                    }
                }
                agg
            } else {
                table.at(r.realized).to_vec()
            }
        })
        .collect()
}

fn setup(tr: &Transcript, model: &AgentModel, cover: Option<&UtilityCover>) -> Result<ResponseTable> {
    tr.require_complete()?;
    model.utility.check_dim(tr.grid.dim())?;
    ResponseTable::new(model, &tr.grid, cover)
}

fn per_source_argmax(tr: &Transcript, model: &AgentModel, plays: &[Vec<f64>]) -> SwapRegretResult {
    let u = &model.utility;
    let k = u.action_count();
    // gain[a][b] = Σ_t q_t(a)·(u(b, y_t) − u(a, y_t))
    let mut gain = vec![vec![0.0; k]; k];
    for (r, q) in tr.rounds.iter().zip(plays) {
        let pay = u.payoffs(r.outcome.coords());
        for a in 0..k {
            if q[a] == 0.0 {
                continue;
            }
            for b in 0..k {
                gain[a][b] += q[a] * (pay[b] - pay[a]);
            }
        }
    }
    let mut best_swap = Vec::with_capacity(k);
    let mut per_action_terms = Vec::with_capacity(k);
    for (a, row) in gain.iter().enumerate() {
        let mut best = a;
        for b in 0..k {
            if row[b] > row[best] {
                best = b;
            }
        }
        best_swap.push(best);
        per_action_terms.push(row[best]);
    }
    let t = tr.len();
    let value = if t == 0 { 0.0 } else { per_action_terms.iter().sum::<f64>() / t as f64 };
    SwapRegretResult { value, best_swap, per_action_terms }
}

/// Swap regret with play averaged over each round's forecast distribution.
/// The maximizing rule is found per source action.
pub fn expected_swap_regret(tr: &Transcript, model: &AgentModel, cover: Option<&UtilityCover>) -> Result<SwapRegretResult> {
    let table = setup(tr, model, cover)?;
    Ok(per_source_argmax(tr, model, &plays(tr, &table, true)))
}

/// Swap regret of the play induced by the realized forecasts.
pub fn realized_swap_regret(tr: &Transcript, model: &AgentModel, cover: Option<&UtilityCover>) -> Result<SwapRegretResult> {
    let table = setup(tr, model, cover)?;
    Ok(per_source_argmax(tr, model, &plays(tr, &table, false)))
}

fn swap_terms(tr: &Transcript, model: &AgentModel, plays: &[Vec<f64>], phi: &[usize]) -> (f64, Vec<f64>) {
    let u = &model.utility;
    let mut terms = vec![0.0; phi.len()];
    for (r, q) in tr.rounds.iter().zip(plays) {
        let y = r.outcome.coords();
        for a in 0..phi.len() {
            terms[a] += q[a] * (u.payoff(phi[a], y) - u.payoff(a, y));
        }
    }
    let total: f64 = terms.iter().sum();
    let value = if tr.is_empty() { 0.0 } else { total / tr.len() as f64 };
    (value, terms)
}

/// Expected regret of one fixed modification rule `φ`.
pub fn swap_regret_of(tr: &Transcript, model: &AgentModel, cover: Option<&UtilityCover>, phi: &[usize]) -> Result<f64> {
    let k = model.utility.action_count();
    if phi.len() != k || phi.iter().any(|&b| b >= k) {
        return Err(Error::invalid(format!("swap map must send each of {k} actions to an action")));
    }
    let table = setup(tr, model, cover)?;
    Ok(swap_terms(tr, model, &plays(tr, &table, true), phi).0)
}

/// Expected swap regret by trying every map `φ: A → A`.
pub fn brute_force_swap_regret(tr: &Transcript, model: &AgentModel, cover: Option<&UtilityCover>) -> Result<SwapRegretResult> {
    let k = model.utility.action_count();
    if k > BRUTE_MAX_ACTIONS || tr.len() > BRUTE_MAX_ROUNDS {
        return Err(Error::invalid(format!(
            "brute force limited to {BRUTE_MAX_ACTIONS} actions and {BRUTE_MAX_ROUNDS} rounds"
        )));
    }
    let table = setup(tr, model, cover)?;
    let plays = plays(tr, &table, true);
    let mut phi = vec![0usize; k];
    let mut best: Option<SwapRegretResult> = None;
    loop {
        let (value, terms) = swap_terms(tr, model, &plays, &phi);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(SwapRegretResult { value, best_swap: phi.clone(), per_action_terms: terms });
        }
        let mut s = 0;
        while s < k {
            phi[s] += 1;
            if phi[s] < k {
                break;
            }
            phi[s] = 0;
            s += 1;
        }
        if s == k {
            break;
        }
    }
    Ok(best.expect("at least the identity map"))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::agents::UtilityFunction;
    use crate::geometry::{OutcomePoint, PredictionGrid};

    fn u_tilde() -> UtilityFunction {
        UtilityFunction::new(0, vec![vec![-1.0, 1.0], vec![1.0, 0.0]], true).unwrap()
    }

    fn lemma_grid() -> Arc<PredictionGrid> {
        Arc::new(PredictionGrid::from_axis(2, vec![0.0, 0.4, 0.6, 1.0], true).unwrap())
    }

    fn alternating(t: usize) -> Transcript {
        let g = lemma_grid();
        let preds: Vec<usize> = (1..=t).map(|s| if s % 2 == 1 { 1 } else { 2 }).collect();
        let outs: Vec<OutcomePoint> =
            (1..=t).map(|s| OutcomePoint::lifted(vec![if s % 2 == 1 { 1.0 } else { 0.0 }])).collect();
        Transcript::from_point_forecasts(g, &preds, &outs).unwrap()
    }

    #[test]
    fn two_round_swap_both() {
        let tr = alternating(2);
        let m = AgentModel::exact(u_tilde());
        let r = expected_swap_regret(&tr, &m, None).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.best_swap, vec![1, 0]);
        assert_eq!(brute_force_swap_regret(&tr, &m, None).unwrap().best_swap, vec![1, 0]);
    }

    #[test]
    fn lemma_scenario_regret_is_one() {
        let tr = alternating(1000);
        let m = AgentModel::exact(u_tilde());
        let r = expected_swap_regret(&tr, &m, None).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!((r.value - r.per_action_terms.iter().sum::<f64>() / 1000.0).abs() < 1e-15);
        assert!((brute_force_swap_regret(&tr, &m, None).unwrap().value - 1.0).abs() < 1e-9);
        assert!((realized_swap_regret(&tr, &m, None).unwrap().value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_swaps() {
        let tr = alternating(10);
        let m = AgentModel::exact(u_tilde());
        assert_eq!(swap_regret_of(&tr, &m, None, &[0, 1]).unwrap(), 0.0);
        assert!((swap_regret_of(&tr, &m, None, &[1, 0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(swap_regret_of(&tr, &m, None, &[2, 0]).is_err());
        assert!(swap_regret_of(&tr, &m, None, &[0]).is_err());
    }

    #[test]
    fn single_action_has_no_regret() {
        let tr = alternating(6);
        let m = AgentModel::exact(UtilityFunction::new(0, vec![vec![0.2, 0.3]], true).unwrap());
        assert_eq!(brute_force_swap_regret(&tr, &m, None).unwrap().value, 0.0);
        assert_eq!(expected_swap_regret(&tr, &m, None).unwrap().value, 0.0);
    }

    #[test]
    fn incomplete_transcript_is_rejected() {
        let mut tr = alternating(2);
        tr.horizon = 3;
        assert!(expected_swap_regret(&tr, &AgentModel::exact(u_tilde()), None).is_err());
    }

    #[test]
    fn brute_force_limits() {
        let tr = alternating(2);
        let m = AgentModel::exact(UtilityFunction::new(0, vec![vec![0.2, 0.3]; 6], true).unwrap());
        assert!(brute_force_swap_regret(&tr, &m, None).is_err());
    }
}
