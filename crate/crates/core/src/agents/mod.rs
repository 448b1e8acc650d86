//! Downstream agents: linear utilities over the lifted prediction space, the
//! exact / snapped / logistic response models, the utility cover, and swap
//! regret.

mod cover;
mod regret;
mod response;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OutcomePoint, PredictionGrid};

pub use cover::{snap_utility, UtilityCover, DEFAULT_COVER_CAP};
pub use regret::{brute_force_swap_regret, expected_swap_regret, realized_swap_regret, swap_regret_of, SwapRegretResult};
pub use response::{best_response, logistic_response, respond, ResponseTable};
pub(crate) use response::{best_response_raw, softmax};

/// Payoff differences within this tolerance are treated as ties.
pub const TIE_TOL: f64 = 1e-12;

/// Which action wins an exact tie in the best response.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    #[default]
    HighestIndex,
    LowestIndex,
}

/// `u(a, y) = ⟨v_a, y⟩` with one payoff vector per action.
///
/// Affine utilities are expressed on lifted outcomes, where the constant term
/// sits in the last (always-1) coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityFunction {
    pub id: usize,
    vectors: Vec<Vec<f64>>,
    lifted: bool,
}

impl UtilityFunction {
    pub fn new(id: usize, vectors: Vec<Vec<f64>>, lifted: bool) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).ok_or_else(|| Error::invalid("utility needs at least one action"))?;
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("all payoff vectors must share a positive dimension"));
        }
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("payoff vector entries must be finite"));
        }
        Ok(Self { id, vectors, lifted })
    }

    pub fn action_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn lifted(&self) -> bool {
        self.lifted
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// ℓ∞-to-payoff Lipschitz constant over the coordinates that can vary:
    /// `max_a ‖v_a‖₁`, excluding the lift column when lifted.
    pub fn lipschitz(&self) -> f64 {
        let free = self.dim() - usize::from(self.lifted);
        self.vectors
            .iter()
            .map(|v| v[..free].iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `⟨v_a, y⟩` without validation.
    #[inline]
    pub fn payoff(&self, action: usize, y: &[f64]) -> f64 {
        self.vectors[action].iter().zip(y).map(|(v, y)| v * y).sum()
    }

    pub fn eval(&self, action: usize, y: &OutcomePoint) -> Result<f64> {
        if action >= self.action_count() {
            return Err(Error::invalid(format!("action {action} out of range ({} actions)", self.action_count())));
        }
        self.check_dim(y.dim())?;
        Ok(self.payoff(action, y.coords()))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: dim });
        }
        Ok(())
    }

    /// Payoffs for every action at `y`.
    pub fn payoffs(&self, y: &[f64]) -> Vec<f64> {
        (0..self.action_count()).map(|a| self.payoff(a, y)).collect()
    }

    pub fn entries_in_unit_box(&self) -> bool {
        self.vectors.iter().flatten().all(|x| (0.0..=1.0).contains(x))
    }

    /// Non-fatal problems: entries outside `[0,1]` or payoffs outside `[0,1]`
    /// somewhere on the grid.
    pub fn warnings(&self, grid: &PredictionGrid) -> Vec<String> {
        let mut out = Vec::new();
        if !self.entries_in_unit_box() {
            out.push(format!("utility {}: payoff vector entries outside [0,1]", self.id));
        }
        if grid.dim() == self.dim() {
            let worst = grid
                .points()
                .flat_map(|y| self.payoffs(y))
                .fold(0.0_f64, |m, p| m.max(-p).max(p - 1.0));
            if worst > 1e-12 {
                out.push(format!("utility {}: payoffs leave [0,1] on the grid by up to {worst:.3}", self.id));
            }
        }
        out
    }
}

/// How an agent turns a forecast into play.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ResponseMode {
    /// Best response to the agent's own utility.
    Exact {
        #[serde(default)]
        tie_rule: TieRule,
    },
    /// Best response to the nearest utility in a δ-cover.
    Snapped {
        delta: f64,
        #[serde(default)]
        tie_rule: TieRule,
    },
    /// Softmax over payoffs with inverse temperature `eta`.
    Logistic { eta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentModel {
    pub utility: UtilityFunction,
    pub mode: ResponseMode,
}

impl AgentModel {
    pub fn new(utility: UtilityFunction, mode: ResponseMode) -> Result<Self> {
        match mode {
            ResponseMode::Logistic { eta } if !(eta > 0.0 && eta.is_finite()) => {
                return Err(Error::invalid(format!("logistic eta must be positive, got {eta}")));
            }
            ResponseMode::Snapped { delta, .. } if !(delta > 0.0 && delta <= 1.0) => {
                return Err(Error::invalid(format!("snap delta must lie in (0,1], got {delta}")));
            }
            _ => {}
        }
        Ok(Self { utility, mode })
    }

    pub fn exact(utility: UtilityFunction) -> Self {
        Self { utility, mode: ResponseMode::Exact { tie_rule: TieRule::HighestIndex } }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `ũ(a, y) = a·y + (1−a)(1−y)` on the lifted line.
    pub(crate) fn u_tilde() -> UtilityFunction {
        UtilityFunction::new(0, vec![vec![-1.0, 1.0], vec![1.0, 0.0]], true).unwrap()
    }

    #[test]
    fn eval_examples() {
        let u = u_tilde();
        assert!((u.eval(1, &OutcomePoint::lifted(vec![0.7])).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(u.eval(0, &OutcomePoint::lifted(vec![0.0])).unwrap(), 1.0);
        let w = UtilityFunction::new(1, vec![vec![0.5, 0.5]], false).unwrap();
        assert_eq!(w.eval(0, &vec![1.0, 1.0].into()).unwrap(), 1.0);
        assert!(w.eval(1, &vec![1.0, 1.0].into()).is_err());
        assert!(w.eval(0, &vec![1.0].into()).is_err());
    }

    #[test]
    fn lipschitz_ignores_lift_column() {
        assert_eq!(u_tilde().lipschitz(), 1.0);
        let w = UtilityFunction::new(0, vec![vec![0.5, 0.25, 1.0]], false).unwrap();
        assert_eq!(w.lipschitz(), 1.75);
    }

    #[test]
    fn warnings_flag_out_of_box_entries() {
        let g = PredictionGrid::epsilon_net(2, 0.5, true).unwrap();
        assert_eq!(u_tilde().warnings(&g).len(), 1);
        let big = UtilityFunction::new(0, vec![vec![1.0, 1.0]], true).unwrap();
        assert_eq!(big.warnings(&g).len(), 1);
    }

    #[test]
    fn model_validation() {
        assert!(AgentModel::new(u_tilde(), ResponseMode::Logistic { eta: 0.0 }).is_err());
        assert!(AgentModel::new(u_tilde(), ResponseMode::Snapped { delta: 0.0, tie_rule: TieRule::HighestIndex }).is_err());
        assert!(AgentModel::new(u_tilde(), ResponseMode::Logistic { eta: 2.0 }).is_ok());
    }
}
