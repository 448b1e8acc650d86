use super::{snap_utility, AgentModel, ResponseMode, TieRule, UtilityCover, UtilityFunction, TIE_TOL};
use crate::error::{Error, Result};
use crate::geometry::{OutcomePoint, PredictionGrid};

pub(crate) fn best_response_raw(u: &UtilityFunction, y: &[f64], tie_rule: TieRule) -> usize {
    let payoffs = u.payoffs(y);
    let max = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut winners = (0..payoffs.len()).filter(|&a| max - payoffs[a] <= TIE_TOL);
    match tie_rule {
        TieRule::HighestIndex => winners.last(),
        TieRule::LowestIndex => winners.next(),
    }
    .expect("at least one action attains the max")
}

pub(crate) fn softmax(payoffs: &[f64], eta: f64) -> Vec<f64> {
    let max = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = payoffs.iter().map(|p| (eta * (p - max)).exp()).collect();
    let z: f64 = w.iter().sum();
    for x in &mut w {
        *x /= z;
    }
    w
}

pub fn best_response(u: &UtilityFunction, y: &OutcomePoint, tie_rule: TieRule) -> Result<usize> {
    u.check_dim(y.dim())?;
    Ok(best_response_raw(u, y.coords(), tie_rule))
}

/// Softmax of `eta · u(·, y)`.
pub fn logistic_response(u: &UtilityFunction, y: &OutcomePoint, eta: f64) -> Result<Vec<f64>> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("logistic eta must be positive, got {eta}")));
    }
    u.check_dim(y.dim())?;
    Ok(softmax(&u.payoffs(y.coords()), eta))
}

fn point_mass(k: usize, a: usize) -> Vec<f64> {
    let mut q = vec![0.0; k];
    q[a] = 1.0;
    q
}

/// The utility the agent actually best-responds to (snapped if needed).
fn acting_utility(model: &AgentModel, cover: Option<&UtilityCover>) -> Result<UtilityFunction> {
    match model.mode {
        ResponseMode::Snapped { delta, .. } => {
            let cover = cover.ok_or_else(|| Error::invalid("snapped agents need a utility cover"))?;
            if (cover.delta - delta).abs() > 1e-12 {
                return Err(Error::invalid(format!("agent snaps at delta {delta}, cover uses {}", cover.delta)));
            }
            snap_utility(&model.utility, cover)
        }
        _ => Ok(model.utility.clone()),
    }
}

/// Action distribution of the agent facing forecast `y_hat`.
pub fn respond(model: &AgentModel, y_hat: &OutcomePoint, cover: Option<&UtilityCover>) -> Result<Vec<f64>> {
    let u = acting_utility(model, cover)?;
    match model.mode {
        ResponseMode::Exact { tie_rule } | ResponseMode::Snapped { tie_rule, .. } => {
            Ok(point_mass(u.action_count(), best_response(&u, y_hat, tie_rule)?))
        }
        ResponseMode::Logistic { eta } => logistic_response(&u, y_hat, eta),
    }
}

/// `respond` evaluated once at every grid point.
#[derive(Debug, Clone)]
pub struct ResponseTable {
    actions: usize,
    probs: Vec<f64>,
}

impl ResponseTable {
    pub fn new(model: &AgentModel, grid: &PredictionGrid, cover: Option<&UtilityCover>) -> Result<Self> {
        let u = acting_utility(model, cover)?;
        u.check_dim(grid.dim())?;
        let actions = u.action_count();
        let mut probs = Vec::with_capacity(actions * grid.len());
        for y in grid.points() {
            match model.mode {
                ResponseMode::Exact { tie_rule } | ResponseMode::Snapped { tie_rule, .. } => {
                    probs.extend(point_mass(actions, best_response_raw(&u, y, tie_rule)))
                }
                ResponseMode::Logistic { eta } => probs.extend(softmax(&u.payoffs(y), eta)),
            }
        }
        Ok(Self { actions, probs })
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    /// Action distribution at grid point `index`.
    #[inline]
    pub fn at(&self, index: usize) -> &[f64] {
        &self.probs[index * self.actions..(index + 1) * self.actions]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::DEFAULT_COVER_CAP;

    fn u_tilde() -> UtilityFunction {
        UtilityFunction::new(0, vec![vec![-1.0, 1.0], vec![1.0, 0.0]], true).unwrap()
    }

    /// Threshold at 0.5 − δ.
    fn u_delta(d: f64) -> UtilityFunction {
        let s = 1.0 + 2.0 * d;
        UtilityFunction::new(1, vec![vec![-1.0 / s, 1.0 / s], vec![1.0 / s, 2.0 * d / s]], true).unwrap()
    }

    fn y(x: f64) -> OutcomePoint {
        OutcomePoint::lifted(vec![x])
    }

    #[test]
    fn best_response_examples() {
        let h = TieRule::HighestIndex;
        assert_eq!(best_response(&u_tilde(), &y(0.7), h).unwrap(), 1);
        assert_eq!(best_response(&u_tilde(), &y(0.5), h).unwrap(), 1);
        assert_eq!(best_response(&u_tilde(), &y(0.5), TieRule::LowestIndex).unwrap(), 0);
        assert_eq!(best_response(&u_tilde(), &y(0.3), h).unwrap(), 0);
        assert_eq!(best_response(&u_delta(0.2), &y(0.4), h).unwrap(), 1);
        assert_eq!(best_response(&u_delta(0.2), &y(0.3), h).unwrap(), 1);
        assert_eq!(best_response(&u_delta(0.2), &y(0.29), h).unwrap(), 0);
        assert!(best_response(&u_tilde(), &vec![0.5].into(), h).is_err());
    }

    #[test]
    fn logistic_examples() {
        let eq = UtilityFunction::new(0, vec![vec![0.3, 0.2]; 2], true).unwrap();
        assert_eq!(logistic_response(&eq, &y(0.4), 7.0).unwrap(), vec![0.5, 0.5]);
        let gap = UtilityFunction::new(0, vec![vec![0.0, 0.0], vec![0.0, 1.0]], true).unwrap();
        let q = logistic_response(&gap, &y(0.4), 3f64.ln()).unwrap();
        assert!((q[1] - 0.75).abs() < 1e-12);
        let three = UtilityFunction::new(0, vec![vec![0.5, 0.5]; 3], true).unwrap();
        for p in logistic_response(&three, &y(0.1), 2.0).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(logistic_response(&eq, &y(0.4), -1.0).is_err());
        let huge = logistic_response(&gap, &y(0.4), 1e6).unwrap();
        assert_eq!(huge, vec![0.0, 1.0]);
    }

    #[test]
    fn respond_dispatch() {
        let exact = AgentModel::exact(u_tilde());
        assert_eq!(respond(&exact, &y(0.7), None).unwrap(), vec![0.0, 1.0]);

        let eq = UtilityFunction::new(0, vec![vec![0.3, 0.2]; 2], true).unwrap();
        let logit = AgentModel::new(eq, ResponseMode::Logistic { eta: 4.0 }).unwrap();
        assert_eq!(respond(&logit, &y(0.1), None).unwrap(), vec![0.5, 0.5]);

        // δ = 1 snaps ũ's vectors (−1, 1), (1, 0) to (0, 1), (1, 0): BR is 1 iff y ≥ 1.
        let cover = UtilityCover::build(2, 2, 1.0, DEFAULT_COVER_CAP).unwrap();
        let snapped = AgentModel::new(u_tilde(), ResponseMode::Snapped { delta: 1.0, tie_rule: TieRule::HighestIndex }).unwrap();
        assert!(respond(&snapped, &y(0.7), None).is_err());
        assert_eq!(respond(&snapped, &y(0.7), Some(&cover)).unwrap(), vec![1.0, 0.0]);
        assert_eq!(respond(&snapped, &y(1.0), Some(&cover)).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn table_matches_respond() {
        let g = PredictionGrid::epsilon_net(2, 0.125, true).unwrap();
        let m = AgentModel::new(u_tilde(), ResponseMode::Logistic { eta: 3.0 }).unwrap();
        let t = ResponseTable::new(&m, &g, None).unwrap();
        for i in 0..g.len() {
            assert_eq!(t.at(i), respond(&m, &g.point(i).to_vec().into(), None).unwrap().as_slice());
        }
    }
}
