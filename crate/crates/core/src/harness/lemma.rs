//! One-shot reproduction of the best-response discontinuity counterexample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{AdversarySpec, AgentSpec, ExperimentConfig, FamilySpec, Param, Seeds};
use super::run::{run_experiment, RunOutcome};
use crate::adversaries::lemma_counterexample_scenario;
use crate::agents::{SwapRegretResult, TieRule};
use crate::error::{Error, Result};
use crate::events::EventLabel;
use crate::metrics::EventBias;

pub const LEMMA_PAYOFF_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub delta: f64,
    pub horizon: usize,
    /// Best-response events of `u`, one per action.
    pub u_events: Vec<EventBias>,
    /// Best-response events of `ũ`, one per action.
    pub u_tilde_events: Vec<EventBias>,
    /// `2δ/(1+2δ)`.
    pub payoff_gap_bound: f64,
    pub payoff_gap_max: f64,
    pub payoff_gap_samples: usize,
    pub regret_u: SwapRegretResult,
    pub regret_u_tilde: SwapRegretResult,
    pub transcript_hash: String,
}

impl LemmaReport {
    pub fn payoff_gap_holds(&self) -> bool {
        self.payoff_gap_max <= self.payoff_gap_bound + 1e-12
    }
}

/// The scripted run as an ordinary experiment config: agents 0 (`u`) and
/// 1 (`ũ`), their own best-response events, forced predictions.
pub fn lemma_config(delta: f64, horizon: usize) -> Result<ExperimentConfig> {
    let s = lemma_counterexample_scenario(delta, horizon).map_err(|e| Error::Config(e.to_string()))?;
    Ok(ExperimentConfig {
        horizon,
        dim: 1,
        lifted: true,
        epsilon: Param::auto(),
        axis: Some(vec![0.0, 0.5 - delta, 0.5 + delta, 1.0]),
        family: FamilySpec::AgentBestResponse { tie_rule: TieRule::HighestIndex },
        adversary: AdversarySpec::from_kind(&s.adversary_kind()),
        agents: vec![
            AgentSpec::exact(s.u.id, s.u.vectors().to_vec()),
            AgentSpec::exact(s.u_tilde.id, s.u_tilde.vectors().to_vec()),
        ],
        seeds: Seeds::default(),
        forecaster: Default::default(),
        strict: false,
        output: None,
        caps: Default::default(),
    })
}

pub fn reproduce_lemma(delta: f64, horizon: usize, seed: u64) -> Result<(LemmaReport, RunOutcome)> {
    let scenario = lemma_counterexample_scenario(delta, horizon).map_err(|e| Error::Config(e.to_string()))?;
    let out = run_experiment(&lemma_config(delta, horizon)?)?;
    let index = out.family.label_index();
    let events_of = |utility: usize| -> Result<Vec<EventBias>> {
        (0..2)
            .map(|action| {
                index
                    .get(&EventLabel::BestResponse { utility, action })
                    .map(|&e| out.report.bias.events[e].clone())
                    .ok_or_else(|| Error::invalid(format!("no best-response event for utility {utility} action {action}")))
            })
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gap: f64 = 0.0;
    for _ in 0..LEMMA_PAYOFF_SAMPLES {
        let a = rng.random_range(0..2);
        let y = [rng.random::<f64>(), 1.0];
        gap = gap.max((scenario.u.payoff(a, &y) - scenario.u_tilde.payoff(a, &y)).abs());
    }
    let agent = |id: usize| out.report.agent(id).expect("lemma agent").expected.clone();
    let report = LemmaReport {
        delta,
        horizon,
        u_events: events_of(scenario.u.id)?,
        u_tilde_events: events_of(scenario.u_tilde.id)?,
        payoff_gap_bound: 2.0 * delta / (1.0 + 2.0 * delta),
        payoff_gap_max: gap,
        payoff_gap_samples: LEMMA_PAYOFF_SAMPLES,
        regret_u: agent(scenario.u.id),
        regret_u_tilde: agent(scenario.u_tilde.id),
        transcript_hash: out.report.transcript_hash.clone(),
    };
    Ok((report, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_values() {
        let (r, _) = reproduce_lemma(0.1, 1000, 0).unwrap();
        for e in &r.u_events {
            assert!(e.conditional_expected.abs() < 1e-9, "{e:?}");
        }
        for e in &r.u_tilde_events {
            assert!((e.conditional_expected - 0.6).abs() < 1e-9, "{e:?}");
            assert!((e.bias_inf_expected - 0.3).abs() < 1e-9);
        }
        assert!((r.regret_u_tilde.value - 1.0).abs() < 1e-9);
        assert!(r.regret_u.value.abs() < 1e-9);
        assert!((r.payoff_gap_bound - 1.0 / 6.0).abs() < 1e-15);
        assert!(r.payoff_gap_holds());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(reproduce_lemma(0.6, 10, 0), Err(Error::Config(_))));
        assert!(matches!(reproduce_lemma(0.1, 11, 0), Err(Error::Config(_))));
    }
}
