//! Conditional bias, calibration error and the weighted bucket bias, computed
//! from completed transcripts.
//!
//! Biases come in two normalizations. `bias_*` divides the residual sum by the
//! horizon `T`; `conditional_*` divides by the event frequency `n_T(E)` (and
//! is 0 for events that never fire), i.e. the average residual on rounds where
//! the event fires.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::agents::{softmax, UtilityFunction};
use crate::error::{Error, Result};
use crate::events::{BucketScheme, EventFamily, EventLabel, FamilySummary};
use crate::transcript::Transcript;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBias {
    pub label: String,
    /// Expected frequency `Σ_t P_{ŷ∼p_t}[E(ŷ)]`.
    pub n_t: f64,
    /// Realized frequency `Σ_t E(ŷ_t)`.
    pub n_t_realized: f64,
    /// Unnormalized expected residual sums per free coordinate.
    pub sum_expected: Vec<f64>,
    pub sum_realized: Vec<f64>,
    pub bias_inf_expected: f64,
    pub bias_inf_realized: f64,
    pub conditional_expected: f64,
    pub conditional_realized: f64,
}

impl EventBias {
    /// `sum / T` per coordinate.
    pub fn bias_vector(&self, horizon: usize) -> Vec<f64> {
        self.sum_expected.iter().map(|s| if horizon == 0 { 0.0 } else { s / horizon as f64 }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub family: FamilySummary,
    pub horizon: usize,
    pub events: Vec<EventBias>,
    pub max_bias_inf_expected: f64,
    pub max_bias_inf_realized: f64,
    pub max_conditional_expected: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_grid(tr: &Transcript, family: &EventFamily) -> Result<()> {
    if *tr.grid != *family.grid {
        return Err(Error::invalid("transcript and event family use different grids"));
    }
    Ok(())
}

pub fn conditional_bias(tr: &Transcript, family: &EventFamily) -> Result<BiasReport> {
    tr.require_complete()?;
    check_grid(tr, family)?;
    let d = tr.grid.free_dims();
    let m = family.len();
    let by_point = family.events_by_point();
    let mut n_exp = vec![0.0; m];
    let mut n_real = vec![0.0; m];
    let mut s_exp = vec![0.0; m * d];
    let mut s_real = vec![0.0; m * d];
    for r in &tr.rounds {
        let y = r.outcome.coords();
        for (j, w) in r.forecast.iter() {
            let p = tr.grid.point(j);
            for &e in &by_point[j] {
                let e = e as usize;
                n_exp[e] += w;
                for i in 0..d {
                    s_exp[e * d + i] += w * (p[i] - y[i]);
                }
            }
        }
        let p = tr.grid.point(r.realized);
        for &e in &by_point[r.realized] {
            let e = e as usize;
            n_real[e] += 1.0;
            for i in 0..d {
                s_real[e * d + i] += p[i] - y[i];
            }
        }
    }
    let t = tr.len() as f64;
    let per_t = |s: f64| if t == 0.0 { 0.0 } else { s / t };
    let per_n = |s: f64, n: f64| if n <= 0.0 { 0.0 } else { s / n };
    let events: Vec<EventBias> = (0..m)
        .map(|e| {
            let se = s_exp[e * d..(e + 1) * d].to_vec();
            let sr = s_real[e * d..(e + 1) * d].to_vec();
            EventBias {
                label: family.events[e].label().to_string(),
                n_t: n_exp[e],
                n_t_realized: n_real[e],
                bias_inf_expected: per_t(inf_norm(&se)),
                bias_inf_realized: per_t(inf_norm(&sr)),
                conditional_expected: per_n(inf_norm(&se), n_exp[e]),
                conditional_realized: per_n(inf_norm(&sr), n_real[e]),
                sum_expected: se,
                sum_realized: sr,
            }
        })
        .collect();
    let max = |f: fn(&EventBias) -> f64| events.iter().map(f).fold(0.0, f64::max);
    Ok(BiasReport {
        family: family.summary(),
        horizon: tr.len(),
        max_bias_inf_expected: max(|e| e.bias_inf_expected),
        max_bias_inf_realized: max(|e| e.bias_inf_realized),
        max_conditional_expected: max(|e| e.conditional_expected),
        events,
    })
}

impl BiasReport {
    /// Columns `event_label, n_T, bias_inf_expected, bias_inf_realized`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["event_label", "n_T", "bias_inf_expected", "bias_inf_realized"])?;
        for e in &self.events {
            w.write_record([
                e.label.clone(),
                e.n_t.to_string(),
                e.bias_inf_expected.to_string(),
                e.bias_inf_realized.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(count, outcome sum)` per realized prediction value, for 1-D transcripts.
fn calibration_groups(tr: &Transcript) -> Result<BTreeMap<usize, (f64, f64)>> {
    if tr.grid.free_dims() != 1 {
        return Err(Error::invalid("calibration error is defined for one-dimensional forecasts"));
    }
    let mut groups: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for r in &tr.rounds {
        let g = groups.entry(r.realized).or_default();
        g.0 += 1.0;
        g.1 += r.outcome.coords()[0];
    }
    Ok(groups)
}

fn calibration(tr: &Transcript, power: i32) -> Result<f64> {
    Ok(calibration_groups(tr)?
        .into_iter()
        .map(|(j, (n, sum))| n * (tr.grid.point(j)[0] - sum / n).abs().powi(power))
        .sum())
}

/// `Σ_y n_T(y)·|y − ȳ(y)|` over realized prediction values `y`.
pub fn l1_calibration(tr: &Transcript) -> Result<f64> {
    calibration(tr, 1)
}

/// `Σ_y n_T(y)·(y − ȳ(y))²`.
pub fn l2_calibration(tr: &Transcript) -> Result<f64> {
    calibration(tr, 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedBucketBias {
    pub utility: usize,
    pub action: usize,
    /// `(1/T)·Σ_t E_{ŷ∼p_t}[q_a(u,ŷ)(ŷ − y_t)]` per free coordinate.
    pub vector: Vec<f64>,
    pub inf: f64,
    /// Largest `T`-normalized bias over this (utility, action)'s bucket events.
    pub alpha_max: f64,
    /// `⌊1/τ⌋·alpha_max + τ`.
    pub bound: f64,
}

impl WeightedBucketBias {
    pub fn holds(&self) -> bool {
        self.inf <= self.bound + 1e-12
    }
}

/// The logistic-probability-weighted bias of one (utility, action), checked
/// against the bucket family built from the same `eta` and `scheme`.
pub fn weighted_bucket_bias(
    tr: &Transcript,
    family: &EventFamily,
    report: &BiasReport,
    u: &UtilityFunction,
    action: usize,
    eta: f64,
    scheme: BucketScheme,
) -> Result<WeightedBucketBias> {
    tr.require_complete()?;
    check_grid(tr, family)?;
    if report.events.len() != family.len() {
        return Err(Error::invalid("bias report does not belong to this family"));
    }
    if action >= u.action_count() {
        return Err(Error::invalid(format!("action {action} out of range")));
    }
    let index = family.label_index();
    let mut alpha_max: f64 = 0.0;
    let mut any = false;
    for bucket in 0..scheme.count() {
        if let Some(&e) = index.get(&EventLabel::Bucket { utility: u.id, action, bucket }) {
            any = true;
            alpha_max = alpha_max.max(report.events[e].bias_inf_expected);
        }
    }
    if !any {
        return Err(Error::invalid(format!("family has no bucket events for utility {} action {action}", u.id)));
    }
    let d = tr.grid.free_dims();
    let q: Vec<f64> = tr.grid.points().map(|y| softmax(&u.payoffs(y), eta)[action]).collect();
    let mut sum = vec![0.0; d];
    for r in &tr.rounds {
        let y = r.outcome.coords();
        for (j, w) in r.forecast.iter() {
            let p = tr.grid.point(j);
            for i in 0..d {
                sum[i] += w * q[j] * (p[i] - y[i]);
            }
        }
    }
    let t = tr.len().max(1) as f64;
    let vector: Vec<f64> = sum.iter().map(|s| s / t).collect();
    Ok(WeightedBucketBias {
        utility: u.id,
        action,
        inf: inf_norm(&vector),
        vector,
        alpha_max,
        bound: scheme.count() as f64 * alpha_max + scheme.tau(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::adversaries::lemma_counterexample_scenario;
    use crate::agents::TieRule;
    use crate::events::{best_response_events, intervals_1d, logistic_bucket_events};
    use crate::geometry::{OutcomePoint, PredictionGrid};

    fn grid(eps: f64) -> Arc<PredictionGrid> {
        Arc::new(PredictionGrid::epsilon_net(1, eps, false).unwrap())
    }

    fn point_transcript(g: Arc<PredictionGrid>, preds: &[usize], outs: &[f64]) -> Transcript {
        let outs: Vec<OutcomePoint> = outs.iter().map(|&y| OutcomePoint::new(vec![y])).collect();
        Transcript::from_point_forecasts(g, preds, &outs).unwrap()
    }

    #[test]
    fn perfect_predictions_have_zero_bias() {
        let g = grid(0.5);
        let tr = point_transcript(g.clone(), &[0, 1, 2, 1], &[0.0, 0.5, 1.0, 0.5]);
        let r = conditional_bias(&tr, &intervals_1d(g).unwrap()).unwrap();
        assert_eq!(r.max_bias_inf_expected, 0.0);
        assert_eq!(r.max_bias_inf_realized, 0.0);
    }

    #[test]
    fn lemma_biases() {
        let s = lemma_counterexample_scenario(0.1, 1000).unwrap();
        let preds: Vec<usize> = s.forced_predictions.iter().map(|&p| if p < 0.5 { 1 } else { 2 }).collect();
        let outs: Vec<OutcomePoint> = s.outcomes.iter().map(|&y| OutcomePoint::lifted(vec![y])).collect();
        let tr = Transcript::from_point_forecasts(s.grid.clone(), &preds, &outs).unwrap();
        let fu = best_response_events(&[s.u.clone()], s.grid.clone(), TieRule::HighestIndex, 10).unwrap();
        let ru = conditional_bias(&tr, &fu).unwrap();
        assert!(ru.events.iter().all(|e| e.bias_inf_expected.abs() < 1e-9 && e.conditional_expected < 1e-9));
        let ft = best_response_events(&[s.u_tilde.clone()], s.grid.clone(), TieRule::HighestIndex, 10).unwrap();
        let rt = conditional_bias(&tr, &ft).unwrap();
        assert_eq!(rt.events.len(), 2);
        for e in &rt.events {
            assert!((e.conditional_expected - 0.6).abs() < 1e-9);
            assert!((e.bias_inf_expected - 0.3).abs() < 1e-9);
            assert_eq!(e.n_t, 500.0);
        }
    }

    #[test]
    fn bias_never_exceeds_frequency() {
        let g = grid(0.25);
        let tr = point_transcript(g.clone(), &[0, 4, 2, 3, 3], &[1.0, 0.0, 0.0, 1.0, 0.2]);
        let r = conditional_bias(&tr, &intervals_1d(g).unwrap()).unwrap();
        for e in &r.events {
            assert!(e.bias_inf_expected <= e.n_t / 5.0 + 1e-15);
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let tr = point_transcript(grid(0.5), &[0], &[0.0]);
        assert!(conditional_bias(&tr, &intervals_1d(grid(0.25)).unwrap()).is_err());
    }

    #[test]
    fn calibration_examples() {
        let g = grid(0.5);
        let alt: Vec<f64> = (0..100).map(|t| (t % 2) as f64).collect();
        let halves = vec![1; 100];
        assert_eq!(l1_calibration(&point_transcript(g.clone(), &halves, &alt)).unwrap(), 0.0);
        let ones = vec![1.0; 100];
        let tr = point_transcript(g.clone(), &halves, &ones);
        assert_eq!(l1_calibration(&tr).unwrap(), 50.0);
        assert_eq!(l2_calibration(&tr).unwrap(), 25.0);
        let exact = point_transcript(g, &[0, 1, 2], &[0.0, 0.5, 1.0]);
        assert_eq!(l1_calibration(&exact).unwrap(), 0.0);
    }

    #[test]
    fn calibration_two_groups() {
        // group at 0.5 with mean 0.6 (10 rounds), group at 1.0 with mean 0.8 (5 rounds)
        let g = grid(0.5);
        let mut preds = vec![1; 10];
        preds.extend([2; 5]);
        let mut outs: Vec<f64> = (0..10).map(|t| if t < 6 { 1.0 } else { 0.0 }).collect();
        outs.extend([1.0, 1.0, 1.0, 1.0, 0.0]);
        let tr = point_transcript(g, &preds, &outs);
        assert!((l2_calibration(&tr).unwrap() - 0.3).abs() < 1e-12);
        assert!((l1_calibration(&tr).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_rejects_2d() {
        let g = Arc::new(PredictionGrid::epsilon_net(2, 1.0, false).unwrap());
        let tr = Transcript::from_point_forecasts(g, &[0], &[OutcomePoint::new(vec![0.0, 0.0])]).unwrap();
        assert!(l1_calibration(&tr).is_err());
    }

    #[test]
    fn csv_columns() {
        let g = grid(0.5);
        let tr = point_transcript(g.clone(), &[1], &[1.0]);
        let r = conditional_bias(&tr, &intervals_1d(g).unwrap()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("event_label,n_T,bias_inf_expected,bias_inf_realized\n"));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn single_bucket_weighted_bias_by_hand() {
        let g = Arc::new(PredictionGrid::epsilon_net(2, 0.5, true).unwrap());
        let u = UtilityFunction::new(0, vec![vec![-1.0, 1.0], vec![1.0, 0.0]], true).unwrap();
        let eta = 2.0;
        let scheme = BucketScheme::new(1.0).unwrap();
        let fam = logistic_bucket_events(&[u.clone()], g.clone(), eta, scheme, 100).unwrap();
        let outs: Vec<OutcomePoint> = [1.0, 0.0, 0.5].iter().map(|&y| OutcomePoint::lifted(vec![y])).collect();
        let tr = Transcript::from_point_forecasts(g.clone(), &[0, 2, 1], &outs).unwrap();
        let rep = conditional_bias(&tr, &fam).unwrap();
        let w = weighted_bucket_bias(&tr, &fam, &rep, &u, 1, eta, scheme).unwrap();
        let q1 = |y: f64| {
            let (a0, a1) = ((eta * (1.0 - y)).exp(), (eta * y).exp());
            a1 / (a0 + a1)
        };
        let by_hand = (q1(0.0) * (0.0 - 1.0) + q1(1.0) * (1.0 - 0.0) + q1(0.5) * 0.0) / 3.0;
        assert!((w.vector[0] - by_hand).abs() < 1e-12);
        assert!(w.holds());
        // one bucket holding everything: plain bias of the always-on event
        assert!((w.alpha_max - rep.events[0].bias_inf_expected).abs() < 1e-15);
    }
}
