//! Property checks shared by the proptest suites and the acceptance gate.

#![allow(dead_code)]

use std::sync::Arc;

use forecast_core::adversaries::AdversaryKind;
use forecast_core::agents::{
    best_response, brute_force_swap_regret, expected_swap_regret, logistic_response, snap_utility, AgentModel,
    TieRule, UtilityCover, UtilityFunction,
};
use forecast_core::events::{best_response_events, intervals_1d, is_convex_closed, EventLabel};
use forecast_core::geometry::{ForecastDistribution, OutcomePoint, PredictionGrid};
use forecast_core::harness::{run_experiment, AdversarySpec, ExperimentConfig};
use forecast_core::transcript::Transcript;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub type Check = fn(u32, bool) -> Result<(), String>;

/// Runs `test` on `cases` generated inputs. `fixed` pins the RNG.
pub fn run<S: Strategy>(
    cases: u32,
    fixed: bool,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = if fixed {
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
    } else {
        TestRunner::new(config)
    };
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

pub fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

/// `k` payoff vectors of length `dim` with entries in `[lo, hi]`.
pub fn utility(
    k: std::ops::RangeInclusive<usize>,
    dim: usize,
    lo: f64,
    hi: f64,
) -> impl Strategy<Value = UtilityFunction> {
    k.prop_flat_map(move |k| prop::collection::vec(prop::collection::vec(lo..=hi, dim), k))
        .prop_map(|v| UtilityFunction::new(0, v, true).unwrap())
}

pub fn lifted_point(d: usize) -> impl Strategy<Value = OutcomePoint> {
    prop::collection::vec(unit(), d).prop_map(OutcomePoint::lifted)
}

pub fn logistic_smooth(cases: u32, fixed: bool) -> Result<(), String> {
    let s = (
        utility(2..=5, 2, 0.0, 1.0),
        prop::collection::vec(-1.0..=1.0f64, 5),
        0.0..=0.2f64,
        0.1..=50.0f64,
        lifted_point(1),
    );
    run(cases, fixed, s, |(u, shifts, delta, eta, y)| {
        // Shifting the constant term by at most δ moves every payoff by at most δ.
        let v: Vec<Vec<f64>> =
            u.vectors().iter().zip(&shifts).map(|(v, s)| vec![v[0], v[1] + s * delta]).collect();
        let u2 = UtilityFunction::new(1, v, true).unwrap();
        let q1 = logistic_response(&u, &y, eta).unwrap();
        let q2 = logistic_response(&u2, &y, eta).unwrap();
        let bound = (2.0 * eta * delta).exp() - 1.0;
        for a in 0..u.action_count() {
            prop_assert!((q1[a] - q2[a]).abs() <= bound + 1e-12);
        }
        Ok(())
    })
}

pub fn logistic_near_optimal(cases: u32, fixed: bool) -> Result<(), String> {
    let s = (utility(1..=6, 3, -1.0, 1.0), 0.05..=100.0f64, lifted_point(2));
    run(cases, fixed, s, |(u, eta, y)| {
        let q = logistic_response(&u, &y, eta).unwrap();
        let pay = u.payoffs(y.coords());
        let expected: f64 = q.iter().zip(&pay).map(|(q, p)| q * p).sum();
        let best = pay[best_response(&u, &y, TieRule::HighestIndex).unwrap()];
        let k = u.action_count() as f64;
        prop_assert!(expected >= best - (k.ln() + 1.0) / eta - 1e-12);
        Ok(())
    })
}

pub fn snap_quality(cases: u32, fixed: bool) -> Result<(), String> {
    let s = (
        1usize..=3,
        1usize..=3,
        prop::sample::select(vec![1.0, 0.5, 0.3, 0.25, 0.2, 0.1, 0.07]),
        prop::collection::vec(unit(), 12),
        prop::collection::vec(unit(), 3),
    );
    run(cases, fixed, s, |(d, k, delta, entries, y_free)| {
        let v: Vec<Vec<f64>> = (0..k).map(|a| entries[a * 4..a * 4 + d + 1].to_vec()).collect();
        let u = UtilityFunction::new(0, v, true).unwrap();
        let cover = UtilityCover::lattice(k, d + 1, delta).unwrap();
        let s = snap_utility(&u, &cover).unwrap();
        let y = OutcomePoint::lifted(y_free[..d].to_vec());
        for a in 0..k {
            let gap = (u.eval(a, &y).unwrap() - s.eval(a, &y).unwrap()).abs();
            prop_assert!(gap <= delta * (d as f64 + 1.0) + 1e-12);
        }
        Ok(())
    })
}

pub fn best_response_intervals_1d(cases: u32, fixed: bool) -> Result<(), String> {
    run(cases, fixed, (1usize..=24, utility(1..=5, 2, -1.0, 1.0)), |(steps, u)| {
        let g = Arc::new(PredictionGrid::epsilon_net(2, 1.0 / steps as f64, true).unwrap());
        let fam =
            best_response_events(std::slice::from_ref(&u), g.clone(), TieRule::HighestIndex, usize::MAX).unwrap();
        let mut covered = 0;
        for e in &fam.events {
            prop_assert!(is_convex_closed(&g, &e.membership).unwrap());
            covered += e.membership.count();
        }
        prop_assert_eq!(covered, g.len());
        Ok(())
    })
}

pub fn best_response_convex_2d(cases: u32, fixed: bool) -> Result<(), String> {
    let s = (
        2usize..=7,
        utility(1..=5, 3, -1.0, 1.0),
        prop::sample::select(vec![TieRule::HighestIndex, TieRule::LowestIndex]),
    );
    run(cases, fixed, s, |(m, u, tie)| {
        let g = Arc::new(PredictionGrid::epsilon_net(3, 1.0 / (m - 1) as f64, true).unwrap());
        let fam = best_response_events(std::slice::from_ref(&u), g.clone(), tie, usize::MAX).unwrap();
        for e in &fam.events {
            prop_assert!(is_convex_closed(&g, &e.membership).unwrap());
        }
        Ok(())
    })
}

pub fn swap_regret_brute_force(cases: u32, fixed: bool) -> Result<(), String> {
    let s = (
        utility(3..=3, 2, -1.0, 1.0),
        prop::collection::vec((prop::collection::vec(0.01..=1.0f64, 5), unit(), unit()), 8),
    );
    run(cases, fixed, s, |(u, rounds)| {
        let g = Arc::new(PredictionGrid::epsilon_net(2, 0.25, true).unwrap());
        let mut tr = Transcript::new(g.clone(), 8);
        for (w, s, y) in &rounds {
            let total: f64 = w.iter().sum();
            let p = ForecastDistribution::new(w.iter().map(|x| x / total).enumerate(), g.len()).unwrap();
            let realized = p.sample(*s);
            tr.push(p, realized, OutcomePoint::lifted(vec![*y])).unwrap();
        }
        let model = AgentModel::exact(u);
        let fast = expected_swap_regret(&tr, &model, None).unwrap();
        let slow = brute_force_swap_regret(&tr, &model, None).unwrap();
        prop_assert!((fast.value - slow.value).abs() <= 1e-12);
        prop_assert!(fast.value >= -1e-12);
        Ok(())
    })
}

pub fn nearest_point(cases: u32, fixed: bool) -> Result<(), String> {
    run(cases, fixed, (1usize..=3, 0.05..=1.0f64, prop::collection::vec(unit(), 3)), |(d, eps, y)| {
        let g = PredictionGrid::epsilon_net(d, eps, false).unwrap();
        let y = OutcomePoint::new(y[..d].to_vec());
        let j = g.nearest(&y).unwrap();
        let dist = g.distance(j, &y);
        prop_assert!(dist <= g.epsilon() + 1e-12);
        prop_assert!(dist <= eps / 2.0 + 1e-12);
        let best = (0..g.len()).map(|i| g.distance(i, &y)).fold(f64::INFINITY, f64::min);
        prop_assert!((dist - best).abs() <= 1e-12);
        Ok(())
    })
}

pub fn interval_count(cases: u32, fixed: bool) -> Result<(), String> {
    run(cases, fixed, 0.01..=1.0f64, |eps| {
        let g = Arc::new(PredictionGrid::epsilon_net(1, eps, false).unwrap());
        let n = g.len();
        prop_assert_eq!(intervals_1d(g).unwrap().len(), n * (n + 1) / 2);
        Ok(())
    })
}

/// A 1D logistic-cover run (cover of 16 utilities with δ = 1) against a periodic adversary.
pub fn logistic_config(horizon: usize, eps: f64, tau: f64, eta: f64, sequence: Vec<f64>) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_json(&format!(
        r#"{{"horizon": {horizon}, "dim": 1, "lifted": true, "epsilon": {eps},
             "family": {{"kind": "logistic_cover", "k": 2, "delta": 1.0, "eta": {eta}, "tau": {tau}}},
             "adversary": {{"kind": "constant", "y": [0.0]}}}}"#
    ))
    .unwrap();
    c.adversary = AdversarySpec::from_kind(&AdversaryKind::Periodic {
        sequence: sequence.into_iter().map(|y| vec![y]).collect(),
    });
    c
}

pub fn weighted_bucket_bias(cases: u32, fixed: bool) -> Result<(), String> {
    let s = (
        1usize..=12,
        prop::sample::select(vec![1.0, 0.5, 0.25]),
        prop::sample::select(vec![1.0, 0.5, 0.3, 0.25, 0.2]),
        0.5..=20.0f64,
        prop::collection::vec(unit(), 1..=4),
        any::<u64>(),
    );
    run(cases, fixed, s, |(horizon, eps, tau, eta, sequence, seed)| {
        let mut c = logistic_config(horizon, eps, tau, eta, sequence);
        c.seeds.master = seed;
        let out = run_experiment(&c).unwrap();
        let r = &out.report;
        prop_assert_eq!(r.weighted_bucket.len(), 16 * 2);
        for w in &r.weighted_bucket {
            prop_assert!(w.holds(), "{:?}", w);
        }
        let index = out.family.label_index();
        let buckets = (1.0 / tau + 1e-9).floor() as usize;
        for u in 0..16 {
            for a in 0..2 {
                let n: f64 = (0..buckets)
                    .filter_map(|b| index.get(&EventLabel::Bucket { utility: u, action: a, bucket: b }))
                    .map(|&e| r.bias.events[e].n_t)
                    .sum();
                prop_assert!((n - horizon as f64).abs() <= 1e-9);
            }
        }
        Ok(())
    })
}

pub const SUITES: &[(&str, Check)] = &[
    ("logistic response is smooth in payoffs", logistic_smooth),
    ("logistic response is near optimal", logistic_near_optimal),
    ("snapping moves payoffs by at most delta(d+1)", snap_quality),
    ("best response events are intervals in 1d", best_response_intervals_1d),
    ("best response events are convex closed in 2d", best_response_convex_2d),
    ("swap regret maximizer matches brute force", swap_regret_brute_force),
    ("nearest grid point is within epsilon", nearest_point),
    ("interval family has n(n+1)/2 events", interval_count),
    ("weighted bucket bias holds and buckets partition", weighted_bucket_bias),
];
