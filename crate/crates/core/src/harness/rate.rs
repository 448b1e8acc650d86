//! Runs one config at several horizons and fits log-log slopes.

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Param};
use super::run::{run_experiment, RunTiming};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub horizon: usize,
    pub epsilon: f64,
    pub family_size: usize,
    /// Largest `T`-normalized expected bias over the family.
    pub max_bias: f64,
    pub max_conditional_bias: f64,
    pub max_swap_regret: f64,
    pub mean_swap_regret: f64,
    pub uncertified_rounds: usize,
    pub transcript_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub rows: Vec<RateRow>,
    /// Slope of ln(max bias) against ln T; absent with fewer than two
    /// positive rows.
    pub bias_slope: Option<f64>,
    pub regret_slope: Option<f64>,
    #[serde(skip)]
    pub timings: Vec<RunTiming>,
}

/// Least-squares slope of `ln y` on `ln x`, over points with `y > 0`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

pub fn rate_study(base: &ExperimentConfig, horizons: &[usize]) -> Result<RateStudy> {
    if horizons.is_empty() {
        return Err(Error::Config("rate study needs at least one horizon".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("rate study horizons must be strictly increasing".into()));
    }
    if matches!(base.epsilon, Param::Value(_)) || base.axis.is_some() {
        return Err(Error::Config("rate study needs epsilon = \"auto\" so the grid scales with T".into()));
    }
    let mut rows = Vec::with_capacity(horizons.len());
    let mut timings = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let mut cfg = base.clone();
        cfg.horizon = t;
        let out = run_experiment(&cfg)?;
        let r = &out.report;
        rows.push(RateRow {
            horizon: t,
            epsilon: r.resolved.epsilon,
            family_size: r.resolved.family_size,
            max_bias: r.bias.max_bias_inf_expected,
            max_conditional_bias: r.bias.max_conditional_expected,
            max_swap_regret: r.max_expected_regret(),
            mean_swap_regret: r.mean_expected_regret(),
            uncertified_rounds: r.uncertified_rounds,
            transcript_hash: r.transcript_hash.clone(),
        });
        timings.push(out.timing);
    }
    let pts = |f: fn(&RateRow) -> f64| -> Vec<(f64, f64)> { rows.iter().map(|r| (r.horizon as f64, f(r))).collect() };
    Ok(RateStudy {
        bias_slope: log_log_slope(&pts(|r| r.max_bias)),
        regret_slope: log_log_slope(&pts(|r| r.max_swap_regret)),
        rows,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [16.0, 64.0, 256.0].iter().map(|&t: &f64| (t, 3.0 / t.sqrt())).collect();
        assert!((log_log_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
        assert_eq!(log_log_slope(&[(1.0, 0.0), (2.0, 1.0)]), None);
    }

    fn base() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"horizon": 0, "dim": 1, "lifted": true, "family": {"kind": "intervals"},
                "adversary": {"kind": "periodic", "sequence": [[0.0], [1.0], [1.0]]},
                "agents": [{"id": 0, "mode": "exact", "vectors": "random", "actions": 2, "seed": 3}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn single_horizon_has_no_slope() {
        let s = rate_study(&base(), &[16]).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].epsilon, 0.25);
        assert!(s.bias_slope.is_none() && s.regret_slope.is_none());
    }

    #[test]
    fn rejects_bad_horizons_and_fixed_epsilon() {
        assert!(rate_study(&base(), &[]).is_err());
        assert!(rate_study(&base(), &[64, 16]).is_err());
        let mut fixed = base();
        fixed.epsilon = Param::Value(0.1);
        assert!(matches!(rate_study(&fixed, &[16, 64]), Err(Error::Config(_))));
    }

    #[test]
    fn epsilon_scales_with_horizon() {
        let s = rate_study(&base(), &[16, 64]).unwrap();
        assert_eq!(s.rows[1].epsilon, 0.125);
        assert_eq!(s.rows[1].family_size, 45);
    }
}
