//! How bias and swap regret shrink with the horizon when ε follows 1/√T.
//!
//! `cargo run --release --example rate_study -- 256,1024,4096`

use forecast_core::harness::{rate_study, ExperimentConfig};

fn main() -> forecast_core::Result<()> {
    let horizons: Vec<usize> = std::env::args()
        .nth(1)
        .map(|s| s.split(',').filter_map(|h| h.parse().ok()).collect())
        .unwrap_or_else(|| vec![256, 1024, 4096]);
    let base = ExperimentConfig::from_json(
        r#"{
            "horizon": 1,
            "dim": 1,
            "lifted": true,
            "epsilon": "auto",
            "family": { "kind": "intervals" },
            "adversary": { "kind": "iid_uniform_corners" },
            "agents": [
                { "id": 0, "mode": "exact", "vectors": "random", "actions": 2, "seed": 100 },
                { "id": 1, "mode": "exact", "vectors": "random", "actions": 3, "seed": 101 },
                { "id": 2, "mode": "exact", "vectors": "random", "actions": 2, "seed": 102 },
                { "id": 3, "mode": "exact", "vectors": "random", "actions": 3, "seed": 103 }
            ]
        }"#,
    )?;
    let study = rate_study(&base, &horizons)?;
    println!("{:>6} {:>9} {:>7} {:>10} {:>10}", "T", "eps", "|E|", "max bias", "max regret");
    for r in &study.rows {
        println!(
            "{:>6} {:>9.5} {:>7} {:>10.5} {:>10.5}",
            r.horizon, r.epsilon, r.family_size, r.max_bias, r.max_swap_regret
        );
    }
    println!("log-log slopes: bias {:?}, regret {:?}", study.bias_slope, study.regret_slope);
    Ok(())
}
