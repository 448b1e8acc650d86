//! The best-response discontinuity counterexample: forecasts that are unbiased
//! on one utility's best-response events can be badly biased on a nearby
//! utility's events, and the second agent suffers constant swap regret.
//!
//! `cargo run --example reproduce_lemma -- 0.1 1000`

use forecast_core::harness::reproduce_lemma;

fn main() -> forecast_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let delta: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let horizon: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let (report, _) = reproduce_lemma(delta, horizon, 0)?;

    println!("delta = {delta}, T = {horizon}");
    for (name, events) in [("u", &report.u_events), ("u~", &report.u_tilde_events)] {
        for e in events {
            println!("  {name:<3} {:<28} n_T = {:>6} conditional bias {:+.4}", e.label, e.n_t, e.conditional_expected);
        }
    }
    println!(
        "payoff gap: bound {:.6}, largest of {} samples {:.6}",
        report.payoff_gap_bound, report.payoff_gap_samples, report.payoff_gap_max
    );
    println!("swap regret: u {:.4}, u~ {:.4}", report.regret_u.value, report.regret_u_tilde.value);
    Ok(())
}
