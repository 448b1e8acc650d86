use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use forecast_core::agents::TieRule;
use forecast_core::events::write_membership_matrix;
use forecast_core::harness::{
    count_polygons, emit_lemma, emit_rate_study, emit_report, enumerate_events, rate_study, reproduce_lemma,
    run_replications, write_atomic, EnumerateRequest, ExperimentConfig, FamilyKind, Format,
};
use forecast_core::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "forecast", version, about = "Decision-calibrated forecasting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Fail on any round whose solve misses its tolerance.
        #[arg(long)]
        strict: bool,
        /// Output directory (overrides the config's).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a config at several horizons with auto-scaled parameters.
    RateStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an event family and print its summary.
    EnumerateEvents {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value_t = 0.25)]
        tau: f64,
        #[arg(long, default_value_t = 32.0)]
        eta: f64,
        #[arg(long, default_value_t = forecast_core::events::DEFAULT_POLYGON_CAP)]
        cap: usize,
        /// Break best-response ties towards the lowest action index.
        #[arg(long)]
        lowest_index_ties: bool,
        /// Count polygons without storing them (no cap applies).
        #[arg(long)]
        count_only: bool,
        /// Write the bit-packed membership matrix here.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Reproduce the best-response discontinuity counterexample.
    ReproduceLemma {
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long = "T", default_value_t = 1000)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FamilyArg {
    Intervals,
    Polygons,
    BrCover,
    LogisticCover,
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        other => other,
    })?;
    if let Some(s) = seed {
        cfg.seeds.master = s;
    }
    Ok(cfg)
}

fn print(v: serde_json::Value) {
    println!("{}", serde_json::to_string(&v).expect("json"));
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, seed, strict, out } => {
            let mut cfg = load(&config, seed)?;
            cfg.strict |= strict;
            let runs = run_replications(&cfg)?;
            let dir = out.or_else(|| cfg.output.as_ref().map(|o| o.dir.clone()));
            let formats = cfg.output.as_ref().map(|o| o.formats.clone()).unwrap_or(vec![Format::Json, Format::Csv]);
            let matrix = cfg.output.as_ref().is_some_and(|o| o.membership_matrix);
            for (r, run) in runs.iter().enumerate() {
                let rep = &run.report;
                if let Some(dir) = &dir {
                    let dir = if runs.len() > 1 { dir.join(format!("replay_{r}")) } else { dir.clone() };
                    emit_report(run, &dir, &formats, matrix)?;
                }
                print(json!({
                    "replay": r,
                    "transcript_hash": rep.transcript_hash,
                    "rounds": rep.rounds,
                    "family_size": rep.resolved.family_size,
                    "max_bias": rep.bias.max_bias_inf_expected,
                    "max_swap_regret": rep.max_expected_regret(),
                    "uncertified_rounds": rep.uncertified_rounds,
                    "seconds": run.timing.total_secs,
                }));
            }
            Ok(())
        }
        Command::RateStudy { config, horizons, seed, out } => {
            let cfg = load(&config, seed)?;
            let study = rate_study(&cfg, &horizons)?;
            if let Some(dir) = out.or_else(|| cfg.output.as_ref().map(|o| o.dir.clone())) {
                emit_rate_study(&study, &dir, &[Format::Json, Format::Csv])?;
            }
            print(serde_json::to_value(&study)?);
            Ok(())
        }
        Command::EnumerateEvents {
            family,
            dim,
            epsilon,
            k,
            delta,
            tau,
            eta,
            cap,
            lowest_index_ties,
            count_only,
            matrix,
        } => {
            let req = EnumerateRequest {
                family: match family {
                    FamilyArg::Intervals => FamilyKind::Intervals,
                    FamilyArg::Polygons => FamilyKind::Polygons,
                    FamilyArg::BrCover => FamilyKind::BrCover,
                    FamilyArg::LogisticCover => FamilyKind::LogisticCover,
                },
                dim,
                epsilon,
                k,
                delta,
                tau,
                eta,
                tie_rule: if lowest_index_ties { TieRule::LowestIndex } else { TieRule::HighestIndex },
                cap,
            };
            let start = Instant::now();
            if count_only {
                let count = count_polygons(&req)?;
                print(json!({ "grid_size": req.grid()?.len(), "count": count, "seconds": start.elapsed().as_secs_f64() }));
                return Ok(());
            }
            let fam = enumerate_events(&req).map_err(|e| match e {
                Error::InvalidParameter(m) => Error::Config(m),
                other => other,
            })?;
            if let Some(path) = matrix {
                let mut bytes = Vec::new();
                write_membership_matrix(&fam, &mut bytes)?;
                write_atomic(&path, &bytes)?;
            }
            let mut summary = serde_json::to_value(fam.summary())?;
            summary["seconds"] = json!(start.elapsed().as_secs_f64());
            print(summary);
            Ok(())
        }
        Command::ReproduceLemma { delta, horizon, seed, out } => {
            let start = Instant::now();
            let (report, _) = reproduce_lemma(delta, horizon, seed)?;
            if let Some(dir) = out {
                emit_lemma(&report, &dir)?;
            }
            print(json!({
                "delta": delta,
                "T": horizon,
                "u_conditional_bias": report.u_events.iter().map(|e| e.conditional_expected).collect::<Vec<_>>(),
                "u_tilde_conditional_bias": report.u_tilde_events.iter().map(|e| e.conditional_expected).collect::<Vec<_>>(),
                "u_tilde_bias_per_round": report.u_tilde_events.iter().map(|e| e.bias_inf_expected).collect::<Vec<_>>(),
                "payoff_gap_bound": report.payoff_gap_bound,
                "payoff_gap_max": report.payoff_gap_max,
                "payoff_gap_holds": report.payoff_gap_holds(),
                "swap_regret_u": report.regret_u.value,
                "swap_regret_u_tilde": report.regret_u_tilde.value,
                "transcript_hash": report.transcript_hash,
                "seconds": start.elapsed().as_secs_f64(),
            }));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
