//! Report files. Every write goes to a temp file in the target directory and
//! is renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::Format;
use super::lemma::LemmaReport;
use super::rate::RateStudy;
use super::run::RunOutcome;
use crate::error::Result;
use crate::events::write_membership_matrix;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

fn emit(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    write_atomic(&path, bytes)?;
    written.push(path);
    Ok(())
}

/// Writes `report.json` and `transcript.json` (json), `bias.csv`,
/// `agents.csv` and the per-round `rounds.csv` (csv), the optional
/// `events.bin` membership matrix, and always the `timing.json` sidecar.
pub fn emit_report(outcome: &RunOutcome, dir: &Path, formats: &[Format], membership_matrix: bool) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let report = &outcome.report;
    if formats.contains(&Format::Json) {
        emit(dir, "report.json", &json_bytes(report)?, &mut written)?;
        emit(dir, "transcript.json", &json_bytes(&outcome.transcript)?, &mut written)?;
    }
    if formats.contains(&Format::Csv) {
        let mut bias = Vec::new();
        report.bias.write_csv(&mut bias)?;
        emit(dir, "bias.csv", &bias, &mut written)?;

        let header: Vec<String> =
            ["agent_id", "mode", "actions", "lipschitz", "expected_swap_regret", "realized_swap_regret", "best_swap"]
                .map(String::from)
                .to_vec();
        let rows = report.agents.iter().map(|a| {
            let mode = serde_json::to_value(a.mode).ok().and_then(|v| v["mode"].as_str().map(String::from));
            vec![
                a.id.to_string(),
                mode.unwrap_or_default(),
                a.actions.to_string(),
                a.lipschitz.to_string(),
                a.expected.value.to_string(),
                a.realized.value.to_string(),
                a.expected.best_swap.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" "),
            ]
        });
        emit(dir, "agents.csv", &csv_bytes(&header, rows)?, &mut written)?;

        let grid = &outcome.transcript.grid;
        let d = grid.free_dims();
        let mut header: Vec<String> =
            ["t", "value", "gap", "gap_tol", "entropy", "support"].map(String::from).to_vec();
        header.extend((0..d).map(|i| format!("forecast_mean_{i}")));
        header.extend((0..d).map(|i| format!("realized_{i}")));
        header.extend((0..d).map(|i| format!("outcome_{i}")));
        let rows = outcome.transcript.rounds.iter().zip(&report.diagnostics).enumerate().map(|(t, (r, diag))| {
            let opt = |f: fn(&crate::forecaster::RoundDiagnostics) -> String| diag.as_ref().map(f).unwrap_or_default();
            let mut row = vec![
                (t + 1).to_string(),
                opt(|x| x.value.to_string()),
                opt(|x| x.gap.to_string()),
                opt(|x| x.gap_tol.to_string()),
                opt(|x| x.entropy.to_string()),
                opt(|x| x.support.to_string()),
            ];
            let mut mean = vec![0.0; d];
            for (j, w) in r.forecast.iter() {
                for (i, m) in mean.iter_mut().enumerate() {
                    *m += w * grid.point(j)[i];
                }
            }
            row.extend(mean.iter().map(|m| m.to_string()));
            row.extend(grid.point(r.realized)[..d].iter().map(|x| x.to_string()));
            row.extend(r.outcome.coords()[..d].iter().map(|x| x.to_string()));
            row
        });
        emit(dir, "rounds.csv", &csv_bytes(&header, rows)?, &mut written)?;
    }
    if membership_matrix {
        let mut bytes = Vec::new();
        write_membership_matrix(&outcome.family, &mut bytes)?;
        emit(dir, "events.bin", &bytes, &mut written)?;
    }
    emit(dir, "timing.json", &json_bytes(&outcome.timing)?, &mut written)?;
    Ok(written)
}

/// `rate.json` and the plot-ready `rate.csv` (T in the first column).
pub fn emit_rate_study(study: &RateStudy, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        emit(dir, "rate.json", &json_bytes(study)?, &mut written)?;
    }
    if formats.contains(&Format::Csv) {
        let header: Vec<String> = [
            "T",
            "epsilon",
            "family_size",
            "max_bias",
            "max_conditional_bias",
            "max_swap_regret",
            "mean_swap_regret",
        ]
        .map(String::from)
        .to_vec();
        let rows = study.rows.iter().map(|r| {
            vec![
                r.horizon.to_string(),
                r.epsilon.to_string(),
                r.family_size.to_string(),
                r.max_bias.to_string(),
                r.max_conditional_bias.to_string(),
                r.max_swap_regret.to_string(),
                r.mean_swap_regret.to_string(),
            ]
        });
        emit(dir, "rate.csv", &csv_bytes(&header, rows)?, &mut written)?;
    }
    Ok(written)
}

pub fn emit_lemma(report: &LemmaReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    emit(dir, "lemma.json", &json_bytes(report)?, &mut written)?;
    Ok(written)
}
