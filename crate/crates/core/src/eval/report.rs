//! `report.json` plus a plain-text summary table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{EpisodeResult, EvalError, Report};

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const RESULTS_FILE: &str = "results.json";

fn row(out: &mut String, name: &str, tasks: usize, sr: f64, spl: f64, acd: Option<f64>) {
    let acd = acd.map_or("--".to_string(), |a| format!("{a:.1}m"));
    let _ = writeln!(out, "| {name:<20} | {tasks:>5} | {:>6.1} | {spl:>5.3} | {acd:>8} |", sr * 100.0);
}

/// Text table: one overall row, then one row per category.
pub fn summary_table(report: &Report, results: &[EpisodeResult]) -> String {
    let mut out = String::new();
    let rule = format!("+{:-<22}+{:-<7}+{:-<8}+{:-<7}+{:-<10}+", "", "", "", "", "");
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "| {:<20} | {:>5} | {:>6} | {:>5} | {:>8} |", "", "tasks", "SR %", "SPL", "ACD");
    let _ = writeln!(out, "{rule}");
    row(&mut out, "all", report.tasks, report.sr, report.spl, report.acd);
    if !report.per_category.is_empty() {
        let _ = writeln!(out, "{rule}");
        for (cat, s) in &report.per_category {
            let acd = category_acd(results, cat);
            row(&mut out, cat, s.tasks, s.sr, s.spl, acd);
        }
    }
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(
        out,
        "episodes: {}  episode SR: {:.1}%  excluded sub-tasks: {}",
        report.episodes,
        report.episode_sr * 100.0,
        report.excluded
    );
    out
}

fn category_acd(results: &[EpisodeResult], cat: &str) -> Option<f64> {
    let lens: Vec<f64> = results
        .iter()
        .flat_map(|e| &e.goals)
        .filter(|g| g.success && g.shortest.is_some() && g.goal.report_category() == cat)
        .map(|g| g.path_length)
        .collect();
    (!lens.is_empty()).then(|| lens.iter().sum::<f64>() / lens.len() as f64)
}

/// Writes `report.json`, `results.json` and `summary.txt` into `dir`.
pub fn export_report(
    report: &Report,
    results: &[EpisodeResult],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, EvalError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let paths = [dir.join(REPORT_FILE), dir.join(RESULTS_FILE), dir.join(SUMMARY_FILE)];
    std::fs::write(&paths[0], serde_json::to_string_pretty(report)?)?;
    std::fs::write(&paths[1], serde_json::to_string_pretty(results)?)?;
    std::fs::write(&paths[2], summary_table(report, results))?;
    Ok(paths.to_vec())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<Report, EvalError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<EpisodeResult>, EvalError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
