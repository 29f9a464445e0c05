//! `diqss simulate`: run the protocol from a config file and render the
//! report.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use diqss::protocol::{run_protocol, run_rounds_with_records, SimulationReport};

use crate::config::RunConfigFile;

/// Returns `Ok(false)` when the run aborted and `--strict` was set.
pub fn run(
    config_path: &Path,
    seed_override: Option<u64>,
    out: Option<&Path>,
    round_log: Option<&Path>,
    strict: bool,
) -> anyhow::Result<bool> {
    let file = RunConfigFile::load(config_path)?;
    let config = file.into_protocol_config(seed_override)?;
    let report = run_protocol(&config);

    print!("{}", render_report(&report));

    if let Some(path) = out {
        let json = serde_json::to_string_pretty(&report).context("serializing report")?;
        std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = round_log {
        let mut csv = String::from("index,x,y,branch,sifted,in_test_set,won\n");
        for r in run_rounds_with_records(&config) {
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                r.index,
                r.x,
                r.y,
                r.branch.tag(),
                r.sifted,
                r.in_test_set,
                r.won
            )?;
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }

    Ok(!(strict && report.aborted))
}

fn render_report(report: &SimulationReport) -> String {
    let mut text = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(text, "{k:<20} {v}");
    };
    line("rounds_total", report.rounds_total.to_string());
    line("rounds_sifted", report.rounds_sifted.to_string());
    line("rounds_tested", report.rounds_tested.to_string());
    line(
        "empirical_win_rate",
        report
            .empirical_win_rate
            .map_or_else(|| "-".to_string(), |v| v.to_string()),
    );
    line("aborted", report.aborted.to_string());
    line(
        "abort_reason",
        report
            .abort_reason
            .map_or_else(|| "-".to_string(), |r| format!("{r:?}")),
    );
    line(
        "key_length",
        report
            .key
            .as_ref()
            .map_or_else(|| "-".to_string(), |k| k.len().to_string()),
    );
    line(
        "key_error_rate",
        report
            .key_error_rate
            .map_or_else(|| "-".to_string(), |v| v.to_string()),
    );
    line("seed", report.seed_echo.to_string());
    text
}
