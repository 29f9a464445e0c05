//! `diqss tables`: CSV emission for the ratio scan, QBER decomposition,
//! key-rate curve, and round-accounting advantage.
//!
//! Tables go to stdout as plain comma-separated values with a header row,
//! `.` decimal separator, and full double precision (Rust's shortest
//! round-trip formatting). Annotations such as the key-rate sign change go
//! to stderr so stdout stays machine-readable.

use anyhow::Context;
use diqss::analysis::{advantage, keyrate_curve, ratio_scan};
use diqss::bitcore::rational_to_f64;
use diqss::noise::NoiseParams;

use crate::TableKind;

pub fn run(kind: &TableKind) -> anyhow::Result<bool> {
    match kind {
        TableKind::Ratio { n_min, n_max } => ratio(*n_min, *n_max)?,
        TableKind::Qber { fidelity, eta_grid } => qber(*fidelity, eta_grid)?,
        TableKind::Keyrate { fidelity, eta_grid } => keyrate(*fidelity, eta_grid)?,
        TableKind::Advantage { alpha, beta } => {
            let value = advantage(*alpha, *beta).context("invalid check fractions")?;
            println!("alpha,beta,advantage");
            println!("{alpha},{beta},{value}");
        }
    }
    Ok(true)
}

fn ratio(n_min: usize, n_max: usize) -> anyhow::Result<()> {
    let rows = ratio_scan(n_min, n_max).context("invalid scan range")?;
    println!("n,brute_ratio,closed_ratio");
    for row in rows {
        println!(
            "{},{},{}",
            row.n,
            rational_to_f64(row.brute),
            rational_to_f64(row.closed)
        );
    }
    Ok(())
}

fn qber(fidelity: f64, grid_spec: &str) -> anyhow::Result<()> {
    let grid = parse_grid(grid_spec)?;
    println!("eta,Q1,Q2,Q");
    for eta in grid {
        let params = NoiseParams::new(fidelity, eta).context("invalid parameters")?;
        println!(
            "{eta},{},{},{}",
            params.qber_decoherence(),
            params.qber_loss(),
            params.qber_total()
        );
    }
    Ok(())
}

fn keyrate(fidelity: f64, grid_spec: &str) -> anyhow::Result<()> {
    let grid = parse_grid(grid_spec)?;
    let curve = keyrate_curve(fidelity, &grid).context("invalid grid")?;
    println!("eta,Q,r");
    for p in &curve.points {
        println!("{},{},{}", p.efficiency, p.qber, p.key_rate);
    }
    match curve.threshold {
        Some(t) => eprintln!(
            "key rate changes sign at eta = {:.6} (closed approximation {:.6})",
            t.root, t.closed_approximation
        ),
        None => eprintln!("key rate is non-positive over the whole efficiency range"),
    }
    Ok(())
}

/// Parses `A:B:STEP` into an inclusive grid. The endpoint is included when
/// it lands within floating-point slack of a step.
fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, step] = parts.as_slice() else {
        anyhow::bail!("eta grid must be A:B:STEP, got {spec:?}");
    };
    let start: f64 = start.parse().context("grid start")?;
    let end: f64 = end.parse().context("grid end")?;
    let step: f64 = step.parse().context("grid step")?;
    let well_formed =
        start.is_finite() && end.is_finite() && step.is_finite() && step > 0.0 && start <= end;
    if !well_formed {
        anyhow::bail!("grid needs start <= end and step > 0, got {spec:?}");
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing_includes_endpoints() {
        let grid = parse_grid("0.9:1.0:0.05").unwrap();
        assert_eq!(grid.len(), 3);
        assert!((grid[0] - 0.9).abs() < 1e-12);
        assert!((grid[2] - 1.0).abs() < 1e-12);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:-0.1").is_err());
        assert!(parse_grid("0:1").is_err());
    }
}
