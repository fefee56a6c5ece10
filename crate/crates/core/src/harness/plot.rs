//! Curve data behind the aggregation plots.

use std::fs;
use std::path::{Path, PathBuf};

use super::{ExperimentReport, HarnessError, SweepPoint};
use crate::numfmt;

/// `(k, L∞)` per method and discount.
pub const K_CURVE_FILE: &str = "linf_vs_k.csv";
/// `(ε, L∞, blocks)` per method and discount.
pub const EPSILON_CURVE_FILE: &str = "linf_vs_epsilon.csv";

fn write_curve(
    path: &Path,
    header: [&str; 6],
    report: &ExperimentReport,
    points: impl Fn(&super::MetricCell) -> &[SweepPoint],
    parameter: impl Fn(f64) -> String,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for cell in report.cells.iter().filter(|c| !c.failed()) {
        for p in points(cell) {
            let (Some(n), Some(linf)) = (p.n_blocks, p.linf) else { continue };
            w.write_record([
                cell.method.name().to_owned(),
                numfmt::real(cell.c),
                numfmt::real(cell.gamma),
                parameter(p.parameter),
                n.to_string(),
                numfmt::real(linf),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes [`K_CURVE_FILE`] and [`EPSILON_CURVE_FILE`] into `outdir`. Failed
/// metrics and failed sweep points contribute no rows.
pub fn emit_plot_data(report: &ExperimentReport, outdir: impl AsRef<Path>) -> Result<Vec<PathBuf>, HarnessError> {
    let outdir = outdir.as_ref();
    fs::create_dir_all(outdir)?;
    let k_path = outdir.join(K_CURVE_FILE);
    write_curve(&k_path, ["method", "c", "gamma", "k", "n_blocks", "linf"], report, |c| &c.to_k, |k| format!("{}", k as usize))?;
    let e_path = outdir.join(EPSILON_CURVE_FILE);
    write_curve(&e_path, ["method", "c", "gamma", "epsilon", "n_blocks", "linf"], report, |c| &c.epsilon, numfmt::real)?;
    Ok(vec![k_path, e_path])
}
