//! CSV and JSON artifacts and `(x, y, yerr)` plot data.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::fit::{ansatz, FitResult};
use super::sweep::SweepRow;
use super::typicality::TypicalityRecord;
use crate::error::Result;

/// Column order version of every CSV written here.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const SWEEP_CSV: &str = "sweep.csv";
pub const FIT_JSON: &str = "fit.json";
pub const BOOTSTRAP_CSV: &str = "bootstrap.csv";
pub const TYPICALITY_APEP_CSV: &str = "typicality_apep.csv";
pub const TYPICALITY_AOTOC_CSV: &str = "typicality_aotoc.csv";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
    pub yerr: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: `unitary,capacity,k,apep`.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Fit summary without the bootstrap samples (those go to `bootstrap.csv`).
pub fn write_fit_json(path: &Path, fit: &FitResult) -> Result<()> {
    let mut v = serde_json::to_value(fit)?;
    if let Some(o) = v.as_object_mut() {
        o.remove("bootstrap_samples");
        o.insert("n_bootstrap".into(), fit.bootstrap_samples.len().into());
    }
    let mut f = File::create(path)?;
    writeln!(f, "{}", serde_json::to_string_pretty(&v)?)?;
    Ok(())
}

#[derive(Serialize)]
struct BootstrapRow {
    resample: usize,
    a: f64,
    b: f64,
}

/// Columns: `resample,a,b`.
pub fn write_bootstrap_csv(path: &Path, fit: &FitResult) -> Result<()> {
    write_rows(
        path,
        fit.bootstrap_samples
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| BootstrapRow { resample: i, a, b }),
    )
}

#[derive(Serialize)]
struct TypicalityRow {
    #[serde(rename = "L")]
    l: usize,
    k: usize,
    mean_variance: f64,
    stderr: f64,
    n_unitaries: usize,
    variances: String,
}

/// Columns: `L,k,mean_variance,stderr,n_unitaries,variances` with the
/// per-unitary variances joined by `;`.
pub fn write_typicality_csv(path: &Path, recs: &[TypicalityRecord]) -> Result<()> {
    write_rows(
        path,
        recs.iter().map(|r| TypicalityRow {
            l: r.l,
            k: r.k,
            mean_variance: r.mean_variance,
            stderr: r.stderr,
            n_unitaries: r.variances.len(),
            variances: r.variances.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(";"),
        }),
    )
}

/// Columns: `series,x,y,yerr`.
pub fn write_plot_csv(path: &Path, points: &[PlotPoint]) -> Result<()> {
    write_rows(path, points)
}

/// Mean variance against L, one series per k.
pub fn typicality_plot(recs: &[TypicalityRecord]) -> Vec<PlotPoint> {
    recs.iter()
        .map(|r| PlotPoint {
            series: format!("k={}", r.k),
            x: r.l as f64,
            y: r.mean_variance,
            yerr: r.stderr,
        })
        .collect()
}

/// Data points (APEP against capacity) followed by fitted curves, per k.
pub fn sweep_plot(rows: &[SweepRow], fit: Option<&FitResult>, curve_points: usize) -> Vec<PlotPoint> {
    let mut out: Vec<PlotPoint> = rows
        .iter()
        .map(|r| PlotPoint {
            series: format!("data k={}", r.k),
            x: r.capacity,
            y: r.apep,
            yerr: 0.0,
        })
        .collect();
    if let (Some(f), true) = (fit, curve_points > 1) {
        let lo = rows.iter().map(|r| r.capacity).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.capacity).fold(f64::NEG_INFINITY, f64::max);
        let k_max = rows.iter().map(|r| r.k).max().unwrap_or(0);
        for k in 1..=k_max {
            for i in 0..curve_points {
                let x = lo + (hi - lo) * i as f64 / (curve_points - 1) as f64;
                out.push(PlotPoint {
                    series: format!("fit k={k}"),
                    x,
                    y: ansatz(f.a, f.b, x, k).0,
                    yerr: 0.0,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("nc-out-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let rows = vec![
            SweepRow {
                unitary: 0,
                capacity: 1.25,
                k: 1,
                apep: 0.1,
            },
            SweepRow {
                unitary: 0,
                capacity: 1.25,
                k: 2,
                apep: 1.0 / 3.0,
            },
        ];
        let p = dir.join(SWEEP_CSV);
        write_sweep_csv(&p, &rows).unwrap();
        assert_eq!(read_sweep_csv(&p).unwrap(), rows);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("unitary,capacity,k,apep\n"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
