//! Tab-separated `x  y` series for external plotting.
//!
//! | id | x | metrics |
//! |---|---|---|
//! | fig2 | SNR (dB) | SER |
//! | fig3 | SNR (dB) | P_d |
//! | fig4 | SNR (dB) | P_fa |
//! | fig5 | S | SER |
//! | fig7 | SNR (dB) | P_d, P_fa |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sweep::CsvRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Snr,
    Sparsity,
}

fn figure(id: &str) -> Option<(Axis, &'static [&'static str])> {
    Some(match id {
        "fig2" => (Axis::Snr, &["ser"]),
        "fig3" => (Axis::Snr, &["pd"]),
        "fig4" => (Axis::Snr, &["pfa"]),
        "fig5" => (Axis::Sparsity, &["ser"]),
        "fig7" => (Axis::Snr, &["pd", "pfa"]),
        _ => return None,
    })
}

/// A single series, sorted by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub detector: String,
    pub metric: &'static str,
    pub points: Vec<(f64, f64)>,
}

pub fn plot_series(rows: &[CsvRow], figure_id: &str) -> Result<Vec<Series>> {
    let (axis, metrics) = figure(figure_id).ok_or_else(|| Error::UnknownFigure(figure_id.to_string()))?;
    if rows.is_empty() {
        return Err(Error::config("<table>", "result table is empty"));
    }
    let mut by_detector: BTreeMap<&str, Vec<&CsvRow>> = BTreeMap::new();
    for r in rows {
        by_detector.entry(&r.detector).or_default().push(r);
    }
    let mut out = Vec::new();
    for (detector, rows) in by_detector {
        for &metric in metrics {
            let mut points: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| {
                    let x = match axis {
                        Axis::Snr => r.snr_db,
                        Axis::Sparsity => r.active as f64,
                    };
                    let y = match metric {
                        "ser" => r.ser,
                        "pd" => r.pd,
                        _ => r.pfa,
                    };
                    (x, y)
                })
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            out.push(Series { detector: detector.to_string(), metric, points });
        }
    }
    Ok(out)
}

/// Writes `<figure>_<detector>_<metric>.tsv` files into `dir`.
pub fn emit_plot_data(rows: &[CsvRow], figure_id: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    let series = plot_series(rows, figure_id)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for s in series {
        let path = dir.join(format!("{figure_id}_{}_{}.tsv", s.detector, s.metric));
        let mut text = String::from("x\ty\n");
        for (x, y) in &s.points {
            text.push_str(&format!("{x}\t{y}\n"));
        }
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
