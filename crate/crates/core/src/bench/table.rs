use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::campaign::CampaignReport;
use super::scaling::{ScalingRow, TenancyRow};
use crate::error::{Error, Result};
use crate::kernels::{ADD_ARRAY_LABEL, BACKGROUND_LABEL, SPOTS_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    /// Space-aligned plain text.
    Text,
    Markdown,
}

/// Mean kernel times (ms) per executor, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KernelTimes {
    pub rows: Vec<(String, BTreeMap<String, f64>)>,
}

impl KernelTimes {
    pub fn push(&mut self, executor: impl Into<String>, means: BTreeMap<String, f64>) {
        self.rows.push((executor.into(), means));
    }

    pub fn from_reports<'a>(reports: impl IntoIterator<Item = (&'a str, &'a CampaignReport)>) -> Self {
        let mut out = KernelTimes::default();
        for (name, r) in reports {
            out.push(
                name,
                r.kernel_times.iter().map(|(k, a)| (k.clone(), a.mean_ms)).collect(),
            );
        }
        out
    }

    /// Pipeline kernels first in pipeline order, then any others by name.
    pub fn kernels(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for known in [SPOTS_LABEL, BACKGROUND_LABEL, ADD_ARRAY_LABEL] {
            if self.rows.iter().any(|(_, m)| m.contains_key(known)) {
                seen.push(known.to_owned());
            }
        }
        let mut rest: Vec<String> = self
            .rows
            .iter()
            .flat_map(|(_, m)| m.keys().cloned())
            .filter(|k| !seen.contains(k))
            .collect();
        rest.sort();
        rest.dedup();
        seen.extend(rest);
        seen
    }
}

fn render(header: &[String], rows: &[Vec<String>], format: TableFormat) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| match format {
        TableFormat::Text => {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            writeln!(out, "{}", parts.join("  ").trim_end()).unwrap();
        }
        TableFormat::Markdown => {
            writeln!(out, "| {} |", cells.join(" | ")).unwrap();
        }
    };
    line(&mut out, header);
    match format {
        TableFormat::Text => {
            let total = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
            writeln!(out, "{}", "-".repeat(total)).unwrap();
        }
        TableFormat::Markdown => {
            let seps: Vec<&str> = (0..header.len()).map(|i| if i == 0 { "---" } else { "---:" }).collect();
            writeln!(out, "| {} |", seps.join(" | ")).unwrap();
        }
    }
    for row in rows {
        line(&mut out, row);
    }
    out
}

/// Percentage speed-up of `variant` over `baseline` mean time.
pub fn speedup_percent(baseline_ms: f64, variant_ms: f64) -> f64 {
    (baseline_ms - variant_ms) / baseline_ms * 100.0
}

pub fn format_speedup(pct: f64) -> String {
    format!("{pct:+.1} %")
}

/// Mean time per kernel per executor, plus a speed-up row for every
/// non-baseline executor.
pub fn kernel_time_table(times: &KernelTimes, baseline: &str, format: TableFormat) -> Result<String> {
    let kernels = times.kernels();
    if kernels.is_empty() {
        return Err(Error::Report("no kernel timings to tabulate".into()));
    }
    let base = times
        .rows
        .iter()
        .find(|(name, _)| name == baseline)
        .map(|(_, m)| m)
        .ok_or_else(|| Error::Report(format!("baseline executor `{baseline}` not found")))?;

    let mut header = vec![String::new()];
    header.extend(kernels.iter().cloned());
    let mut rows: Vec<Vec<String>> = times
        .rows
        .iter()
        .map(|(name, means)| {
            let mut row = vec![name.clone()];
            row.extend(kernels.iter().map(|k| match means.get(k) {
                Some(ms) => format!("{ms:.2} ms"),
                None => "n/a".into(),
            }));
            row
        })
        .collect();

    let variants: Vec<_> = times.rows.iter().filter(|(n, _)| n != baseline).collect();
    for (name, means) in &variants {
        let label = if variants.len() == 1 {
            "Speed-up".to_owned()
        } else {
            format!("Speed-up ({name})")
        };
        let mut row = vec![label];
        for k in &kernels {
            let cell = match (base.get(k), means.get(k)) {
                (Some(&b), _) if b <= 0.0 => {
                    return Err(Error::Report(format!(
                        "baseline `{baseline}` has zero time for `{k}`; speed-up undefined"
                    )))
                }
                (Some(&b), Some(&v)) => format_speedup(speedup_percent(b, v)),
                _ => "n/a".into(),
            };
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(render(&header, &rows, format))
}

pub fn scaling_table(rows: &[ScalingRow], format: TableFormat) -> String {
    let header: Vec<String> = ["workers", "wall_s", "speedup", "efficiency"].map(String::from).to_vec();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.workers.to_string(),
                format!("{:.3}", r.wall_s),
                format!("{:.2}", r.speedup),
                format!("{:.2}", r.efficiency),
            ]
        })
        .collect();
    render(&header, &body, format)
}

pub fn tenancy_table(rows: &[TenancyRow], format: TableFormat) -> String {
    let header: Vec<String> = ["ranks_per_device", "ranks", "devices", "wall_s", "images/s"]
        .map(String::from)
        .to_vec();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.ranks_per_device.to_string(),
                r.ranks.to_string(),
                r.devices.to_string(),
                format!("{:.3}", r.wall_s),
                format!("{:.2}", r.throughput),
            ]
        })
        .collect();
    render(&header, &body, format)
}
