use serde::{Deserialize, Serialize};

use super::campaign::{run_campaign, CampaignReport};
use super::plan::CampaignPlan;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::io::SimulationConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub workers: usize,
    pub wall_s: f64,
    pub speedup: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenancyRow {
    pub ranks_per_device: usize,
    pub ranks: usize,
    pub devices: usize,
    pub wall_s: f64,
    pub throughput: f64,
}

/// Fastest of `repeat` runs.
fn best_of(
    repeat: usize,
    mut run: impl FnMut() -> Result<CampaignReport>,
) -> Result<CampaignReport> {
    let mut best: Option<CampaignReport> = None;
    for _ in 0..repeat.max(1) {
        let r = run()?;
        if best.as_ref().is_none_or(|b| r.total_wall_s < b.total_wall_s) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one run"))
}

/// Rows from best-of-run wall times; speedup and efficiency are relative to
/// the first (smallest) worker count.
pub fn scaling_rows(measured: &[(usize, f64)]) -> Vec<ScalingRow> {
    let Some(&(w0, t0)) = measured.first() else {
        return Vec::new();
    };
    measured
        .iter()
        .map(|&(w, t)| {
            let speedup = t0 / t;
            ScalingRow {
                workers: w,
                wall_s: t,
                speedup,
                efficiency: speedup / (w as f64 / w0 as f64),
            }
        })
        .collect()
}

/// Fixed workload over increasing worker counts. Each worker is one rank
/// with its own device slot and a serial executor; I/O settings come from
/// `base`. Returns the table rows and the best report per worker count.
pub fn strong_scaling(
    config: &SimulationConfig,
    base: &CampaignPlan,
    worker_counts: &[usize],
    repeat: usize,
) -> Result<(Vec<ScalingRow>, Vec<CampaignReport>)> {
    if worker_counts.is_empty() {
        return Err(Error::InvalidArgument("worker list is empty".into()));
    }
    if worker_counts.contains(&0) || worker_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "worker counts {worker_counts:?} must be >= 1 and strictly ascending"
        )));
    }
    let mut reports = Vec::with_capacity(worker_counts.len());
    for &w in worker_counts {
        let plan = CampaignPlan {
            ranks: w,
            devices: w,
            ranks_per_device: 1,
            ..base.clone()
        };
        let exec = Executor::serial().with_name(format!("workers={w}"));
        reports.push(best_of(repeat, || run_campaign(&plan, config, &exec))?);
    }
    let measured: Vec<(usize, f64)> = worker_counts
        .iter()
        .zip(&reports)
        .map(|(&w, r)| (w, r.total_wall_s))
        .collect();
    Ok((scaling_rows(&measured), reports))
}

/// Ranks-per-device sweep at a fixed device count.
pub fn multi_tenancy(
    config: &SimulationConfig,
    base: &CampaignPlan,
    ranks_per_device: &[usize],
    repeat: usize,
) -> Result<(Vec<TenancyRow>, Vec<CampaignReport>)> {
    if ranks_per_device.is_empty() || ranks_per_device.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "ranks-per-device list {ranks_per_device:?} must be non-empty with entries >= 1"
        )));
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &k in ranks_per_device {
        let plan = CampaignPlan {
            ranks: base.devices * k,
            ranks_per_device: k,
            ..base.clone()
        };
        let exec = Executor::serial().with_name(format!("ranks_per_device={k}"));
        let report = best_of(repeat, || run_campaign(&plan, config, &exec))?;
        rows.push(TenancyRow {
            ranks_per_device: k,
            ranks: plan.ranks,
            devices: plan.devices,
            wall_s: report.total_wall_s,
            throughput: report.throughput,
        });
        reports.push(report);
    }
    Ok((rows, reports))
}
