//! Campaign scheduling and the benchmark harness: strong scaling over
//! worker counts, device multi-tenancy sweeps, and kernel-time tables.

mod campaign;
mod plan;
mod scaling;
mod table;

pub use campaign::{aggregate_timings, image_stem, run_campaign, CampaignReport, FailedImage, KernelAggregate};
pub use plan::{plan_batches, CampaignPlan};
pub use scaling::{multi_tenancy, scaling_rows, strong_scaling, ScalingRow, TenancyRow};
pub use table::{
    format_speedup, kernel_time_table, scaling_table, speedup_percent, tenancy_table, KernelTimes, TableFormat,
};
