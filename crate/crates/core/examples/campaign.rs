// A small campaign: images split across ranks that share one simulated
// device, each image written with its sidecar.
//
// cargo run --release --example campaign

use std::path::Path;

use xtrace::bench::{plan_batches, run_campaign};
use xtrace::exec::Executor;
use xtrace::io::{load_config, SimulationConfig};

pub fn run_example() -> xtrace::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut file = load_config(data.join("example.toml"))?.file;
    file.detector.slow_pixels = 64;
    file.detector.fast_pixels = 64;
    let config = SimulationConfig::from_file(file, &data)?;

    let mut plan = config.campaign_plan();
    plan.n_images = 6;
    plan.devices = 1;
    plan.ranks_per_device = 3;
    plan.ranks = 3;
    plan.output_dir = Some(std::env::temp_dir().join("xtrace-examples").join("campaign"));
    for (rank, range) in plan_batches(plan.n_images, plan.ranks) {
        println!("rank {rank}: images {range:?}");
    }

    let report = run_campaign(&plan, &config, &Executor::serial())?;
    println!(
        "{} images in {:.3} s, {:.2} images/s, per rank {:?}",
        report.images(),
        report.total_wall_s,
        report.throughput,
        report.per_rank_images
    );
    for (kernel, agg) in &report.kernel_times {
        println!("  {kernel:<16} {:8.3} ms mean over {}", agg.mean_ms, agg.count);
    }
    println!("output in {}", plan.output_dir.as_ref().unwrap().display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
