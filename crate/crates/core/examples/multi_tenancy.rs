// Several ranks per device: with a per-image write latency, a second rank
// on the same device computes while the first one writes.
//
// cargo run --release --example multi_tenancy

use std::path::Path;

use xtrace::bench::{multi_tenancy, tenancy_table, TableFormat};
use xtrace::io::{load_config, SimulationConfig};

pub fn run_example() -> xtrace::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut file = load_config(data.join("example.toml"))?.file;
    file.detector.slow_pixels = 32;
    file.detector.fast_pixels = 32;
    let config = SimulationConfig::from_file(file, &data)?;

    let mut plan = config.campaign_plan();
    plan.n_images = 8;
    plan.devices = 1;
    plan.output_dir = None;
    for (io_enabled, latency) in [(false, 0.0), (true, 20.0)] {
        plan.io_enabled = io_enabled;
        plan.io_latency_ms = latency;
        let (rows, _) = multi_tenancy(&config, &plan, &[1, 2, 4], 1)?;
        println!("io {}", if io_enabled { "latency 20 ms" } else { "disabled" });
        print!("{}", tenancy_table(&rows, TableFormat::Text));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
