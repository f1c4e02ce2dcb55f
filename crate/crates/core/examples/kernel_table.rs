// Per-kernel mean times laid out like a kernel run-time table: one row per
// executor and a speed-up row against the baseline.
//
// cargo run --release --example kernel_table

use std::collections::BTreeMap;
use std::path::Path;

use xtrace::bench::{kernel_time_table, run_campaign, KernelTimes, TableFormat};
use xtrace::exec::Executor;
use xtrace::io::{load_config, SimulationConfig};

pub fn run_example() -> xtrace::Result<()> {
    let mut published = KernelTimes::default();
    let row = |s: f64, b: f64, a: f64| {
        BTreeMap::from([
            ("nanoBraggSpots".to_owned(), s),
            ("addBackground".to_owned(), b),
            ("addArray".to_owned(), a),
        ])
    };
    published.push("CUDA", row(8.28, 1.87, 0.13));
    published.push("Kokkos", row(6.98, 1.76, 0.12));
    println!("published A100 means (ms):");
    print!("{}", kernel_time_table(&published, "CUDA", TableFormat::Markdown)?);

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut file = load_config(data.join("example.toml"))?.file;
    file.detector.slow_pixels = 48;
    file.detector.fast_pixels = 48;
    let config = SimulationConfig::from_file(file, &data)?;
    let mut plan = config.campaign_plan();
    plan.n_images = 4;
    plan.io_enabled = false;
    plan.output_dir = None;

    let serial = run_campaign(&plan, &config, &Executor::serial())?;
    let workers = run_campaign(&plan, &config, &Executor::workers(4)?)?;
    let measured = KernelTimes::from_reports([("serial", &serial), ("workers(4)", &workers)]);
    println!("\nthis host (ms):");
    print!("{}", kernel_time_table(&measured, "serial", TableFormat::Text)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
