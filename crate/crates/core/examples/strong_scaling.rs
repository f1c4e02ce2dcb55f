// Strong scaling: the same set of images on 1, 2 and 4 workers (ranks with
// a device slot each), reported as speed-up and parallel efficiency.
//
// cargo run --release --example strong_scaling -- 256

use std::path::Path;

use xtrace::bench::{scaling_table, strong_scaling, TableFormat};
use xtrace::io::{load_config, write_scaling_csv, SimulationConfig};

pub fn run_example() -> xtrace::Result<()> {
    let images = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut file = load_config(data.join("example.toml"))?.file;
    file.detector.slow_pixels = 48;
    file.detector.fast_pixels = 48;
    let config = SimulationConfig::from_file(file, &data)?;

    let mut plan = config.campaign_plan();
    plan.n_images = images;
    plan.io_enabled = false;
    let (rows, _) = strong_scaling(&config, &plan, &[1, 2, 4], 1)?;
    print!("{}", scaling_table(&rows, TableFormat::Text));

    let dir = std::env::temp_dir().join("xtrace-examples");
    std::fs::create_dir_all(&dir).map_err(|e| xtrace::Error::Io { path: dir.clone(), source: e })?;
    write_scaling_csv(&rows, dir.join("scaling.csv"))?;
    println!("csv: {}", dir.join("scaling.csv").display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
