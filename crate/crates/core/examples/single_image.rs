// Simulate one still from the shipped config and write it as raw
// `.bin` + `.json` sidecar, plus an 8-bit PGM preview.
//
// cargo run --release --example single_image

use std::path::{Path, PathBuf};

use xtrace::exec::Executor;
use xtrace::io::{load_config, write_image, write_preview, ImageMeta};
use xtrace::kernels::image_stats;

fn example_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/example.toml")
}

pub fn run_example() -> xtrace::Result<()> {
    let config = load_config(example_config())?;
    let exec = Executor::from_env()?;
    let seed = config.seed();
    let image = config.simulation.simulate(&exec, seed)?;

    let stats = image_stats(&exec, &image)?;
    println!(
        "{}x{} image, min {:.3e} max {:.3e} mean {:.3e} total {:.3e}",
        image.dims().0,
        image.dims().1,
        stats.min,
        stats.max,
        stats.mean,
        stats.total
    );
    for t in exec.timings() {
        println!("  {:<16} {:8.3} ms", t.label, t.elapsed_ms);
    }

    let dir = std::env::temp_dir().join("xtrace-examples").join("single_image");
    std::fs::create_dir_all(&dir).map_err(|e| xtrace::Error::Io { path: dir.clone(), source: e })?;
    let meta = ImageMeta::for_image(&config.simulation, seed, Some(0))
        .with_config(config.echo());
    let sidecar = write_image(&image, dir.join("shot"), &meta)?;
    write_preview(&image, dir.join("shot.pgm"))?;
    println!("wrote {} (crc32 {:08x})", dir.join("shot.bin").display(), sidecar.crc32);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
