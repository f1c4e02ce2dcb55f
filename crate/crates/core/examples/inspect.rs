// Write an image, read it back with its CRC check, and summarize it with
// the reduce (stats) and scan (histogram) patterns.
//
// cargo run --example inspect

use xtrace::exec::Executor;
use xtrace::io::{read_image, write_image, ImageMeta};
use xtrace::kernels::{image_histogram, image_stats, PixelBuffer};
use xtrace::model::{BeamSpectrum, DetectorPanel, StructureFactorTable, UnitCell};
use xtrace::sim::{MosaicSource, OrientationSource, Simulation};

pub fn run_example() -> xtrace::Result<()> {
    let sim = Simulation {
        cell: UnitCell::cubic(50.0)?,
        n_cells: [6, 6, 6],
        orientation: OrientationSource::RandomPerImage,
        mosaic: MosaicSource::Generated { count: 2, spread_deg: 0.1 },
        sf_table: StructureFactorTable::empty(100.0).into(),
        panel: DetectorPanel::square(48, 1.5e-4, 0.05)?,
        spectrum: BeamSpectrum::monochromatic(1.0, 1e24)?,
        background: None,
        oversample: 1,
    };
    let exec = Executor::from_env()?;
    let image = sim.simulate(&exec, 5)?;

    let dir = std::env::temp_dir().join("xtrace-examples").join("inspect");
    std::fs::create_dir_all(&dir).map_err(|e| xtrace::Error::Io { path: dir.clone(), source: e })?;
    write_image(&image, dir.join("img"), &ImageMeta::for_image(&sim, 5, None))?;

    let (back, sidecar): (PixelBuffer<f32>, _) = read_image(dir.join("img.bin"))?;
    println!("read {}x{} pixels, crc32 {:08x} verified", sidecar.slow_pixels, sidecar.fast_pixels, sidecar.crc32);
    let stats = image_stats(&exec, &back)?;
    println!("min {:.4e} max {:.4e} mean {:.4e} total {:.4e}", stats.min, stats.max, stats.mean, stats.total);
    let hist = image_histogram(&exec, &back, 16, (stats.min, stats.max))?;
    for (b, c) in hist.counts.iter().enumerate() {
        println!("  bin {b:2}: {c}");
    }
    println!("cumulative total {}", hist.cumulative.last().unwrap());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
