// The three execution patterns on serial and multi-worker executors.
// Reductions and scans use a fixed combination tree, so floating-point
// results match bit for bit whatever the worker count.
//
// cargo run --example patterns

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use xtrace::exec::{Executor, RangePolicy};
use xtrace::kernels::{image_histogram, image_stats, PixelBuffer};

pub fn run_example() -> xtrace::Result<()> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let values: Vec<f64> = (0..100_000).map(|_| rng.gen::<f64>() * 1e3).collect();
    let executors = [
        Executor::serial(),
        Executor::workers(2)?,
        Executor::workers(4)?,
        Executor::workers(8)?,
    ];

    for exec in &executors {
        let calls = AtomicUsize::new(0);
        exec.parallel_for("count", RangePolicy::len(values.len()), |_| {
            calls.fetch_add(1, Ordering::Relaxed);
        });
        let sum = exec.parallel_reduce("sum", RangePolicy::len(values.len()), 0.0, |i| values[i], |a, b| a + b);
        let prefix = exec.parallel_scan("prefix", RangePolicy::len(values.len()), |i| values[i], |a, b| a + b);
        println!(
            "{:<10} calls {:6}  sum bits {:016x}  last prefix bits {:016x}",
            exec.name(),
            calls.load(Ordering::Relaxed),
            sum.to_bits(),
            prefix.last().copied().unwrap_or(0.0).to_bits()
        );
    }

    let buf = PixelBuffer::from_vec(250, 400, values)?;
    let exec = &executors[3];
    let stats = image_stats(exec, &buf)?;
    let hist = image_histogram(exec, &buf, 8, (0.0, 1e3))?;
    println!("stats: min {:.3} max {:.3} mean {:.3}", stats.min, stats.max, stats.mean);
    println!("histogram counts     {:?}", hist.counts);
    println!("histogram cumulative {:?}", hist.cumulative);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
