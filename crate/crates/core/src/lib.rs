//! Per-pixel X-ray tracing for serial crystallography images.
//!
//! * [`model`]: unit cells, orientations, mosaic domains, detector and beam.
//! * [`kernels`]: the spots, background and accumulate kernels, plus image
//!   statistics built on the reduce and scan patterns.
//! * [`exec`]: `parallel_for` / `parallel_reduce` / `parallel_scan` over
//!   serial or multi-worker executors, with deterministic reductions.
//! * [`sim`]: a configured scene and the three-kernel image pipeline.
//! * [`bench`]: campaign scheduling over ranks and shared device slots,
//!   strong-scaling and multi-tenancy sweeps, kernel-time tables.
//! * [`io`]: config, tables, raw images with sidecars, previews, CSV.
//! * [`cli`]: the `xtrace` command line.

pub mod bench;
pub mod cli;
pub mod error;
pub mod exec;
pub mod io;
pub mod kernels;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
