//! `xtrace` command line: `simulate`, `benchmark`, `report`, `inspect`.
//!
//! Exit codes: 0 success, 1 usage/config/report error, 2 I/O error,
//! 3 numerical fault, 4 CRC mismatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    kernel_time_table, multi_tenancy, run_campaign, scaling_table, strong_scaling, tenancy_table, CampaignReport,
    KernelTimes, TableFormat,
};
use crate::error::Error;
use crate::exec::Executor;
use crate::io::{
    load_config, read_image, write_kernel_csv, write_scaling_csv, write_tenancy_csv, CsvTable, SCALING_COLUMNS,
};
use crate::kernels::{image_histogram, image_stats};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CRC: i32 = 4;

const HISTOGRAM_BINS: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "xtrace", version, about = "X-ray tracing simulator for serial crystallography images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a batch of images
    Simulate(SimulateArgs),
    /// Strong-scaling or ranks-per-device sweeps
    Benchmark(BenchmarkArgs),
    /// Render a scaling or kernel-time CSV as a table
    Report(ReportArgs),
    /// Statistics and histogram of a written image
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExecutorArg {
    Serial,
    Workers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Md,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Simulation config (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory for img_NNNNNN.bin/.json
    #[arg(long, value_name = "DIR", conflicts_with = "no_io")]
    out: Option<PathBuf>,
    /// Number of images (overrides campaign.images)
    #[arg(long, value_name = "N")]
    images: Option<u64>,
    /// Executor each rank runs its kernels on
    #[arg(long, value_enum, default_value = "workers")]
    executor: ExecutorArg,
    /// Worker count for --executor workers (default: XTRACE_WORKERS or all cores)
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Base seed; image i uses seed + i (overrides simulation.seed)
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Skip writing images
    #[arg(long)]
    no_io: bool,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Simulation config (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Images per run (overrides campaign.images)
    #[arg(long, value_name = "N")]
    images: Option<u64>,
    /// Strong scaling over these worker counts, e.g. 1,2,4
    #[arg(long, value_name = "CSV", value_delimiter = ',', conflicts_with_all = ["ranks", "devices", "ranks_per_device"])]
    workers_list: Option<Vec<usize>>,
    /// Explicit rank count for a single campaign run
    #[arg(long, value_name = "R", conflicts_with = "ranks_per_device")]
    ranks: Option<usize>,
    /// Simulated device slots
    #[arg(long, value_name = "D")]
    devices: Option<usize>,
    /// Ranks sharing each device; a list runs a sweep, e.g. 1,2,4
    #[arg(long, value_name = "K", value_delimiter = ',')]
    ranks_per_device: Option<Vec<usize>>,
    /// Simulated per-image write latency; enables I/O
    #[arg(long, value_name = "L")]
    io_latency_ms: Option<f64>,
    /// Write results as CSV (kernel times go to <stem>.kernels.csv)
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Repeats per setting; the fastest is reported
    #[arg(long, value_name = "M", default_value_t = 1)]
    repeat: usize,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Scaling, ranks-per-device or kernel-time CSV
    #[arg(long, value_name = "PATH")]
    csv: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct InspectArgs {
    /// Image written by `simulate` (its .json sidecar must sit alongside)
    #[arg(value_name = "IMAGE.bin")]
    image: PathBuf,
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Io { .. } => EXIT_IO,
        Error::NumericalFault { .. } => EXIT_NUMERICAL,
        Error::Crc { .. } => EXIT_CRC,
        _ => EXIT_CONFIG,
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name), runs the subcommand, and
/// returns the exit code. Output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_CONFIG
                }
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Benchmark(a) => benchmark(a, out),
        Command::Report(a) => report(a, out),
        Command::Inspect(a) => inspect(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn kernel_means(out: &mut dyn Write, report: &CampaignReport) {
    for (kernel, agg) in &report.kernel_times {
        let _ = writeln!(out, "  {kernel:<16} {:>10.3} ms mean  ({} calls)", agg.mean_ms, agg.count);
    }
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let config = load_config(&a.config)?;
    let exec = match (a.executor, a.workers) {
        (ExecutorArg::Serial, Some(_)) => return Err(usage("--workers cannot be combined with --executor serial")),
        (ExecutorArg::Serial, None) => Executor::serial(),
        (ExecutorArg::Workers, Some(n)) => Executor::workers(n)?,
        (ExecutorArg::Workers, None) => Executor::from_env()?,
    };
    let mut plan = config.campaign_plan();
    if let Some(n) = a.images {
        plan.n_images = n;
    }
    if let Some(seed) = a.seed {
        plan.seed = seed;
    }
    if a.no_io {
        plan.io_enabled = false;
    } else {
        if let Some(dir) = a.out {
            plan.output_dir = Some(dir);
        }
        plan.io_enabled = true;
        if plan.output_dir.is_none() {
            return Err(usage("no output directory: pass --out DIR, set campaign.output_dir, or use --no-io"));
        }
    }
    let report = run_campaign(&plan, &config, &exec)?;
    let _ = writeln!(
        out,
        "simulated {} images on {} rank(s), executor {}, in {:.3} s ({:.2} images/s)",
        report.images(),
        plan.ranks,
        exec.name(),
        report.total_wall_s,
        report.throughput
    );
    match (&plan.output_dir, plan.io_enabled) {
        (Some(dir), true) => {
            let _ = writeln!(out, "images written to {}", dir.display());
        }
        _ => {
            let _ = writeln!(out, "image output disabled");
        }
    }
    kernel_means(out, &report);
    if let Some(first) = report.failed_images.first() {
        for f in &report.failed_images {
            let _ = writeln!(out, "  failed image {}: {}", f.index, f.message);
        }
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!(
                "{} image(s) failed; first: image {}: {}",
                report.failed_images.len(),
                first.index,
                first.message
            ),
        });
    }
    Ok(())
}

fn kernels_csv_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.kernels.csv"))
}

fn benchmark(a: BenchmarkArgs, out: &mut dyn Write) -> CmdResult {
    let config = load_config(&a.config)?;
    if a.repeat == 0 {
        return Err(usage("--repeat must be >= 1"));
    }
    let mut plan = config.campaign_plan();
    if let Some(n) = a.images {
        plan.n_images = n;
    }
    plan.output_dir = None;
    match a.io_latency_ms {
        Some(l) if !(l.is_finite() && l >= 0.0) => return Err(usage("--io-latency-ms must be >= 0")),
        Some(l) => {
            plan.io_enabled = true;
            plan.io_latency_ms = l;
        }
        None => plan.io_enabled = false,
    }

    let (names, reports) = if let Some(workers) = &a.workers_list {
        let (rows, reports) = strong_scaling(&config, &plan, workers, a.repeat)?;
        let _ = writeln!(out, "strong scaling, {} images, best of {}", plan.n_images, a.repeat);
        let _ = write!(out, "{}", scaling_table(&rows, TableFormat::Text));
        if let Some(csv) = &a.csv {
            write_scaling_csv(&rows, csv)?;
        }
        (workers.iter().map(|w| format!("workers={w}")).collect::<Vec<_>>(), reports)
    } else {
        if let Some(d) = a.devices {
            plan.devices = d;
        }
        let sweep = a.ranks_per_device.clone().unwrap_or_else(|| vec![plan.ranks_per_device]);
        let sweep = match a.ranks {
            Some(r) => {
                // explicit rank count: one run, ranks need not be a multiple of devices
                plan.ranks = r;
                plan.validate()?;
                let exec = Executor::serial().with_name(format!("ranks={r}"));
                let mut best: Option<CampaignReport> = None;
                for _ in 0..a.repeat {
                    let rep = run_campaign(&plan, &config, &exec)?;
                    if best.as_ref().is_none_or(|b| rep.total_wall_s < b.total_wall_s) {
                        best = Some(rep);
                    }
                }
                let rep = best.expect("repeat >= 1");
                let row = crate::bench::TenancyRow {
                    ranks_per_device: plan.ranks_per_device,
                    ranks: r,
                    devices: plan.devices,
                    wall_s: rep.total_wall_s,
                    throughput: rep.throughput,
                };
                (vec![row], vec![rep])
            }
            None => multi_tenancy(&config, &plan, &sweep, a.repeat)?,
        };
        let (rows, reports) = sweep;
        let _ = writeln!(
            out,
            "campaign, {} images, {} device(s), io {}, best of {}",
            plan.n_images,
            plan.devices,
            if plan.io_enabled {
                format!("latency {} ms", plan.io_latency_ms)
            } else {
                "disabled".into()
            },
            a.repeat
        );
        let _ = write!(out, "{}", tenancy_table(&rows, TableFormat::Text));
        if let Some(csv) = &a.csv {
            write_tenancy_csv(&rows, csv)?;
        }
        let names = rows.iter().map(|r| format!("ranks={}", r.ranks)).collect();
        (names, reports)
    };

    let pairs: Vec<(&str, &CampaignReport)> = names.iter().map(String::as_str).zip(&reports).collect();
    let times = KernelTimes::from_reports(pairs.iter().copied());
    if let Ok(table) = kernel_time_table(&times, &names[0], TableFormat::Text) {
        let _ = writeln!(out, "\nmean kernel times");
        let _ = write!(out, "{table}");
    }
    if let Some(csv) = &a.csv {
        write_kernel_csv(pairs.iter().copied(), kernels_csv_path(csv))?;
    }
    Ok(())
}

fn report(a: ReportArgs, out: &mut dyn Write) -> CmdResult {
    let format = match a.format {
        FormatArg::Table => TableFormat::Text,
        FormatArg::Md => TableFormat::Markdown,
    };
    let table = CsvTable::read(&a.csv)?;
    let has = |c: &str| table.header.iter().any(|h| h == c);
    let rendered = if has("kernel") || has("executor") {
        let times = table.kernel_times()?;
        let baseline = times.rows[0].0.clone();
        kernel_time_table(&times, &baseline, format)?
    } else if has("ranks_per_device") {
        let rows = read_tenancy(&table)?;
        tenancy_table(&rows, format)
    } else {
        if let Some(missing) = SCALING_COLUMNS.iter().find(|c| !has(c)) {
            return Err(usage(format!("{}: missing column `{missing}`", a.csv.display())));
        }
        scaling_table(&table.scaling_rows()?, format)
    };
    let _ = write!(out, "{rendered}");
    Ok(())
}

fn read_tenancy(table: &CsvTable) -> std::result::Result<Vec<crate::bench::TenancyRow>, Failure> {
    let col = |name: &str| {
        table
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| usage(format!("missing column `{name}`")))
    };
    let cols: Vec<usize> = crate::io::TENANCY_COLUMNS
        .iter()
        .map(|c| col(c))
        .collect::<std::result::Result<_, _>>()?;
    if table.records.is_empty() {
        return Err(usage("CSV has a header but no data rows"));
    }
    table
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let bad = |c: usize| usage(format!("row {}: column `{}` is not valid", i + 1, table.header[c]));
            Ok(crate::bench::TenancyRow {
                ranks_per_device: r[cols[0]].parse().map_err(|_| bad(cols[0]))?,
                ranks: r[cols[1]].parse().map_err(|_| bad(cols[1]))?,
                devices: r[cols[2]].parse().map_err(|_| bad(cols[2]))?,
                wall_s: r[cols[3]].parse().map_err(|_| bad(cols[3]))?,
                throughput: r[cols[4]].parse().map_err(|_| bad(cols[4]))?,
            })
        })
        .collect()
}

fn inspect(a: InspectArgs, out: &mut dyn Write) -> CmdResult {
    let (buf, sidecar) = read_image(&a.image)?;
    let exec = Executor::from_env()?;
    let stats = image_stats(&exec, &buf)?;
    let range = if stats.min < stats.max {
        (stats.min, stats.max)
    } else {
        (stats.min - 0.5, stats.max + 0.5)
    };
    let hist = image_histogram(&exec, &buf, HISTOGRAM_BINS, range)?;
    let _ = writeln!(
        out,
        "{}: {}x{} pixels, seed {}, crc32 {:08x} ok",
        a.image.display(),
        sidecar.slow_pixels,
        sidecar.fast_pixels,
        sidecar.seed,
        sidecar.crc32
    );
    let _ = writeln!(out, "min   {}", stats.min);
    let _ = writeln!(out, "max   {}", stats.max);
    let _ = writeln!(out, "mean  {}", stats.mean);
    let _ = writeln!(out, "total {}", stats.total);
    let _ = writeln!(out, "histogram ({HISTOGRAM_BINS} bins over [{}, {}])", range.0, range.1);
    let width = (range.1 - range.0) / HISTOGRAM_BINS as f64;
    for (b, (count, cum)) in hist.counts.iter().zip(&hist.cumulative).enumerate() {
        let lo = range.0 + b as f64 * width;
        let _ = writeln!(out, "  [{lo:>14.6e}, {:>14.6e})  {count:>10}  {cum:>10}", lo + width);
    }
    Ok(())
}
