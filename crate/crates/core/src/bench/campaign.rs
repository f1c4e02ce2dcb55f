//! Campaign runner. Ranks are scoped threads; a counting gate with one slot
//! per simulated device bounds how many ranks compute at once. Writes (or
//! simulated write latency) happen outside the gate, so a rank waiting on
//! I/O leaves its device to another rank.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::plan::{plan_batches, CampaignPlan};
use crate::error::{Error, Result};
use crate::exec::{Executor, KernelTiming};
use crate::io::{write_image, ImageMeta, SimulationConfig};

/// Counting semaphore standing in for shared devices.
struct DeviceGate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct DeviceSlot<'a>(&'a DeviceGate);

impl DeviceGate {
    fn new(slots: usize) -> Self {
        DeviceGate {
            free: Mutex::new(slots),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> DeviceSlot<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        DeviceSlot(self)
    }
}

impl Drop for DeviceSlot<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelAggregate {
    pub total_ms: f64,
    pub count: u64,
    pub mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedImage {
    pub index: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub plan: CampaignPlan,
    pub executor: String,
    pub total_wall_s: f64,
    pub per_rank_images: Vec<u64>,
    /// Wall time each rank spent on its images (compute, gate wait, and I/O).
    pub per_rank_busy_s: Vec<f64>,
    pub kernel_times: BTreeMap<String, KernelAggregate>,
    pub throughput: f64,
    pub failed_images: Vec<FailedImage>,
}

impl CampaignReport {
    pub fn images(&self) -> u64 {
        self.per_rank_images.iter().sum()
    }
}

pub fn aggregate_timings(timings: &[KernelTiming]) -> BTreeMap<String, KernelAggregate> {
    let mut out: BTreeMap<String, KernelAggregate> = BTreeMap::new();
    for t in timings {
        let e = out.entry(t.label.clone()).or_insert(KernelAggregate {
            total_ms: 0.0,
            count: 0,
            mean_ms: 0.0,
        });
        e.total_ms += t.elapsed_ms;
        e.count += 1;
    }
    for e in out.values_mut() {
        e.mean_ms = e.total_ms / e.count as f64;
    }
    out
}

/// Image file stem inside a campaign output directory.
pub fn image_stem(dir: &Path, index: u64) -> std::path::PathBuf {
    dir.join(format!("img_{index:06}"))
}

struct RankOutcome {
    images: u64,
    busy_s: f64,
    timings: Vec<KernelTiming>,
    failed: Vec<FailedImage>,
}

/// Simulates every image of `plan` and assembles the report after all ranks
/// join. An I/O error aborts the campaign; a per-image simulation error is
/// recorded and the campaign carries on.
pub fn run_campaign(plan: &CampaignPlan, config: &SimulationConfig, exec: &Executor) -> Result<CampaignReport> {
    plan.validate()?;
    let sim = &config.simulation;
    let config_echo = config.echo();
    if let (true, Some(dir)) = (plan.io_enabled, &plan.output_dir) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let gate = DeviceGate::new(plan.devices);
    let abort = AtomicBool::new(false);
    let io_failure: Mutex<Option<Error>> = Mutex::new(None);
    let latency = Duration::from_secs_f64(plan.io_latency_ms / 1e3);

    let rank_body = |range: std::ops::Range<u64>| -> RankOutcome {
        let rank_exec = exec.fork();
        let started = Instant::now();
        let mut failed = Vec::new();
        let mut images = 0;
        for index in range {
            if abort.load(Ordering::Relaxed) {
                break;
            }
            let seed = plan.seed.wrapping_add(index);
            let result = {
                let _slot = gate.acquire();
                sim.simulate(&rank_exec, seed)
            };
            images += 1;
            let image = match result {
                Ok(image) => image,
                Err(e) => {
                    log::warn!("image {index}: {e}");
                    failed.push(FailedImage {
                        index,
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            if !plan.io_enabled {
                continue;
            }
            match &plan.output_dir {
                Some(dir) => {
                    let meta = ImageMeta::for_image(sim, seed, Some(index)).with_config(config_echo.clone());
                    match write_image(&image, image_stem(dir, index), &meta) {
                        Ok(_) => {}
                        Err(e @ Error::NumericalFault { .. }) => failed.push(FailedImage {
                            index,
                            message: e.to_string(),
                        }),
                        Err(e) => {
                            abort.store(true, Ordering::Relaxed);
                            io_failure.lock().unwrap().get_or_insert(Error::Image {
                                index,
                                source: Box::new(e),
                            });
                            break;
                        }
                    }
                }
                None => std::thread::sleep(latency),
            }
        }
        RankOutcome {
            images,
            busy_s: started.elapsed().as_secs_f64(),
            timings: rank_exec.take_timings(),
            failed,
        }
    };

    let batches = plan_batches(plan.n_images, plan.ranks);
    let start = Instant::now();
    let outcomes: Vec<RankOutcome> = if batches.len() == 1 {
        vec![rank_body(batches[0].1.clone())]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = batches
                .iter()
                .map(|(_, range)| {
                    let range = range.clone();
                    let body = &rank_body;
                    s.spawn(move || body(range))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("rank panicked")).collect()
        })
    };
    let total_wall_s = start.elapsed().as_secs_f64();

    if let Some(e) = io_failure.into_inner().unwrap() {
        return Err(e);
    }

    let all_timings: Vec<KernelTiming> = outcomes.iter().flat_map(|o| o.timings.iter().cloned()).collect();
    let mut failed_images: Vec<FailedImage> = outcomes.iter().flat_map(|o| o.failed.iter().cloned()).collect();
    failed_images.sort_by_key(|f| f.index);
    Ok(CampaignReport {
        plan: plan.clone(),
        executor: exec.name().to_owned(),
        total_wall_s,
        per_rank_images: outcomes.iter().map(|o| o.images).collect(),
        per_rank_busy_s: outcomes.iter().map(|o| o.busy_s).collect(),
        kernel_times: aggregate_timings(&all_timings),
        throughput: plan.n_images as f64 / total_wall_s,
        failed_images,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_bounds_concurrency() {
        use std::sync::atomic::AtomicUsize;
        let gate = DeviceGate::new(2);
        let inside = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..6 {
                s.spawn(|| {
                    for _ in 0..5 {
                        let _slot = gate.acquire();
                        let now = inside.fetch_add(1, Ordering::SeqCst) + 1;
                        peak.fetch_max(now, Ordering::SeqCst);
                        std::thread::sleep(Duration::from_millis(1));
                        inside.fetch_sub(1, Ordering::SeqCst);
                    }
                });
            }
        });
        assert!(peak.into_inner() <= 2);
    }

    #[test]
    fn aggregates_by_label() {
        let t = |label: &str, ms| KernelTiming {
            label: label.into(),
            elapsed_ms: ms,
        };
        let agg = aggregate_timings(&[t("a", 1.0), t("b", 4.0), t("a", 3.0)]);
        assert_eq!(agg["a"], KernelAggregate { total_ms: 4.0, count: 2, mean_ms: 2.0 });
        assert_eq!(agg["b"].count, 1);
    }
}
