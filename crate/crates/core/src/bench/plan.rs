use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a campaign spreads images over ranks and simulated devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignPlan {
    pub n_images: u64,
    pub ranks: usize,
    /// Number of simulated device slots; at most this many ranks compute at once.
    pub devices: usize,
    pub ranks_per_device: usize,
    pub io_enabled: bool,
    /// Per-image write latency used when I/O is on but there is no output directory.
    pub io_latency_ms: f64,
    /// Image `i` is simulated with seed `seed + i`.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl CampaignPlan {
    /// `ranks = devices · ranks_per_device`, I/O off.
    pub fn new(n_images: u64, devices: usize, ranks_per_device: usize) -> Self {
        CampaignPlan {
            n_images,
            ranks: devices * ranks_per_device,
            devices,
            ranks_per_device,
            io_enabled: false,
            io_latency_ms: 0.0,
            seed: 0,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_images", self.n_images as usize),
            ("ranks", self.ranks),
            ("devices", self.devices),
            ("ranks_per_device", self.ranks_per_device),
        ] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("campaign {name} must be >= 1")));
            }
        }
        if !(self.io_latency_ms.is_finite() && self.io_latency_ms >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "io latency {} ms must be >= 0",
                self.io_latency_ms
            )));
        }
        Ok(())
    }
}

/// Static contiguous split of `[0, n_images)`: the first `n % ranks` ranks
/// take one extra image.
pub fn plan_batches(n_images: u64, ranks: usize) -> Vec<(usize, Range<u64>)> {
    let ranks = ranks.max(1);
    let base = n_images / ranks as u64;
    let extra = n_images % ranks as u64;
    let mut start = 0;
    (0..ranks)
        .map(|r| {
            let len = base + u64::from((r as u64) < extra);
            let range = start..start + len;
            start += len;
            (r, range)
        })
        .collect()
}
