use serde::Serialize;

use super::buffer::{PixelBuffer, PixelValue};
use crate::error::{Error, Result};
use crate::exec::{Executor, RangePolicy};

/// Pixels per block when histogramming.
const HIST_BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub total: f64,
}

/// Exact min/max and a pairwise-tree total via `parallel_reduce`.
pub fn image_stats<T: PixelValue>(exec: &Executor, buf: &PixelBuffer<T>) -> Result<ImageStats> {
    if buf.is_empty() {
        return Err(Error::InvalidArgument("image_stats on an empty buffer".into()));
    }
    let data = buf.as_slice();
    let (min, max, total) = exec.parallel_reduce(
        "imageStats",
        RangePolicy::len(data.len()),
        (f64::INFINITY, f64::NEG_INFINITY, 0.0),
        |i| {
            let v = data[i].to_f64();
            (v, v, v)
        },
        |a, b| (a.0.min(b.0), a.1.max(b.1), a.2 + b.2),
    );
    Ok(ImageStats {
        min,
        max,
        mean: total / data.len() as f64,
        total,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    /// Inclusive prefix sums of `counts`.
    pub cumulative: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn in_range(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }
}

/// `n_bins` equal bins over `[lo, hi]`; bin `b` is `[lo + b·w, lo + (b+1)·w)`
/// except the last, which also takes `hi`. Counts come from a blockwise
/// `parallel_reduce`, cumulative counts from `parallel_scan`.
pub fn image_histogram<T: PixelValue>(
    exec: &Executor,
    buf: &PixelBuffer<T>,
    n_bins: usize,
    range: (f64, f64),
) -> Result<Histogram> {
    let (lo, hi) = range;
    if n_bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "histogram range [{lo}, {hi}] must be finite with lo < hi"
        )));
    }
    let data = buf.as_slice();
    let scale = n_bins as f64 / (hi - lo);
    // slot n_bins = underflow, n_bins + 1 = overflow
    let tally = exec.parallel_reduce(
        "imageHistogram",
        RangePolicy::len(data.len().div_ceil(HIST_BLOCK)),
        vec![0u64; n_bins + 2],
        |block| {
            let mut local = vec![0u64; n_bins + 2];
            let end = ((block + 1) * HIST_BLOCK).min(data.len());
            for v in &data[block * HIST_BLOCK..end] {
                let v = v.to_f64();
                let slot = if v < lo {
                    n_bins
                } else if v > hi {
                    n_bins + 1
                } else {
                    (((v - lo) * scale) as usize).min(n_bins - 1)
                };
                local[slot] += 1;
            }
            local
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    let counts = tally[..n_bins].to_vec();
    let cumulative = exec.parallel_scan("histogramScan", RangePolicy::len(n_bins), |b| counts[b], |a, b| a + b);
    Ok(Histogram {
        counts,
        cumulative,
        underflow: tally[n_bins],
        overflow: tally[n_bins + 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_small() {
        let b = PixelBuffer::from_vec(2, 2, vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let s = image_stats(&Executor::serial(), &b).unwrap();
        assert_eq!(s, ImageStats { min: 1.0, max: 4.0, mean: 2.5, total: 10.0 });
    }

    #[test]
    fn stats_constant() {
        let b = PixelBuffer::from_vec(10, 10, vec![0.5f64; 100]).unwrap();
        let s = image_stats(&Executor::workers(3).unwrap(), &b).unwrap();
        assert_eq!((s.min, s.max, s.mean, s.total), (0.5, 0.5, 0.5, 50.0));
    }

    #[test]
    fn stats_empty_rejected() {
        let b = PixelBuffer::<f32>::zeros(0, 5);
        assert!(image_stats(&Executor::serial(), &b).is_err());
    }

    #[test]
    fn histogram_two_bins() {
        let b = PixelBuffer::from_vec(1, 2, vec![0.1f32, 0.9]).unwrap();
        let h = image_histogram(&Executor::serial(), &b, 2, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts, vec![1, 1]);
        assert_eq!(h.cumulative, vec![1, 2]);
    }

    #[test]
    fn histogram_upper_edge_closed() {
        let b = PixelBuffer::from_vec(1, 5, vec![1.0f64; 5]).unwrap();
        let h = image_histogram(&Executor::serial(), &b, 4, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts, vec![0, 0, 0, 5]);
        assert_eq!((h.underflow, h.overflow), (0, 0));
    }

    #[test]
    fn histogram_out_of_range() {
        let b = PixelBuffer::from_vec(1, 4, vec![-1.0f64, 0.0, 2.0, 0.5]).unwrap();
        let h = image_histogram(&Executor::serial(), &b, 2, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts, vec![1, 1]);
        assert_eq!((h.underflow, h.overflow), (1, 1));
    }

    #[test]
    fn histogram_bad_args() {
        let b = PixelBuffer::from_vec(1, 1, vec![0.0f32]).unwrap();
        assert!(image_histogram(&Executor::serial(), &b, 0, (0.0, 1.0)).is_err());
        assert!(image_histogram(&Executor::serial(), &b, 4, (1.0, 1.0)).is_err());
        assert!(image_histogram(&Executor::serial(), &b, 4, (0.0, f64::NAN)).is_err());
    }
}
