//! Backend-agnostic execution patterns: `parallel_for`, `parallel_reduce`
//! and `parallel_scan` over a range of indices, run either inline
//! ([`ExecKind::Serial`]) or on a set of scoped worker threads
//! ([`ExecKind::Workers`]).
//!
//! Bodies are plain closures over an index. They should capture only plain
//! values and read-only tables, never a handle back to an owning object.
//!
//! Reductions and scans are deterministic. The combination tree depends only
//! on the range, never on the worker count or scheduling order, so
//! floating-point results are bit-identical on every executor.

use std::convert::Infallible;
use std::fmt;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::error::{Error, Result};

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "XTRACE_WORKERS";

/// Ranges at most this long are folded left-to-right inside the tree.
const LEAF: usize = 32;
/// Subtrees at most this long are evaluated as one task.
const TASK: usize = 4096;
/// Fixed block length for scans.
const SCAN_BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecKind {
    Serial,
    Workers(NonZeroUsize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTiming {
    pub label: String,
    pub elapsed_ms: f64,
}

/// Half-open index range plus the minimum number of indices a worker
/// claims at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangePolicy {
    start: usize,
    end: usize,
    grain: Option<NonZeroUsize>,
}

impl RangePolicy {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidArgument(format!(
                "range start {start} exceeds end {end}"
            )));
        }
        Ok(RangePolicy {
            start,
            end,
            grain: None,
        })
    }

    /// `[0, len)`
    pub fn len(len: usize) -> Self {
        RangePolicy {
            start: 0,
            end: len,
            grain: None,
        }
    }

    pub fn with_grain(mut self, grain: usize) -> Result<Self> {
        self.grain = Some(
            NonZeroUsize::new(grain)
                .ok_or_else(|| Error::InvalidArgument("grain must be >= 1".into()))?,
        );
        Ok(self)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn count(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Explicit grain, or `ceil(count / (4 · workers))`.
    pub fn grain_for(&self, workers: usize) -> usize {
        match self.grain {
            Some(g) => g.get(),
            None => self.count().div_ceil(4 * workers.max(1)).max(1),
        }
    }
}

/// A body failed at `index`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexFault<E> {
    pub label: String,
    pub index: usize,
    pub error: E,
}

impl<E: fmt::Display> fmt::Display for IndexFault<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: index {}: {}", self.label, self.index, self.error)
    }
}

impl<E: fmt::Debug + fmt::Display> std::error::Error for IndexFault<E> {}

fn never<T>(r: std::result::Result<T, IndexFault<Infallible>>) -> T {
    match r {
        Ok(v) => v,
        Err(fault) => match fault.error {},
    }
}

/// Runs patterns and keeps a log of kernel timings.
#[derive(Debug)]
pub struct Executor {
    kind: ExecKind,
    name: String,
    log: Mutex<Vec<KernelTiming>>,
}

impl Executor {
    pub fn serial() -> Self {
        Executor {
            kind: ExecKind::Serial,
            name: "serial".into(),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn workers(n: usize) -> Result<Self> {
        let n = NonZeroUsize::new(n)
            .ok_or_else(|| Error::InvalidArgument("worker count must be >= 1".into()))?;
        Ok(Executor {
            kind: ExecKind::Workers(n),
            name: format!("workers({n})"),
            log: Mutex::new(Vec::new()),
        })
    }

    /// Workers executor sized from `XTRACE_WORKERS`, falling back to the
    /// host's available parallelism.
    pub fn from_env() -> Result<Self> {
        Self::workers(default_workers()?)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same kind and name with an empty timing log.
    pub fn fork(&self) -> Self {
        Executor {
            kind: self.kind,
            name: self.name.clone(),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn kind(&self) -> ExecKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn concurrency(&self) -> usize {
        match self.kind {
            ExecKind::Serial => 1,
            ExecKind::Workers(n) => n.get(),
        }
    }

    /// Runs `task(c)` for every chunk `c` in `0..n_chunks`, stopping early on
    /// failure and reporting the lowest failing index seen.
    fn run_chunks<E, F>(&self, n_chunks: usize, task: F) -> std::result::Result<(), (usize, E)>
    where
        E: Send,
        F: Fn(usize) -> std::result::Result<(), (usize, E)> + Sync,
    {
        let threads = self.concurrency().min(n_chunks);
        if threads <= 1 {
            return (0..n_chunks).try_for_each(task);
        }
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let first: Mutex<Option<(usize, E)>> = Mutex::new(None);
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(|| {
                    while !abort.load(Ordering::Relaxed) {
                        let c = next.fetch_add(1, Ordering::Relaxed);
                        if c >= n_chunks {
                            break;
                        }
                        if let Err((index, err)) = task(c) {
                            abort.store(true, Ordering::Relaxed);
                            let mut slot = first.lock().unwrap();
                            if slot.as_ref().is_none_or(|(i, _)| index < *i) {
                                *slot = Some((index, err));
                            }
                        }
                    }
                });
            }
        });
        match first.into_inner().unwrap() {
            Some(fault) => Err(fault),
            None => Ok(()),
        }
    }

    /// Invokes `body` exactly once for every index of `policy`, in no
    /// particular order.
    pub fn try_parallel_for<E, F>(
        &self,
        label: &str,
        policy: RangePolicy,
        body: F,
    ) -> std::result::Result<(), IndexFault<E>>
    where
        E: Send,
        F: Fn(usize) -> std::result::Result<(), E> + Sync,
    {
        let grain = policy.grain_for(self.concurrency());
        let n_chunks = policy.count().div_ceil(grain);
        self.run_chunks(n_chunks, |c| {
            let lo = policy.start + c * grain;
            let hi = (lo + grain).min(policy.end);
            (lo..hi).try_for_each(|i| body(i).map_err(|e| (i, e)))
        })
        .map_err(|(index, error)| IndexFault {
            label: label.to_owned(),
            index,
            error,
        })
    }

    pub fn parallel_for<F>(&self, label: &str, policy: RangePolicy, body: F)
    where
        F: Fn(usize) + Sync,
    {
        never(self.try_parallel_for(label, policy, |i| {
            body(i);
            Ok(())
        }))
    }

    /// `parallel_for` over the slots of `out`; each invocation gets exclusive
    /// access to exactly one element.
    pub fn try_for_each_slot<T, E, F>(
        &self,
        label: &str,
        out: &mut [T],
        body: F,
    ) -> std::result::Result<(), IndexFault<E>>
    where
        T: Send,
        E: Send,
        F: Fn(usize, &mut T) -> std::result::Result<(), E> + Sync,
    {
        let grain = RangePolicy::len(out.len()).grain_for(self.concurrency());
        let chunks: Vec<Mutex<&mut [T]>> = out.chunks_mut(grain).map(Mutex::new).collect();
        self.run_chunks(chunks.len(), |c| {
            let mut chunk = chunks[c].lock().unwrap();
            let base = c * grain;
            chunk
                .iter_mut()
                .enumerate()
                .try_for_each(|(j, slot)| body(base + j, slot).map_err(|e| (base + j, e)))
        })
        .map_err(|(index, error)| IndexFault {
            label: label.to_owned(),
            index,
            error,
        })
    }

    /// Folds `map` over the range with a fixed pairwise tree: ranges longer
    /// than 32 split at the midpoint, shorter ones fold left to right.
    /// `identity` is returned for an empty range.
    pub fn try_parallel_reduce<T, E, M, C>(
        &self,
        label: &str,
        policy: RangePolicy,
        identity: T,
        map: M,
        combine: C,
    ) -> std::result::Result<T, IndexFault<E>>
    where
        T: Send,
        E: Send,
        M: Fn(usize) -> std::result::Result<T, E> + Sync,
        C: Fn(T, T) -> T + Sync,
    {
        if policy.is_empty() {
            return Ok(identity);
        }
        let mut tasks = Vec::new();
        cut_tasks(policy.start, policy.end, &mut tasks);
        let partials: Vec<Mutex<Option<T>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
        self.run_chunks(tasks.len(), |t| {
            let (lo, hi) = tasks[t];
            let value = fold_tree(lo, hi, &map, &combine)?;
            *partials[t].lock().unwrap() = Some(value);
            Ok(())
        })
        .map_err(|(index, error)| IndexFault {
            label: label.to_owned(),
            index,
            error,
        })?;
        let mut values = partials
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("every task evaluated"));
        Ok(merge_tasks(policy.start, policy.end, &mut values, &combine))
    }

    pub fn parallel_reduce<T, M, C>(
        &self,
        label: &str,
        policy: RangePolicy,
        identity: T,
        map: M,
        combine: C,
    ) -> T
    where
        T: Send,
        M: Fn(usize) -> T + Sync,
        C: Fn(T, T) -> T + Sync,
    {
        never(self.try_parallel_reduce(label, policy, identity, |i| Ok(map(i)), combine))
    }

    /// Inclusive prefix fold: `out[i - start] = map(start) ⊕ … ⊕ map(i)`.
    ///
    /// The range is cut into fixed 4096-index blocks; each block is scanned
    /// locally, block totals are folded left to right, and each block's
    /// prefix is then combined onto its local values.
    pub fn try_parallel_scan<T, E, M, C>(
        &self,
        label: &str,
        policy: RangePolicy,
        map: M,
        combine: C,
    ) -> std::result::Result<Vec<T>, IndexFault<E>>
    where
        T: Clone + Send + Sync,
        E: Send,
        M: Fn(usize) -> std::result::Result<T, E> + Sync,
        C: Fn(T, T) -> T + Sync,
    {
        let n = policy.count();
        let n_blocks = n.div_ceil(SCAN_BLOCK);
        let blocks: Vec<Mutex<Vec<T>>> = (0..n_blocks).map(|_| Mutex::new(Vec::new())).collect();
        let fault = |(index, error)| IndexFault {
            label: label.to_owned(),
            index,
            error,
        };
        self.run_chunks(n_blocks, |b| {
            let lo = policy.start + b * SCAN_BLOCK;
            let hi = (lo + SCAN_BLOCK).min(policy.end);
            let mut local: Vec<T> = Vec::with_capacity(hi - lo);
            for i in lo..hi {
                let v = map(i).map_err(|e| (i, e))?;
                let next = match local.last() {
                    Some(prev) => combine(prev.clone(), v),
                    None => v,
                };
                local.push(next);
            }
            *blocks[b].lock().unwrap() = local;
            Ok(())
        })
        .map_err(fault)?;
        let mut blocks: Vec<Vec<T>> = blocks.into_iter().map(|m| m.into_inner().unwrap()).collect();

        // offsets[b] = fold of every block before b
        let mut offsets: Vec<Option<T>> = Vec::with_capacity(n_blocks);
        let mut running: Option<T> = None;
        for block in &blocks {
            offsets.push(running.clone());
            let total = block.last().expect("blocks are non-empty").clone();
            running = Some(match running {
                Some(acc) => combine(acc, total),
                None => total,
            });
        }

        let cells: Vec<Mutex<&mut Vec<T>>> = blocks.iter_mut().map(Mutex::new).collect();
        self.run_chunks::<Infallible, _>(n_blocks, |b| {
            if let Some(offset) = &offsets[b] {
                let mut block = cells[b].lock().unwrap();
                for v in block.iter_mut() {
                    let local = std::mem::replace(v, offset.clone());
                    *v = combine(offset.clone(), local);
                }
            }
            Ok(())
        })
        .unwrap_or_else(|(_, e)| match e {});
        drop(cells);
        Ok(blocks.into_iter().flatten().collect())
    }

    pub fn parallel_scan<T, M, C>(&self, label: &str, policy: RangePolicy, map: M, combine: C) -> Vec<T>
    where
        T: Clone + Send + Sync,
        M: Fn(usize) -> T + Sync,
        C: Fn(T, T) -> T + Sync,
    {
        never(self.try_parallel_scan(label, policy, |i| Ok(map(i)), combine))
    }

    /// Times `action` on the monotonic clock and appends `(label, ms)` to
    /// the timing log.
    pub fn kernel_timer<R>(&self, label: &str, action: impl FnOnce() -> R) -> (R, f64) {
        let start = Instant::now();
        let out = action();
        let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        self.log.lock().unwrap().push(KernelTiming {
            label: label.to_owned(),
            elapsed_ms,
        });
        (out, elapsed_ms)
    }

    pub fn timings(&self) -> Vec<KernelTiming> {
        self.log.lock().unwrap().clone()
    }

    pub fn take_timings(&self) -> Vec<KernelTiming> {
        std::mem::take(&mut *self.log.lock().unwrap())
    }
}

/// Default worker count: `XTRACE_WORKERS` if set, else available parallelism.
pub fn default_workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::config(
                WORKERS_ENV,
                format!("expected an integer >= 1, got {raw:?}"),
            )),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, NonZeroUsize::get)),
    }
}

fn cut_tasks(lo: usize, hi: usize, out: &mut Vec<(usize, usize)>) {
    if hi - lo <= TASK {
        out.push((lo, hi));
    } else {
        let mid = lo + (hi - lo) / 2;
        cut_tasks(lo, mid, out);
        cut_tasks(mid, hi, out);
    }
}

fn fold_tree<T, E, M, C>(lo: usize, hi: usize, map: &M, combine: &C) -> std::result::Result<T, (usize, E)>
where
    M: Fn(usize) -> std::result::Result<T, E>,
    C: Fn(T, T) -> T,
{
    debug_assert!(hi > lo);
    if hi - lo <= LEAF {
        let mut acc = map(lo).map_err(|e| (lo, e))?;
        for i in lo + 1..hi {
            acc = combine(acc, map(i).map_err(|e| (i, e))?);
        }
        Ok(acc)
    } else {
        let mid = lo + (hi - lo) / 2;
        let left = fold_tree(lo, mid, map, combine)?;
        let right = fold_tree(mid, hi, map, combine)?;
        Ok(combine(left, right))
    }
}

/// Recombines task results along the same midpoint splits `cut_tasks` used.
fn merge_tasks<T, I, C>(lo: usize, hi: usize, values: &mut I, combine: &C) -> T
where
    I: Iterator<Item = T>,
    C: Fn(T, T) -> T,
{
    if hi - lo <= TASK {
        values.next().expect("one value per task")
    } else {
        let mid = lo + (hi - lo) / 2;
        let left = merge_tasks(lo, mid, values, combine);
        let right = merge_tasks(mid, hi, values, combine);
        combine(left, right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU32;

    fn executors() -> Vec<Executor> {
        let mut v = vec![Executor::serial()];
        v.extend([1, 2, 4, 8].map(|n| Executor::workers(n).unwrap()));
        v
    }

    #[test]
    fn for_writes_each_slot_once() {
        for ex in executors() {
            let slots: Vec<AtomicU32> = (0..4).map(|_| AtomicU32::new(0)).collect();
            ex.parallel_for("record", RangePolicy::len(4), |i| {
                slots[i].fetch_add(1, Ordering::Relaxed);
            });
            assert!(slots.iter().all(|s| s.load(Ordering::Relaxed) == 1), "{}", ex.name());
        }
    }

    #[test]
    fn empty_range_never_invokes() {
        for ex in executors() {
            let calls = AtomicUsize::new(0);
            ex.parallel_for("empty", RangePolicy::new(5, 5).unwrap(), |_| {
                calls.fetch_add(1, Ordering::Relaxed);
            });
            assert_eq!(calls.into_inner(), 0);
        }
    }

    #[test]
    fn offset_range_and_custom_grain() {
        let ex = Executor::workers(3).unwrap();
        let hits: Vec<AtomicU32> = (0..100).map(|_| AtomicU32::new(0)).collect();
        let policy = RangePolicy::new(10, 97).unwrap().with_grain(7).unwrap();
        ex.parallel_for("offset", policy, |i| {
            hits[i].fetch_add(1, Ordering::Relaxed);
        });
        for (i, h) in hits.iter().enumerate() {
            let expect = u32::from((10..97).contains(&i));
            assert_eq!(h.load(Ordering::Relaxed), expect, "index {i}");
        }
    }

    #[test]
    fn for_reports_failing_index() {
        for ex in executors() {
            let err = ex
                .try_parallel_for("fail", RangePolicy::len(1000), |i| {
                    if i == 613 {
                        Err("boom")
                    } else {
                        Ok(())
                    }
                })
                .unwrap_err();
            assert_eq!(err.index, 613);
            assert_eq!(err.label, "fail");
        }
    }

    #[test]
    fn serial_failure_is_the_lowest_index() {
        let err = Executor::serial()
            .try_parallel_for("fail", RangePolicy::len(100), |i| if i % 10 == 7 { Err(i) } else { Ok(()) })
            .unwrap_err();
        assert_eq!(err.index, 7);
    }

    #[test]
    fn reduce_integer_sum() {
        for ex in executors() {
            let s = ex.parallel_reduce("sum", RangePolicy::new(1, 101).unwrap(), 0u64, |i| i as u64, |a, b| a + b);
            assert_eq!(s, 5050);
        }
    }

    #[test]
    fn reduce_empty_gives_identity() {
        let s = Executor::serial().parallel_reduce("e", RangePolicy::len(0), -1i64, |_| 0, |a, b| a + b);
        assert_eq!(s, -1);
    }

    #[test]
    fn reduce_max_of_constant() {
        let data = vec![3.25f64; 9999];
        for ex in executors() {
            let m = ex.parallel_reduce("max", RangePolicy::len(data.len()), f64::NEG_INFINITY, |i| data[i], f64::max);
            assert_eq!(m, 3.25);
        }
    }

    #[test]
    fn reduce_tree_is_fixed() {
        // non-associative combine exposes the tree shape: it must not vary
        let serial = Executor::serial().parallel_reduce(
            "shape",
            RangePolicy::len(20_000),
            0.0f64,
            |i| (i as f64).sin(),
            |a, b| a * 0.5 + b,
        );
        for ex in executors() {
            let v = ex.parallel_reduce("shape", RangePolicy::len(20_000), 0.0f64, |i| (i as f64).sin(), |a, b| a * 0.5 + b);
            assert_eq!(v.to_bits(), serial.to_bits(), "{}", ex.name());
        }
    }

    #[test]
    fn scan_of_ones() {
        for ex in executors() {
            assert_eq!(ex.parallel_scan("ones", RangePolicy::len(5), |_| 1u32, |a, b| a + b), vec![1, 2, 3, 4, 5]);
        }
    }

    #[test]
    fn scan_empty() {
        let v: Vec<u32> = Executor::workers(4).unwrap().parallel_scan("e", RangePolicy::len(0), |_| 1, |a, b| a + b);
        assert!(v.is_empty());
    }

    #[test]
    fn scan_offset_range_across_blocks() {
        let ex = Executor::workers(4).unwrap();
        let policy = RangePolicy::new(3, 3 + 3 * SCAN_BLOCK + 17).unwrap();
        let out = ex.parallel_scan("idx", policy, |i| i as u64, |a, b| a + b);
        let mut acc = 0u64;
        for (k, v) in out.iter().enumerate() {
            acc += (k + 3) as u64;
            assert_eq!(*v, acc);
        }
    }

    #[test]
    fn scan_reports_fault() {
        let err = Executor::workers(2)
            .unwrap()
            .try_parallel_scan("f", RangePolicy::len(10_000), |i| if i == 9000 { Err(()) } else { Ok(1u8) }, |a, b| a.wrapping_add(b))
            .unwrap_err();
        assert_eq!(err.index, 9000);
    }

    #[test]
    fn slots_get_their_index() {
        for ex in executors() {
            let mut out = vec![0usize; 1237];
            ex.try_for_each_slot::<_, Infallible, _>("idx", &mut out, |i, v| {
                *v = i * 2;
                Ok(())
            })
            .unwrap();
            assert!(out.iter().enumerate().all(|(i, v)| *v == 2 * i));
        }
    }

    #[test]
    fn default_grain() {
        assert_eq!(RangePolicy::len(100).grain_for(8), 4);
        assert_eq!(RangePolicy::len(3).grain_for(8), 1);
        assert_eq!(RangePolicy::len(0).grain_for(2), 1);
        assert_eq!(RangePolicy::len(100).with_grain(9).unwrap().grain_for(8), 9);
        assert!(RangePolicy::len(1).with_grain(0).is_err());
        assert!(RangePolicy::new(4, 2).is_err());
    }

    #[test]
    fn timer_logs_each_call() {
        let ex = Executor::serial();
        let ((), t) = ex.kernel_timer("noop", || ());
        assert!((0.0..10.0).contains(&t));
        ex.kernel_timer("noop", || ());
        assert_eq!(ex.timings().len(), 2);
        assert_eq!(ex.take_timings().len(), 2);
        assert!(ex.timings().is_empty());
    }

    #[test]
    fn timer_measures_sleep() {
        let ex = Executor::serial();
        let ((), t) = ex.kernel_timer("sleep", || std::thread::sleep(std::time::Duration::from_millis(50)));
        assert!((30.0..=70.0).contains(&t), "{t} ms");
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(Executor::workers(0).is_err());
    }
}
