//! Bounded worker pool over an ordered batch queue.
//!
//! Workers claim batch indices from a shared counter in increasing order and
//! results are written back by index, so the output order never depends on
//! scheduling.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::thread;

/// Observer hooks, used by tests to inspect scheduling.
pub trait ExecutionProbe: Sync {
    fn worker_started(&self, _worker: usize) {}
    fn batch_started(&self, _batch: usize) {}
    fn batch_finished(&self, _batch: usize) {}
}

/// Probe that observes nothing.
pub struct NoProbe;

impl ExecutionProbe for NoProbe {}

#[derive(Debug)]
pub struct BatchFailure<E> {
    pub batch: usize,
    pub error: E,
}

/// Splits `items` into consecutive batches of `batch_size`, runs `f` on each
/// with at most `workers` threads, and concatenates results in input order.
///
/// On failure, the error of the lowest failing batch index is returned. Batch
/// indices are claimed in order, so that index is the same one a sequential
/// run would stop at.
pub fn run_batches<T, R, E, F>(
    items: &[T],
    batch_size: usize,
    workers: usize,
    probe: &dyn ExecutionProbe,
    f: F,
) -> Result<Vec<R>, BatchFailure<E>>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &[T]) -> Result<Vec<R>, E> + Sync,
{
    assert!(batch_size >= 1 && workers >= 1);
    let batches: Vec<&[T]> = items.chunks(batch_size).collect();
    if batches.is_empty() {
        return Ok(Vec::new());
    }
    let n_workers = workers.min(batches.len());
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);

    let per_worker: Vec<Vec<(usize, Result<Vec<R>, E>)>> = thread::scope(|s| {
        let handles: Vec<_> = (0..n_workers)
            .map(|w| {
                let batches = &batches;
                let next = &next;
                let failed = &failed;
                let f = &f;
                s.spawn(move || {
                    probe.worker_started(w);
                    let mut done = Vec::new();
                    loop {
                        if failed.load(Ordering::Acquire) {
                            break;
                        }
                        let i = next.fetch_add(1, Ordering::AcqRel);
                        if i >= batches.len() {
                            break;
                        }
                        probe.batch_started(i);
                        let out = f(i, batches[i]);
                        probe.batch_finished(i);
                        if out.is_err() {
                            failed.store(true, Ordering::Release);
                        }
                        done.push((i, out));
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("batch worker panicked"))
            .collect()
    });

    let mut slots: Vec<Option<Vec<R>>> = (0..batches.len()).map(|_| None).collect();
    let mut first_err: Option<BatchFailure<E>> = None;
    for (i, out) in per_worker.into_iter().flatten() {
        match out {
            Ok(v) => slots[i] = Some(v),
            Err(error) => {
                if first_err.as_ref().is_none_or(|e| i < e.batch) {
                    first_err = Some(BatchFailure { batch: i, error });
                }
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(slots
        .into_iter()
        .flat_map(|s| s.expect("every batch ran"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    #[derive(Default)]
    struct Concurrency {
        active: AtomicUsize,
        peak: AtomicUsize,
        sizes: Mutex<Vec<usize>>,
    }

    impl ExecutionProbe for Concurrency {
        fn batch_started(&self, _: usize) {
            let now = self.active.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
        }
        fn batch_finished(&self, _: usize) {
            self.active.fetch_sub(1, Ordering::SeqCst);
        }
    }

    #[test]
    fn batches_of_20_20_5() {
        let items: Vec<usize> = (0..45).collect();
        let probe = Concurrency::default();
        let out = run_batches(&items, 20, 8, &probe, |_, b| {
            probe.sizes.lock().unwrap().push(b.len());
            Ok::<_, ()>(b.to_vec())
        })
        .unwrap();
        assert_eq!(out, items);
        let mut sizes = probe.sizes.into_inner().unwrap();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![5, 20, 20]);
    }

    #[test]
    fn empty_input() {
        let out = run_batches(&[] as &[u8], 20, 8, &NoProbe, |_, b| {
            Ok::<_, ()>(b.to_vec())
        })
        .unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn peak_concurrency_bounded_by_workers() {
        let items: Vec<u32> = (0..400).collect();
        let probe = Concurrency::default();
        run_batches(&items, 3, 4, &probe, |_, b| {
            std::thread::sleep(std::time::Duration::from_micros(200));
            Ok::<_, ()>(b.to_vec())
        })
        .unwrap();
        let peak = probe.peak.load(Ordering::SeqCst);
        assert!((1..=4).contains(&peak), "peak {peak}");
    }

    #[test]
    fn reports_lowest_failing_batch() {
        let items: Vec<u32> = (0..100).collect();
        let err = run_batches(&items, 10, 4, &NoProbe, |i, b| {
            if i >= 3 {
                Err(i)
            } else {
                Ok(b.to_vec())
            }
        })
        .unwrap_err();
        assert_eq!(err.batch, 3);
        assert_eq!(err.error, 3);
    }
}
