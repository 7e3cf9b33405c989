//! Deterministic parallel execution: the run is partitioned into fixed-size
//! batches with independently derived rng streams; per-batch scorers merge
//! in batch-index order, so results are identical for any worker count.

use crate::rng::{batch_count, batch_range, batch_rng};
use crate::transport::{Path, Scorer, Transport};
use rayon::prelude::*;

/// Associative, order-fixed combination of per-batch results.
pub trait Merge {
    fn merge(&mut self, other: Self);
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub n_paths: u64,
    pub escaped: u64,
    pub truncated: u64,
    pub collisions: u64,
}

impl Merge for RunStats {
    fn merge(&mut self, other: Self) {
        self.n_paths += other.n_paths;
        self.escaped += other.escaped;
        self.truncated += other.truncated;
        self.collisions += other.collisions;
    }
}

/// Simulate `n_paths` paths, scoring each with a fresh per-batch scorer.
/// The merge order is the batch index, never the completion order.
pub fn run_scored<S>(
    transport: &Transport,
    n_paths: u64,
    seed: u64,
    make_scorer: impl Fn() -> S + Sync,
) -> (S, RunStats)
where
    S: Scorer + Merge + Send,
{
    assert!(n_paths >= 1, "a run needs at least one path");
    let n_batches = batch_count(n_paths);
    let results: Vec<(S, RunStats)> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut scorer = make_scorer();
            let mut rng = batch_rng(seed, b);
            let mut path = Path::default();
            let mut stats = RunStats::default();
            let (start, end) = batch_range(n_paths, b);
            for _ in start..end {
                transport.simulate_path(&mut rng, &mut path, &mut [&mut scorer]);
                stats.n_paths += 1;
                stats.collisions += path.events.len() as u64;
                if path.escaped {
                    stats.escaped += 1;
                } else {
                    stats.truncated += 1;
                }
            }
            (scorer, stats)
        })
        .collect();

    let mut iter = results.into_iter();
    let (mut scorer, mut stats) = iter.next().expect("at least one batch");
    for (s, st) in iter {
        scorer.merge(s);
        stats.merge(st);
    }
    (scorer, stats)
}
