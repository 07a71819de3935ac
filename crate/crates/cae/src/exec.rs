use std::time::Instant;

use cae_core::model::{BatchExecutor, EpochStats, TrainHooks};
use rayon::prelude::*;

/// Runs per-item work on the rayon pool. `collect` keeps index order, so reductions done
/// by the trainer are identical to a sequential run.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl BatchExecutor for Parallel {
    fn map<R: Send>(&self, n: usize, f: &(dyn Fn(usize) -> R + Sync)) -> Vec<R> {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Wall-clock timing plus an optional per-epoch callback.
pub struct WallClock<F> {
    origin: Instant,
    on_epoch: F,
}

impl<F: FnMut(&EpochStats)> WallClock<F> {
    pub fn new(on_epoch: F) -> Self {
        WallClock {
            origin: Instant::now(),
            on_epoch,
        }
    }
}

impl<F> std::fmt::Debug for WallClock<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WallClock").field("origin", &self.origin).finish()
    }
}

impl<F: FnMut(&EpochStats)> TrainHooks for WallClock<F> {
    fn now(&mut self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn on_epoch(&mut self, stats: &EpochStats) {
        (self.on_epoch)(stats)
    }
}
