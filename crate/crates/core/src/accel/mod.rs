//! Cycle-approximate model of the streaming accelerator.
//!
//! The input image is interleaved over `num_channels` lanes by the [distributor], buffered in
//! per-lane [`FifoModel`]s, drained by a round-robin [arbiter] and processed layer by layer.
//! Every lane computes whole output words, so results match
//! [`forward_fixed`](crate::model::forward_fixed) bit for bit while the counters estimate cycle
//! cost.

mod arbiter;
mod config;
mod distributor;
mod fifo;
mod perf;
mod pipeline;
mod trace;

pub use arbiter::{arbiter_grant, ArbiterState};
pub use config::AccelConfig;
pub use distributor::{distribute, interleave};
pub use fifo::FifoModel;
pub use perf::{compare_table2, count_ops, perf_report, PerfReport, PublishedRow, Table2, TABLE2_ROWS};
pub use pipeline::{output_done, run_pipeline, PerfCounters, PipelineRun};
pub use trace::{PipelineTrace, TraceEvent, TraceKind, Unit};
