use alloc::string::String;

use crate::tensor::Shape;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {actual}")]
    ShapeMismatch {
        op: &'static str,
        expected: Shape,
        actual: Shape,
    },

    #[error("invalid shape {0}: every dimension must be at least 1")]
    EmptyShape(Shape),

    #[error("{op}: window {window}x{window} does not fit in {height}x{width} input")]
    WindowTooLarge {
        op: &'static str,
        window: usize,
        height: usize,
        width: usize,
    },

    #[error("crop of {amount} exceeds dimension {dim}")]
    OverCrop { amount: usize, dim: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cache does not belong to this network/parameters: {0}")]
    StaleCache(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("fifo overflow in {unit} at cycle {cycle}")]
    FifoOverflow { unit: String, cycle: u64 },

    #[error("performance report needs a nonzero cycle count")]
    ZeroCycles,
}
