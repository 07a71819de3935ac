//! The encoder/decoder network: layer table, parameters, forward and backward passes,
//! training and the fixed-point reference forward pass.

mod forward;
mod params;
mod spec;
mod train;

pub(crate) use forward::canvas_border;
pub use forward::{
    backward, denoise, forward, forward_fixed, forward_layers, forward_quantized, infer, loss_and_gradients, loss_mse,
    ForwardCache,
};
pub use params::{glorot_limit, init_parameters, Gradients, Parameters};
pub use spec::{
    build_network, build_strict_table1_network, build_table1_network, Activation, LayerKind, LayerSpec, NetworkSpec,
    CALIBRATION_PROFILE, CANVAS_SHAPE, CONV_WINDOW, DEFAULT_PROFILE, MNIST_SHAPE, TABLE1_KINDS,
};
pub use train::{
    evaluate, make_pairs, train, train_from, validation_loss, BatchExecutor, EpochStats, NoHooks, Optimizer,
    Sequential, TrainConfig, TrainHooks, TrainReport, TrainingPair,
};
