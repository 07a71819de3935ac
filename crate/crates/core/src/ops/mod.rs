//! Layer primitives and their adjoints.
//!
//! All functions are pure: inputs are borrowed and never modified.

mod activation;
mod border;
mod conv;
mod pool;
mod upsample;

pub use activation::{relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar};
pub use border::{crop, pad, Border};
pub use conv::{
    conv2d, conv2d_backward, conv2d_fixed, conv2d_fixed_element, ConvGeometry, ConvGradients, KernelBank, Padding,
};
pub use pool::{maxpool2d, maxpool2d_backward, pooled_shape, ArgmaxMap};
pub use upsample::{upsample_backward, upsample_nearest};
