use crate::tensor::Tensor;
use crate::Result;

/// `max(0, x)` elementwise.
pub fn relu(input: &Tensor<f64>) -> Tensor<f64> {
    input.map(|&x| if x > 0.0 { x } else { 0.0 })
}

/// Passes the gradient where the forward input was positive.
pub fn relu_backward(input: &Tensor<f64>, grad_output: &Tensor<f64>) -> Result<Tensor<f64>> {
    grad_output.expect_shape("relu_backward", input.shape())?;
    let data = input
        .as_slice()
        .iter()
        .zip(grad_output.as_slice())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(input.shape(), data)
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

pub fn sigmoid(input: &Tensor<f64>) -> Tensor<f64> {
    input.map(|&x| sigmoid_scalar(x))
}

/// Gradient through a sigmoid given its forward *output* `s`: `g * s * (1 - s)`.
pub fn sigmoid_backward(output: &Tensor<f64>, grad_output: &Tensor<f64>) -> Result<Tensor<f64>> {
    grad_output.expect_shape("sigmoid_backward", output.shape())?;
    let data = output
        .as_slice()
        .iter()
        .zip(grad_output.as_slice())
        .map(|(&s, &g)| g * s * (1.0 - s))
        .collect();
    Tensor::from_vec(output.shape(), data)
}
