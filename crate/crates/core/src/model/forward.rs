use alloc::format;
use alloc::vec::Vec;

use super::params::{Gradients, Parameters};
use super::spec::{Activation, LayerKind, LayerSpec, NetworkSpec};
use crate::fixed::FixedPointFormat;
use crate::ops::{self, ArgmaxMap, Border, KernelBank};
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Per-layer state kept by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Canvas input followed by the output of every layer.
    activations: Vec<Tensor<f64>>,
    argmax: Vec<Option<ArgmaxMap>>,
    output: Tensor<f64>,
    border: Border,
    fingerprint: u64,
    layer_count: usize,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor<f64> {
        &self.output
    }

    /// Tensor at layer boundary `i` (0 is the padded canvas input).
    pub fn boundary(&self, i: usize) -> &Tensor<f64> {
        &self.activations[i]
    }
}

fn activate(act: Activation, t: Tensor<f64>) -> Tensor<f64> {
    match act {
        Activation::Relu => ops::relu(&t),
        Activation::Sigmoid => ops::sigmoid(&t),
        Activation::None => t,
    }
}

fn apply_layer(
    layer: &LayerSpec,
    bank: Option<&KernelBank<f64>>,
    x: &Tensor<f64>,
) -> Result<(Tensor<f64>, Option<ArgmaxMap>)> {
    match layer.kind {
        LayerKind::Convolution => {
            let bank = bank.expect("one bank per convolution");
            let y = ops::conv2d(x, bank, layer.stride, layer.padding)?;
            Ok((activate(layer.activation, y), None))
        }
        LayerKind::MaxPool => {
            let (y, map) = ops::maxpool2d(x, layer.window, layer.stride)?;
            Ok((y, Some(map)))
        }
        LayerKind::UpSample => Ok((ops::upsample_nearest(x, layer.upsample_factor())?, None)),
    }
}

pub(crate) fn canvas_border(spec: &NetworkSpec) -> Result<Border> {
    if !spec.is_shape_preserving() {
        return Err(Error::InvalidArgument(format!(
            "network maps canvas {} to {}; only shape-preserving networks reconstruct images",
            spec.internal_shape(),
            spec.output_canvas_shape()
        )));
    }
    Border::centering(spec.input_shape(), spec.internal_shape())
}

/// Outputs at every layer boundary for a canvas-sized input. Works for any network,
/// including ones that do not restore the canvas.
pub fn forward_layers(spec: &NetworkSpec, params: &Parameters<f64>, canvas: &Tensor<f64>) -> Result<Vec<Tensor<f64>>> {
    params.check_against(spec)?;
    canvas.expect_shape("forward_layers", spec.internal_shape())?;
    let mut banks = params.banks().iter();
    let mut out = Vec::with_capacity(spec.layers().len() + 1);
    out.push(canvas.clone());
    for layer in spec.layers() {
        let bank = (layer.kind == LayerKind::Convolution).then(|| banks.next()).flatten();
        let (y, _) = apply_layer(layer, bank, out.last().unwrap())?;
        out.push(y);
    }
    Ok(out)
}

/// Pads the input onto the canvas, runs every layer and crops back to the input shape.
pub fn forward(
    spec: &NetworkSpec,
    params: &Parameters<f64>,
    input: &Tensor<f64>,
) -> Result<(Tensor<f64>, ForwardCache)> {
    params.check_against(spec)?;
    input.expect_shape("forward", spec.input_shape())?;
    let border = canvas_border(spec)?;
    let mut activations = Vec::with_capacity(spec.layers().len() + 1);
    let mut argmax = Vec::with_capacity(spec.layers().len());
    activations.push(ops::pad(input, border, 0.0)?);
    let mut banks = params.banks().iter();
    for layer in spec.layers() {
        let bank = (layer.kind == LayerKind::Convolution).then(|| banks.next()).flatten();
        let (y, map) = apply_layer(layer, bank, activations.last().unwrap())?;
        activations.push(y);
        argmax.push(map);
    }
    let output = ops::crop(activations.last().unwrap(), border)?;
    let cache = ForwardCache {
        activations,
        argmax,
        output: output.clone(),
        border,
        fingerprint: params.fingerprint(),
        layer_count: spec.layers().len(),
    };
    Ok((output, cache))
}

/// Forward pass without retaining intermediate state.
pub fn infer(spec: &NetworkSpec, params: &Parameters<f64>, input: &Tensor<f64>) -> Result<Tensor<f64>> {
    params.check_against(spec)?;
    input.expect_shape("infer", spec.input_shape())?;
    let border = canvas_border(spec)?;
    let mut x = ops::pad(input, border, 0.0)?;
    let mut banks = params.banks().iter();
    for layer in spec.layers() {
        let bank = (layer.kind == LayerKind::Convolution).then(|| banks.next()).flatten();
        x = apply_layer(layer, bank, &x)?.0;
    }
    ops::crop(&x, border)
}

pub fn denoise(spec: &NetworkSpec, params: &Parameters<f64>, noisy: &[Tensor<f64>]) -> Result<Vec<Tensor<f64>>> {
    noisy.iter().map(|x| infer(spec, params, x)).collect()
}

/// Mean squared error between a reconstruction and its clean target.
pub fn loss_mse(output: &Tensor<f64>, target: &Tensor<f64>) -> Result<f64> {
    crate::metrics::mse(output, target)
}

/// Gradients of `loss_mse(output, clean_target)` with respect to every kernel bank.
pub fn backward(
    spec: &NetworkSpec,
    params: &Parameters<f64>,
    cache: &ForwardCache,
    clean_target: &Tensor<f64>,
) -> Result<Gradients> {
    params.check_against(spec)?;
    if cache.layer_count != spec.layers().len() || cache.fingerprint != params.fingerprint() {
        return Err(Error::StaleCache(format!(
            "cache was recorded for {} layers with parameter digest {:#x}",
            cache.layer_count, cache.fingerprint
        )));
    }
    clean_target.expect_shape("backward", cache.output.shape())?;

    let n = cache.output.len() as f64;
    let diff = Tensor::from_vec(
        cache.output.shape(),
        cache
            .output
            .as_slice()
            .iter()
            .zip(clean_target.as_slice())
            .map(|(o, t)| 2.0 * (o - t) / n)
            .collect(),
    )?;
    let mut grad = ops::pad(&diff, cache.border, 0.0)?;

    let mut grads = Parameters::zeros(spec);
    let mut bank_idx = params.banks().len();
    for (i, layer) in spec.layers().iter().enumerate().rev() {
        let input = &cache.activations[i];
        let output = &cache.activations[i + 1];
        grad = match layer.kind {
            LayerKind::Convolution => {
                bank_idx -= 1;
                let g = match layer.activation {
                    // ReLU output is positive exactly where its input was
                    Activation::Relu => ops::relu_backward(output, &grad)?,
                    Activation::Sigmoid => ops::sigmoid_backward(output, &grad)?,
                    Activation::None => grad,
                };
                let cg = ops::conv2d_backward(input, &params.banks()[bank_idx], layer.stride, layer.padding, &g)?;
                grads.banks_mut()[bank_idx] = cg.kernels;
                cg.input
            }
            LayerKind::MaxPool => {
                let map = cache.argmax[i].as_ref().expect("pool layers record argmax");
                ops::maxpool2d_backward(map, &grad, input.shape())?
            }
            LayerKind::UpSample => ops::upsample_backward(layer.upsample_factor(), &grad)?,
        };
    }
    Ok(grads)
}

/// Loss and gradients for one (input, target) pair.
pub fn loss_and_gradients(
    spec: &NetworkSpec,
    params: &Parameters<f64>,
    input: &Tensor<f64>,
    target: &Tensor<f64>,
) -> Result<(f64, Gradients)> {
    let (out, cache) = forward(spec, params, input)?;
    let loss = loss_mse(&out, target)?;
    let grads = backward(spec, params, &cache, target)?;
    Ok((loss, grads))
}

fn apply_layer_fixed(
    layer: &LayerSpec,
    bank: Option<&KernelBank<i32>>,
    x: &Tensor<i32>,
    fmt: FixedPointFormat,
) -> Result<Tensor<i32>> {
    match layer.kind {
        LayerKind::Convolution => {
            let bank = bank.expect("one bank per convolution");
            let y = ops::conv2d_fixed(x, bank, layer.stride, layer.padding, fmt)?;
            Ok(match layer.activation {
                Activation::Relu => y.map(|&r| fmt.relu(r)),
                Activation::Sigmoid => y.map(|&r| fmt.sigmoid(r)),
                Activation::None => y,
            })
        }
        LayerKind::MaxPool => Ok(ops::maxpool2d(x, layer.window, layer.stride)?.0),
        LayerKind::UpSample => ops::upsample_nearest(x, layer.upsample_factor()),
    }
}

/// Reference forward pass entirely in fixed point: words in, words out.
///
/// Each convolution output is accumulated in a widened register and narrowed once, ReLU and
/// pooling act on words directly, and the final sigmoid is re-quantized.
pub fn forward_fixed(
    spec: &NetworkSpec,
    qparams: &Parameters<i32>,
    input: &Tensor<i32>,
    fmt: FixedPointFormat,
) -> Result<Tensor<i32>> {
    qparams.check_against(spec)?;
    input.expect_shape("forward_fixed", spec.input_shape())?;
    let border = canvas_border(spec)?;
    let mut x = ops::pad(input, border, 0)?;
    let mut banks = qparams.banks().iter();
    for layer in spec.layers() {
        let bank = (layer.kind == LayerKind::Convolution).then(|| banks.next()).flatten();
        x = apply_layer_fixed(layer, bank, &x, fmt)?;
    }
    ops::crop(&x, border)
}

/// Convenience: quantize a real image and run [`forward_fixed`].
pub fn forward_quantized(
    spec: &NetworkSpec,
    qparams: &Parameters<i32>,
    input: &Tensor<f64>,
    fmt: FixedPointFormat,
) -> Result<Tensor<i32>> {
    forward_fixed(spec, qparams, &crate::fixed::quantize(input, fmt), fmt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_network, build_table1_network, init_parameters, DEFAULT_PROFILE};
    use crate::tensor::Shape;
    use alloc::vec;

    fn digit_like() -> Tensor<f64> {
        Tensor::from_fn(Shape::new(1, 28, 28), |_, y, x| {
            if (8..20).contains(&y) && (12..16).contains(&x) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn reconstruction_keeps_shape_and_range() {
        let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
        let params = init_parameters(&spec, 7);
        let (out, cache) = forward(&spec, &params, &digit_like()).unwrap();
        assert_eq!(out.shape(), spec.input_shape());
        assert!(out.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
        assert_eq!(cache.boundary(6).shape(), Shape::new(8, 4, 4));
        assert_eq!(infer(&spec, &params, &digit_like()).unwrap(), out);
    }

    #[test]
    fn wrong_input_shape() {
        let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
        let params = init_parameters(&spec, 7);
        let x = Tensor::zeros(Shape::new(1, 32, 32)).unwrap();
        assert!(matches!(forward(&spec, &params, &x), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn perfect_output_has_zero_gradient() {
        let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
        let params = init_parameters(&spec, 3);
        let (out, cache) = forward(&spec, &params, &digit_like()).unwrap();
        let grads = backward(&spec, &params, &cache, &out).unwrap();
        assert!(grads.values().all(|g| g == 0.0));
        for (g, p) in grads.banks().iter().zip(params.banks()) {
            assert_eq!(g.dims(), p.dims());
        }
    }

    #[test]
    fn stale_cache_rejected() {
        let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
        let params = init_parameters(&spec, 3);
        let (_, cache) = forward(&spec, &params, &digit_like()).unwrap();
        let other = init_parameters(&spec, 4);
        assert!(matches!(
            backward(&spec, &other, &cache, &digit_like()),
            Err(Error::StaleCache(_))
        ));
    }

    #[test]
    fn loss_examples() {
        let a = digit_like();
        assert_eq!(loss_mse(&a, &a).unwrap(), 0.0);
        let b = a.map(|v| v + 0.25);
        assert!((loss_mse(&a, &b).unwrap() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn fixed_reference_tracks_float() {
        let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
        let params = init_parameters(&spec, 5);
        let fmt = FixedPointFormat::Q16_8;
        let q = params.quantize(fmt);
        let out = forward_quantized(&spec, &q, &digit_like(), fmt).unwrap();
        let float = infer(&spec, &params, &digit_like()).unwrap();
        let worst = out
            .as_slice()
            .iter()
            .zip(float.as_slice())
            .map(|(&r, &f)| (fmt.dequantize(r) - f).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.05, "fixed-point drift {worst}");
    }

    #[test]
    fn forward_layers_on_reduced_canvas() {
        let s = Shape::new(1, 8, 8);
        let spec = build_network(&[2, 2, 2, 2, 2, 2, 1], s, s).unwrap();
        let params = init_parameters(&spec, 1);
        let canvas = Tensor::from_vec(s, vec![0.5; 64]).unwrap();
        let layers = forward_layers(&spec, &params, &canvas).unwrap();
        assert_eq!(layers.len(), 14);
        assert_eq!(layers[13].shape(), s);
    }
}
