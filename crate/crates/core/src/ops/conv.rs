//! 2-D convolution over channel-major tensors.
//!
//! The sliding window is applied without flipping the kernel (cross-correlation):
//!
//! ```text
//! out[o][y][x] = bias[o] + sum_{i,a,b} in[i][y*s + a - pad_top][x*s + b - pad_left] * k[o][i][a][b]
//! ```
//!
//! Out-of-range input positions read as zero. For `Same` padding the total padding along an
//! axis is `max((out - 1) * s + k - n, 0)`, split with the smaller half on the top/left. An even
//! kernel therefore reaches one row further down/right than up/left.

use alloc::vec;
use alloc::vec::Vec;

use crate::fixed::{Accumulator, FixedPointFormat};
use crate::tensor::{Shape, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Padding {
    #[default]
    Same,
    Valid,
}

/// Filter weights `[out][in][k_h][k_w]` plus one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank<T = f64> {
    out_channels: usize,
    in_channels: usize,
    k_h: usize,
    k_w: usize,
    weights: Vec<T>,
    bias: Vec<T>,
}

impl<T> KernelBank<T> {
    pub fn new(dims: [usize; 4], weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        let [out_channels, in_channels, k_h, k_w] = dims;
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "kernel bank dims must be positive, got {dims:?}"
            )));
        }
        if weights.len() != out_channels * in_channels * k_h * k_w {
            return Err(Error::InvalidArgument(alloc::format!(
                "kernel bank {dims:?} needs {} weights, got {}",
                out_channels * in_channels * k_h * k_w,
                weights.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::InvalidArgument(alloc::format!(
                "bias length {} != out_channels {out_channels}",
                bias.len()
            )));
        }
        Ok(KernelBank {
            out_channels,
            in_channels,
            k_h,
            k_w,
            weights,
            bias,
        })
    }

    /// `[out_channels, in_channels, k_h, k_w]`
    pub fn dims(&self) -> [usize; 4] {
        [self.out_channels, self.in_channels, self.k_h, self.k_w]
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.k_h, self.k_w)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.bias
    }

    #[inline]
    pub fn weight_index(&self, o: usize, i: usize, a: usize, b: usize) -> usize {
        ((o * self.in_channels + i) * self.k_h + a) * self.k_w + b
    }

    pub fn weight(&self, o: usize, i: usize, a: usize, b: usize) -> &T {
        &self.weights[self.weight_index(o, i, a, b)]
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> KernelBank<U> {
        KernelBank {
            out_channels: self.out_channels,
            in_channels: self.in_channels,
            k_h: self.k_h,
            k_w: self.k_w,
            weights: self.weights.iter().map(&mut f).collect(),
            bias: self.bias.iter().map(f).collect(),
        }
    }
}

impl<T: Clone + Default> KernelBank<T> {
    pub fn zeros(dims: [usize; 4]) -> Result<Self> {
        let n = dims.iter().product();
        Self::new(dims, vec![T::default(); n], vec![T::default(); dims[0]])
    }
}

/// Output size and leading padding of one convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub out_h: usize,
    pub out_w: usize,
    pub pad_top: usize,
    pub pad_left: usize,
    pub stride: usize,
}

fn axis(n: usize, k: usize, stride: usize, padding: Padding, op: &'static str) -> Result<(usize, usize)> {
    match padding {
        Padding::Same => {
            let out = n.div_ceil(stride);
            let total = ((out - 1) * stride + k).saturating_sub(n);
            Ok((out, total / 2))
        }
        Padding::Valid => {
            if k > n {
                return Err(Error::WindowTooLarge {
                    op,
                    window: k,
                    height: n,
                    width: n,
                });
            }
            Ok(((n - k) / stride + 1, 0))
        }
    }
}

impl ConvGeometry {
    pub fn new(input: Shape, kernel: (usize, usize), stride: usize, padding: Padding) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        let (k_h, k_w) = kernel;
        let (out_h, pad_top) =
            axis(input.height, k_h, stride, padding, "conv2d").map_err(|_| window_err(input, k_h, k_w))?;
        let (out_w, pad_left) =
            axis(input.width, k_w, stride, padding, "conv2d").map_err(|_| window_err(input, k_h, k_w))?;
        Ok(ConvGeometry {
            out_h,
            out_w,
            pad_top,
            pad_left,
            stride,
        })
    }

    /// Output positions `o` in `[lo, hi)` whose input index `o * stride + tap - pad` is in range.
    #[inline]
    fn span(out_len: usize, in_len: usize, stride: usize, tap: usize, pad: usize) -> (usize, usize) {
        let lo = if pad > tap { (pad - tap).div_ceil(stride) } else { 0 };
        // o * stride + tap - pad <= in_len - 1
        let limit = in_len + pad;
        let hi = if limit > tap {
            ((limit - tap - 1) / stride + 1).min(out_len)
        } else {
            0
        };
        (lo, hi.max(lo))
    }
}

fn window_err(input: Shape, k_h: usize, k_w: usize) -> Error {
    Error::WindowTooLarge {
        op: "conv2d",
        window: k_h.max(k_w),
        height: input.height,
        width: input.width,
    }
}

fn check_channels(input: Shape, in_channels: usize) -> Result<()> {
    if input.channels != in_channels {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            expected: Shape::new(in_channels, input.height, input.width),
            actual: input,
        });
    }
    Ok(())
}

pub fn conv2d(input: &Tensor<f64>, kernels: &KernelBank<f64>, stride: usize, padding: Padding) -> Result<Tensor<f64>> {
    let shape = input.shape();
    check_channels(shape, kernels.in_channels)?;
    let g = ConvGeometry::new(shape, kernels.kernel_size(), stride, padding)?;
    let out_shape = Shape::new(kernels.out_channels, g.out_h, g.out_w);
    let mut out = Tensor::zeros(out_shape)?;
    let (k_h, k_w) = kernels.kernel_size();
    let s = g.stride;
    for o in 0..kernels.out_channels {
        let plane = out.channel_mut(o);
        plane.fill(kernels.bias[o]);
        for i in 0..kernels.in_channels {
            let src = input.channel(i);
            for a in 0..k_h {
                let (y0, y1) = ConvGeometry::span(g.out_h, shape.height, s, a, g.pad_top);
                for b in 0..k_w {
                    let w = kernels.weights[kernels.weight_index(o, i, a, b)];
                    let (x0, x1) = ConvGeometry::span(g.out_w, shape.width, s, b, g.pad_left);
                    if x0 == x1 {
                        continue;
                    }
                    for y in y0..y1 {
                        let iy = y * s + a - g.pad_top;
                        let row = &src[iy * shape.width..(iy + 1) * shape.width];
                        let dst = &mut plane[y * g.out_w..(y + 1) * g.out_w];
                        if s == 1 {
                            let ix0 = x0 + b - g.pad_left;
                            for (d, &v) in dst[x0..x1].iter_mut().zip(&row[ix0..ix0 + (x1 - x0)]) {
                                *d += w * v;
                            }
                        } else {
                            for x in x0..x1 {
                                dst[x] += w * row[x * s + b - g.pad_left];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of a convolution with respect to its input, weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGradients {
    pub input: Tensor<f64>,
    /// Weight gradients; the bank's bias holds the bias gradients.
    pub kernels: KernelBank<f64>,
}

pub fn conv2d_backward(
    input: &Tensor<f64>,
    kernels: &KernelBank<f64>,
    stride: usize,
    padding: Padding,
    grad_output: &Tensor<f64>,
) -> Result<ConvGradients> {
    let shape = input.shape();
    check_channels(shape, kernels.in_channels)?;
    let g = ConvGeometry::new(shape, kernels.kernel_size(), stride, padding)?;
    grad_output.expect_shape("conv2d_backward", Shape::new(kernels.out_channels, g.out_h, g.out_w))?;

    let mut grad_input = Tensor::zeros(shape)?;
    let mut grad_k = KernelBank::<f64>::zeros(kernels.dims())?;
    let (k_h, k_w) = kernels.kernel_size();
    let s = g.stride;
    for o in 0..kernels.out_channels {
        let go = grad_output.channel(o);
        grad_k.bias[o] = go.iter().sum();
        for i in 0..kernels.in_channels {
            let src = input.channel(i);
            let gi = grad_input.channel_mut(i);
            for a in 0..k_h {
                let (y0, y1) = ConvGeometry::span(g.out_h, shape.height, s, a, g.pad_top);
                for b in 0..k_w {
                    let wi = kernels.weight_index(o, i, a, b);
                    let w = kernels.weights[wi];
                    let (x0, x1) = ConvGeometry::span(g.out_w, shape.width, s, b, g.pad_left);
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let iy = y * s + a - g.pad_top;
                        let go_row = &go[y * g.out_w..(y + 1) * g.out_w];
                        let base = iy * shape.width;
                        for (x, &gv) in go_row.iter().enumerate().take(x1).skip(x0) {
                            let ix = base + x * s + b - g.pad_left;
                            acc += gv * src[ix];
                            gi[ix] += gv * w;
                        }
                    }
                    grad_k.weights[wi] += acc;
                }
            }
        }
    }
    Ok(ConvGradients {
        input: grad_input,
        kernels: grad_k,
    })
}

/// One output word of a fixed-point convolution.
///
/// Accumulates `bias` then products in (input channel, kernel row, kernel column) order and
/// narrows once.
pub fn conv2d_fixed_element(
    input: &Tensor<i32>,
    kernels: &KernelBank<i32>,
    geometry: &ConvGeometry,
    fmt: FixedPointFormat,
    (o, y, x): (usize, usize, usize),
) -> i32 {
    let shape = input.shape();
    let (k_h, k_w) = kernels.kernel_size();
    let mut acc = Accumulator::with_bias(fmt, kernels.bias[o]);
    for i in 0..kernels.in_channels {
        for a in 0..k_h {
            let iy = (y * geometry.stride + a) as isize - geometry.pad_top as isize;
            if iy < 0 || iy >= shape.height as isize {
                continue;
            }
            for b in 0..k_w {
                let ix = (x * geometry.stride + b) as isize - geometry.pad_left as isize;
                if ix < 0 || ix >= shape.width as isize {
                    continue;
                }
                acc.mac(
                    input[(i, iy as usize, ix as usize)],
                    kernels.weights[kernels.weight_index(o, i, a, b)],
                );
            }
        }
    }
    acc.finish(fmt)
}

/// Fixed-point convolution; every output word comes from [`conv2d_fixed_element`].
pub fn conv2d_fixed(
    input: &Tensor<i32>,
    kernels: &KernelBank<i32>,
    stride: usize,
    padding: Padding,
    fmt: FixedPointFormat,
) -> Result<Tensor<i32>> {
    check_channels(input.shape(), kernels.in_channels)?;
    let g = ConvGeometry::new(input.shape(), kernels.kernel_size(), stride, padding)?;
    Tensor::from_fn(Shape::new(kernels.out_channels, g.out_h, g.out_w), |o, y, x| {
        conv2d_fixed_element(input, kernels, &g, fmt, (o, y, x))
    })
}
