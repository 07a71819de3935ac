use alloc::vec::Vec;

use crate::tensor::{Shape, Tensor};
use crate::{Error, Result};

/// Winning `(row, col)` offset inside each pooling window, one entry per output element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgmaxMap {
    window: usize,
    stride: usize,
    input_shape: Shape,
    output_shape: Shape,
    offsets: Vec<(u16, u16)>,
}

impl ArgmaxMap {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn output_shape(&self) -> Shape {
        self.output_shape
    }

    pub fn offsets(&self) -> &[(u16, u16)] {
        &self.offsets
    }
}

pub fn pooled_shape(input: Shape, window: usize, stride: usize) -> Result<Shape> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidArgument(
            "pool window and stride must be at least 1".into(),
        ));
    }
    if window > input.height || window > input.width {
        return Err(Error::WindowTooLarge {
            op: "maxpool2d",
            window,
            height: input.height,
            width: input.width,
        });
    }
    Ok(Shape::new(
        input.channels,
        (input.height - window) / stride + 1,
        (input.width - window) / stride + 1,
    ))
}

/// Max over each `window x window` patch. Ties keep the first maximum in row-major order.
pub fn maxpool2d<T: Copy + PartialOrd>(
    input: &Tensor<T>,
    window: usize,
    stride: usize,
) -> Result<(Tensor<T>, ArgmaxMap)> {
    let in_shape = input.shape();
    let out_shape = pooled_shape(in_shape, window, stride)?;
    let mut values = Vec::with_capacity(out_shape.len());
    let mut offsets = Vec::with_capacity(out_shape.len());
    for c in 0..out_shape.channels {
        let plane = input.channel(c);
        for y in 0..out_shape.height {
            for x in 0..out_shape.width {
                let (y0, x0) = (y * stride, x * stride);
                let mut best = plane[y0 * in_shape.width + x0];
                let mut at = (0u16, 0u16);
                for a in 0..window {
                    let row = &plane[(y0 + a) * in_shape.width + x0..][..window];
                    for (b, &v) in row.iter().enumerate() {
                        if v > best {
                            best = v;
                            at = (a as u16, b as u16);
                        }
                    }
                }
                values.push(best);
                offsets.push(at);
            }
        }
    }
    let map = ArgmaxMap {
        window,
        stride,
        input_shape: in_shape,
        output_shape: out_shape,
        offsets,
    };
    Ok((Tensor::from_vec(out_shape, values)?, map))
}

/// Routes each output gradient to the input position that won its window.
pub fn maxpool2d_backward(argmax: &ArgmaxMap, grad_output: &Tensor<f64>, input_shape: Shape) -> Result<Tensor<f64>> {
    grad_output.expect_shape("maxpool2d_backward", argmax.output_shape)?;
    if input_shape != argmax.input_shape {
        return Err(Error::ShapeMismatch {
            op: "maxpool2d_backward",
            expected: argmax.input_shape,
            actual: input_shape,
        });
    }
    let out = argmax.output_shape;
    let mut grad = Tensor::zeros(input_shape)?;
    let g = grad_output.as_slice();
    let mut k = 0;
    for c in 0..out.channels {
        for y in 0..out.height {
            for x in 0..out.width {
                let (a, b) = argmax.offsets[k];
                grad[(c, y * argmax.stride + a as usize, x * argmax.stride + b as usize)] += g[k];
                k += 1;
            }
        }
    }
    Ok(grad)
}
