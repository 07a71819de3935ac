use alloc::vec::Vec;

use crate::tensor::{Shape, Tensor};
use crate::{Error, Result};

/// Replicates every pixel into a `factor x factor` block.
pub fn upsample_nearest<T: Copy>(input: &Tensor<T>, factor: usize) -> Result<Tensor<T>> {
    if factor == 0 {
        return Err(Error::InvalidArgument("up-sample factor must be at least 1".into()));
    }
    let s = input.shape();
    let out = Shape::new(s.channels, s.height * factor, s.width * factor);
    let mut data = Vec::with_capacity(out.len());
    for c in 0..s.channels {
        let plane = input.channel(c);
        for y in 0..out.height {
            let row = &plane[(y / factor) * s.width..][..s.width];
            for x in 0..out.width {
                data.push(row[x / factor]);
            }
        }
    }
    Tensor::from_vec(out, data)
}

/// Adjoint of [`upsample_nearest`]: sums each `factor x factor` block.
pub fn upsample_backward(factor: usize, grad_output: &Tensor<f64>) -> Result<Tensor<f64>> {
    if factor == 0 {
        return Err(Error::InvalidArgument("up-sample factor must be at least 1".into()));
    }
    let s = grad_output.shape();
    if !s.height.is_multiple_of(factor) || !s.width.is_multiple_of(factor) {
        return Err(Error::ShapeMismatch {
            op: "upsample_backward",
            expected: Shape::new(s.channels, s.height / factor * factor, s.width / factor * factor),
            actual: s,
        });
    }
    let out = Shape::new(s.channels, s.height / factor, s.width / factor);
    let mut grad = Tensor::zeros(out)?;
    for c in 0..s.channels {
        let src = grad_output.channel(c);
        let dst = grad.channel_mut(c);
        for y in 0..s.height {
            for x in 0..s.width {
                dst[(y / factor) * out.width + x / factor] += src[y * s.width + x];
            }
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::maxpool2d;

    #[test]
    fn doubles_two_by_two() {
        let t = Tensor::from_vec(Shape::new(1, 2, 2), alloc::vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let up = upsample_nearest(&t, 2).unwrap();
        let expected = [
            1., 1., 2., 2., //
            1., 1., 2., 2., //
            3., 3., 4., 4., //
            3., 3., 4., 4.,
        ];
        assert_eq!(up.as_slice(), &expected);
        assert_eq!(upsample_nearest(&t, 1).unwrap(), t);
        assert_eq!(maxpool2d(&up, 2, 2).unwrap().0, t);
    }

    #[test]
    fn backward_sums_blocks() {
        let g = Tensor::filled(Shape::new(1, 4, 4), 1.0).unwrap();
        let back = upsample_backward(2, &g).unwrap();
        assert_eq!(back.as_slice(), &[4.0; 4]);
        let odd = Tensor::filled(Shape::new(1, 3, 4), 1.0).unwrap();
        assert!(upsample_backward(2, &odd).is_err());
    }
}
