use alloc::vec::Vec;

use crate::tensor::{Shape, Tensor};
use crate::{Error, Result};

/// Amounts added to (pad) or removed from (crop) each border.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Border {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl Border {
    pub const fn uniform(n: usize) -> Self {
        Border {
            top: n,
            bottom: n,
            left: n,
            right: n,
        }
    }

    pub const fn new(top: usize, bottom: usize, left: usize, right: usize) -> Self {
        Border {
            top,
            bottom,
            left,
            right,
        }
    }

    /// Centers `inner` inside `outer`, with any odd remainder on the bottom/right.
    pub fn centering(inner: Shape, outer: Shape) -> Result<Self> {
        if inner.height > outer.height || inner.width > outer.width {
            return Err(Error::InvalidArgument(alloc::format!(
                "{inner} does not fit inside {outer}"
            )));
        }
        let dh = outer.height - inner.height;
        let dw = outer.width - inner.width;
        Ok(Border::new(dh / 2, dh - dh / 2, dw / 2, dw - dw / 2))
    }
}

pub fn pad<T: Copy>(input: &Tensor<T>, border: Border, value: T) -> Result<Tensor<T>> {
    let s = input.shape();
    let out = Shape::new(
        s.channels,
        s.height + border.top + border.bottom,
        s.width + border.left + border.right,
    );
    let mut data = Vec::with_capacity(out.len());
    for c in 0..s.channels {
        let plane = input.channel(c);
        data.extend(core::iter::repeat_n(value, border.top * out.width));
        for row in plane.chunks_exact(s.width) {
            data.extend(core::iter::repeat_n(value, border.left));
            data.extend_from_slice(row);
            data.extend(core::iter::repeat_n(value, border.right));
        }
        data.extend(core::iter::repeat_n(value, border.bottom * out.width));
    }
    Tensor::from_vec(out, data)
}

/// Interior window left after removing `border`; each axis must keep at least one pixel.
pub fn crop<T: Copy>(input: &Tensor<T>, border: Border) -> Result<Tensor<T>> {
    let s = input.shape();
    if border.top + border.bottom >= s.height {
        return Err(Error::OverCrop {
            amount: border.top + border.bottom,
            dim: s.height,
        });
    }
    if border.left + border.right >= s.width {
        return Err(Error::OverCrop {
            amount: border.left + border.right,
            dim: s.width,
        });
    }
    let out = Shape::new(
        s.channels,
        s.height - border.top - border.bottom,
        s.width - border.left - border.right,
    );
    let mut data = Vec::with_capacity(out.len());
    for c in 0..s.channels {
        let plane = input.channel(c);
        for y in border.top..border.top + out.height {
            data.extend_from_slice(&plane[y * s.width + border.left..][..out.width]);
        }
    }
    Tensor::from_vec(out, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn pad_single_pixel() {
        let t = Tensor::from_vec(Shape::new(1, 1, 1), vec![5.0]).unwrap();
        let p = pad(&t, Border::uniform(1), 0.0).unwrap();
        assert_eq!(p.as_slice(), &[0., 0., 0., 0., 5., 0., 0., 0., 0.]);
        assert_eq!(pad(&t, Border::default(), 0.0).unwrap(), t);
    }

    #[test]
    fn crop_inverts_pad() {
        let t = Tensor::from_fn(Shape::new(2, 3, 4), |c, y, x| (c * 12 + y * 4 + x) as f64).unwrap();
        let b = Border::new(1, 2, 0, 3);
        assert_eq!(crop(&pad(&t, b, -1.0).unwrap(), b).unwrap(), t);
        assert_eq!(crop(&t, Border::default()).unwrap(), t);
        let c = Tensor::filled(Shape::new(1, 2, 2), 9).unwrap();
        let cropped = crop(&pad(&c, Border::uniform(2), 9).unwrap(), Border::new(1, 1, 2, 0)).unwrap();
        assert!(cropped.as_slice().iter().all(|&v| v == 9));
    }

    #[test]
    fn over_crop_rejected() {
        let t = Tensor::<f64>::zeros(Shape::new(1, 3, 3)).unwrap();
        assert!(matches!(crop(&t, Border::new(2, 1, 0, 0)), Err(Error::OverCrop { .. })));
        assert!(crop(&t, Border::new(1, 1, 1, 1)).is_ok());
    }

    #[test]
    fn centering_mnist_canvas() {
        let b = Border::centering(Shape::new(1, 28, 28), Shape::new(1, 32, 32)).unwrap();
        assert_eq!(b, Border::uniform(2));
    }
}
