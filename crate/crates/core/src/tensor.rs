//! Channel-major rank-3 tensors.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Dimensions of a `channels x height x width` tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Shape {
            channels,
            height,
            width,
        }
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane(&self) -> usize {
        self.height * self.width
    }

    pub const fn is_valid(&self) -> bool {
        self.channels >= 1 && self.height >= 1 && self.width >= 1
    }

    #[inline]
    pub const fn offset(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

/// Rank-3 array, row-major within each channel, channels outermost.
///
/// The element type is `f64` for training, `f32` for light inference and `i32` for raw
/// fixed-point words (see [`crate::fixed`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f64> {
    shape: Shape,
    data: Vec<T>,
}

impl<T> Tensor<T> {
    pub fn from_vec(shape: Shape, data: Vec<T>) -> Result<Self> {
        if !shape.is_valid() {
            return Err(Error::EmptyShape(shape));
        }
        if data.len() != shape.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "tensor {} needs {} elements, got {}",
                shape,
                shape.len(),
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> T) -> Result<Self> {
        if !shape.is_valid() {
            return Err(Error::EmptyShape(shape));
        }
        let mut data = Vec::with_capacity(shape.len());
        for c in 0..shape.channels {
            for y in 0..shape.height {
                for x in 0..shape.width {
                    data.push(f(c, y, x));
                }
            }
        }
        Ok(Tensor { shape, data })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// One `height x width` plane.
    pub fn channel(&self, c: usize) -> &[T] {
        let plane = self.shape.plane();
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        let plane = self.shape.plane();
        &mut self.data[c * plane..(c + 1) * plane]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub(crate) fn expect_shape(&self, op: &'static str, expected: Shape) -> Result<()> {
        if self.shape == expected {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                op,
                expected,
                actual: self.shape,
            })
        }
    }
}

impl<T: Clone> Tensor<T> {
    pub fn filled(shape: Shape, value: T) -> Result<Self> {
        if !shape.is_valid() {
            return Err(Error::EmptyShape(shape));
        }
        Ok(Tensor {
            shape,
            data: vec![value; shape.len()],
        })
    }
}

impl<T: Clone + Default> Tensor<T> {
    pub fn zeros(shape: Shape) -> Result<Self> {
        Self::filled(shape, T::default())
    }
}

impl Tensor<f64> {
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn to_f32(&self) -> Tensor<f32> {
        self.map(|&v| v as f32)
    }
}

impl<T> Index<(usize, usize, usize)> for Tensor<T> {
    type Output = T;

    #[inline]
    fn index(&self, (c, y, x): (usize, usize, usize)) -> &T {
        &self.data[self.shape.offset(c, y, x)]
    }
}

impl<T> IndexMut<(usize, usize, usize)> for Tensor<T> {
    #[inline]
    fn index_mut(&mut self, (c, y, x): (usize, usize, usize)) -> &mut T {
        let i = self.shape.offset(c, y, x);
        &mut self.data[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_count_matches_shape() {
        let t = Tensor::<f64>::zeros(Shape::new(2, 3, 4)).unwrap();
        assert_eq!(t.len(), 24);
        assert!(Tensor::from_vec(Shape::new(1, 2, 2), vec![0.0; 3]).is_err());
    }

    #[test]
    fn zero_dimension_rejected() {
        assert_eq!(
            Tensor::<f64>::zeros(Shape::new(1, 0, 3)),
            Err(Error::EmptyShape(Shape::new(1, 0, 3)))
        );
    }

    #[test]
    fn layout_is_channel_major() {
        let t = Tensor::from_fn(Shape::new(2, 2, 3), |c, y, x| (c * 100 + y * 10 + x) as f64).unwrap();
        assert_eq!(t.as_slice()[..3], [0.0, 1.0, 2.0]);
        assert_eq!(t.channel(1)[0], 100.0);
        assert_eq!(t[(1, 1, 2)], 112.0);
    }
}
