use alloc::vec::Vec;

use crate::tensor::Tensor;
use crate::{Error, Result};

/// Deals row-major pixels to `lanes` streams: pixel `i` goes to stream `i % lanes`.
pub fn distribute<T: Copy>(image: &Tensor<T>, lanes: usize) -> Result<Vec<Vec<T>>> {
    if lanes == 0 {
        return Err(Error::InvalidArgument("need at least one lane".into()));
    }
    let mut streams: Vec<Vec<T>> = (0..lanes)
        .map(|_| Vec::with_capacity(image.len().div_ceil(lanes)))
        .collect();
    for (i, &v) in image.as_slice().iter().enumerate() {
        streams[i % lanes].push(v);
    }
    Ok(streams)
}

/// Inverse of [`distribute`]: takes one value from each stream in turn until all are empty.
pub fn interleave<T: Copy>(streams: &[Vec<T>]) -> Vec<T> {
    let total = streams.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(total);
    let mut round = 0;
    while out.len() < total {
        for s in streams {
            if let Some(&v) = s.get(round) {
                out.push(v);
            }
        }
        round += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn sixteen_pixels_eight_lanes() {
        let img = Tensor::from_fn(Shape::new(1, 4, 4), |_, y, x| (y * 4 + x) as i32).unwrap();
        let s = distribute(&img, 8).unwrap();
        for (j, lane) in s.iter().enumerate() {
            assert_eq!(lane, &vec![j as i32, j as i32 + 8]);
        }
    }

    #[test]
    fn one_lane_is_row_major() {
        let img = Tensor::from_fn(Shape::new(1, 3, 5), |_, y, x| (y * 10 + x) as i32).unwrap();
        assert_eq!(distribute(&img, 1).unwrap(), vec![img.as_slice().to_vec()]);
        assert!(distribute(&img, 0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(h in 1usize..12, w in 1usize..12, lanes in 1usize..10, seed in any::<i32>()) {
            let img = Tensor::from_fn(Shape::new(1, h, w), |_, y, x| seed.wrapping_mul((y * w + x) as i32 + 1)).unwrap();
            let streams = distribute(&img, lanes).unwrap();
            prop_assert_eq!(interleave(&streams), img.as_slice().to_vec());
        }
    }
}
