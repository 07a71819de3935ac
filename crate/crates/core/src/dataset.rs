//! Image sets, Gaussian corruption and train/validation splitting.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::rng::{self, stream};
use crate::tensor::{Shape, Tensor};
use crate::{Error, Result};

/// A stack of 8-bit grayscale images, row-major per image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    count: usize,
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl ImageSet {
    pub fn new(count: usize, height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != count * height * width {
            return Err(Error::InvalidArgument(alloc::format!(
                "{count} images of {height}x{width} need {} pixels, got {}",
                count * height * width,
                pixels.len()
            )));
        }
        Ok(ImageSet {
            count,
            height,
            width,
            pixels,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.height * self.width;
        &self.pixels[i * n..(i + 1) * n]
    }

    /// The first `n` images (or all of them if fewer).
    pub fn take(&self, n: usize) -> ImageSet {
        let n = n.min(self.count);
        ImageSet {
            count: n,
            height: self.height,
            width: self.width,
            pixels: self.pixels[..n * self.height * self.width].to_vec(),
        }
    }
}

/// Each image becomes a `1 x H x W` tensor holding `pixel / 255`.
pub fn normalize(set: &ImageSet) -> Vec<Tensor<f64>> {
    let shape = Shape::new(1, set.height, set.width);
    (0..set.count)
        .map(|i| {
            let data = set.image(i).iter().map(|&p| p as f64 / 255.0).collect();
            Tensor::from_vec(shape, data).expect("image shape matches buffer")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Standard deviation in normalized intensity units.
    pub sigma: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub const DEFAULT_SIGMA: f64 = 0.3;

    pub fn new(sigma: f64, seed: u64) -> Self {
        NoiseConfig {
            sigma,
            clip_lo: 0.0,
            clip_hi: 1.0,
            seed,
        }
    }

    pub fn unclipped(sigma: f64, seed: u64) -> Self {
        NoiseConfig {
            sigma,
            clip_lo: f64::NEG_INFINITY,
            clip_hi: f64::INFINITY,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "noise sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if self.clip_lo.partial_cmp(&self.clip_hi) != Some(core::cmp::Ordering::Less) {
            return Err(Error::InvalidArgument(alloc::format!(
                "clip range [{}, {}] is empty",
                self.clip_lo,
                self.clip_hi
            )));
        }
        Ok(())
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::new(Self::DEFAULT_SIGMA, 0)
    }
}

/// `clamp(x + e, clip_lo, clip_hi)` with `e ~ N(0, sigma^2)`.
///
/// Draws are taken image by image, pixel by pixel from the seed's noise stream, so the
/// result depends only on `(batch, cfg)`.
pub fn add_gaussian_noise(batch: &[Tensor<f64>], cfg: &NoiseConfig) -> Result<Vec<Tensor<f64>>> {
    cfg.validate()?;
    let clamp = |v: f64| v.max(cfg.clip_lo).min(cfg.clip_hi);
    if cfg.sigma == 0.0 {
        return Ok(batch.iter().map(|t| t.map(|&v| clamp(v))).collect());
    }
    let normal =
        Normal::new(0.0, cfg.sigma).map_err(|e| Error::InvalidArgument(alloc::format!("noise distribution: {e}")))?;
    let mut rng = rng::seeded_stream(cfg.seed, stream::NOISE);
    Ok(batch
        .iter()
        .map(|t| t.map(|&v| clamp(v + normal.sample(&mut rng))))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitConfig {
    pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// `floor(n * train_fraction)`, immune to products like `0.29 * 100 = 28.999...`.
    pub fn train_len(&self, n: usize) -> usize {
        let exact = n as f64 * self.train_fraction;
        let nearest = libm::round(exact);
        if libm::fabs(exact - nearest) <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            libm::floor(exact) as usize
        }
    }
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: Self::DEFAULT_TRAIN_FRACTION,
            seed: 0,
        }
    }
}

/// Seeded permutation of `0..n` partitioned into (train, validation) index lists.
pub fn split_indices(n: usize, cfg: &SplitConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("cannot split an empty batch".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded_stream(cfg.seed, stream::SPLIT));
    let validation = order.split_off(cfg.train_len(n));
    Ok((order, validation))
}

pub fn split<T: Clone>(batch: &[T], cfg: &SplitConfig) -> Result<(Vec<T>, Vec<T>)> {
    let (train, val) = split_indices(batch.len(), cfg)?;
    Ok((
        train.iter().map(|&i| batch[i].clone()).collect(),
        val.iter().map(|&i| batch[i].clone()).collect(),
    ))
}
