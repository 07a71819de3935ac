//! Reconstruction quality metrics on `[0, 1]` intensities.

use crate::tensor::Tensor;
use crate::Result;

/// PSNR reported when the error is below [`PSNR_FLOOR_MSE`].
pub const PSNR_CAP_DB: f64 = 99.0;
pub const PSNR_FLOOR_MSE: f64 = 1e-10;
/// Binarization threshold used for pixel accuracy throughout the crate.
pub const PIXEL_THRESHOLD: f64 = 0.5;

pub fn mse(a: &Tensor<f64>, b: &Tensor<f64>) -> Result<f64> {
    b.expect_shape("mse", a.shape())?;
    let sum: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio for peak 1.0.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse < PSNR_FLOOR_MSE {
        PSNR_CAP_DB
    } else {
        -10.0 * libm::log10(mse)
    }
}

pub fn psnr(a: &Tensor<f64>, b: &Tensor<f64>) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}

/// Fraction of positions where `a > threshold` agrees with `b > threshold`.
pub fn pixel_accuracy(a: &Tensor<f64>, b: &Tensor<f64>, threshold: f64) -> Result<f64> {
    b.expect_shape("pixel_accuracy", a.shape())?;
    let agree = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .filter(|(&x, &y)| (x > threshold) == (y > threshold))
        .count();
    Ok(agree as f64 / a.len() as f64)
}

/// Metrics averaged per image over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QualitySummary {
    pub mse: f64,
    pub psnr: f64,
    pub pixel_accuracy: f64,
}

pub fn summarize(outputs: &[Tensor<f64>], targets: &[Tensor<f64>]) -> Result<QualitySummary> {
    if outputs.len() != targets.len() || outputs.is_empty() {
        return Err(crate::Error::InvalidArgument(alloc::format!(
            "metric batches must be non-empty and equal length ({} vs {})",
            outputs.len(),
            targets.len()
        )));
    }
    let mut s = QualitySummary::default();
    for (o, t) in outputs.iter().zip(targets) {
        let m = mse(o, t)?;
        s.mse += m;
        s.psnr += psnr_from_mse(m);
        s.pixel_accuracy += pixel_accuracy(o, t, PIXEL_THRESHOLD)?;
    }
    let n = outputs.len() as f64;
    s.mse /= n;
    s.psnr /= n;
    s.pixel_accuracy /= n;
    Ok(s)
}
