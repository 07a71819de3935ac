use alloc::vec::Vec;

use rand::Rng as _;

use super::spec::NetworkSpec;
use crate::fixed::FixedPointFormat;
use crate::ops::KernelBank;
use crate::rng::{self, stream};
use crate::{Error, Result};

/// One kernel bank per convolution layer, in declaration order. Pooling and up-sampling
/// layers own nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters<T = f64> {
    banks: Vec<KernelBank<T>>,
}

/// Gradients mirror the parameter structure.
pub type Gradients = Parameters<f64>;

impl<T> Parameters<T> {
    pub fn from_banks(banks: Vec<KernelBank<T>>) -> Self {
        Parameters { banks }
    }

    pub fn banks(&self) -> &[KernelBank<T>] {
        &self.banks
    }

    pub fn banks_mut(&mut self) -> &mut [KernelBank<T>] {
        &mut self.banks
    }

    pub fn into_banks(self) -> Vec<KernelBank<T>> {
        self.banks
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Parameters<U> {
        Parameters {
            banks: self.banks.iter().map(|b| b.map(&mut f)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.banks.iter().map(|b| b.weights().len() + b.bias().len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        let dims = spec.kernel_dims();
        if dims.len() != self.banks.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "network has {} convolutions but parameters hold {} banks",
                dims.len(),
                self.banks.len()
            )));
        }
        for (i, (d, b)) in dims.iter().zip(&self.banks).enumerate() {
            if *d != b.dims() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "bank {i} has dims {:?}, layer needs {d:?}",
                    b.dims()
                )));
            }
        }
        Ok(())
    }
}

impl<T: Clone + Default> Parameters<T> {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        Parameters {
            banks: spec
                .kernel_dims()
                .into_iter()
                .map(|d| KernelBank::zeros(d).expect("spec dims are positive"))
                .collect(),
        }
    }
}

impl Parameters<f64> {
    /// Visits every weight then bias of every bank, paired with the same entry of `other`.
    pub fn zip_mut(&mut self, other: &Parameters<f64>, mut f: impl FnMut(&mut f64, f64)) {
        for (a, b) in self.banks.iter_mut().zip(&other.banks) {
            for (x, &y) in a.weights_mut().iter_mut().zip(b.weights()) {
                f(x, y);
            }
            for (x, &y) in a.bias_mut().iter_mut().zip(b.bias()) {
                f(x, y);
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for b in &mut self.banks {
            b.weights_mut().iter_mut().for_each(|w| *w *= factor);
            b.bias_mut().iter_mut().for_each(|w| *w *= factor);
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.banks
            .iter()
            .flat_map(|b| b.weights().iter().chain(b.bias()).copied())
    }

    pub fn quantize(&self, fmt: FixedPointFormat) -> Parameters<i32> {
        self.map(|&w| fmt.quantize(w))
    }

    /// Order-sensitive digest of every value, used to tie forward caches to parameters.
    pub(crate) fn fingerprint(&self) -> u64 {
        // FNV-1a over the IEEE bit patterns
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in self.values() {
            for byte in v.to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

impl Parameters<i32> {
    pub fn dequantize(&self, fmt: FixedPointFormat) -> Parameters<f64> {
        self.map(|&r| fmt.dequantize(r))
    }
}

/// Glorot-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn init_parameters(spec: &NetworkSpec, seed: u64) -> Parameters<f64> {
    let mut rng = rng::seeded_stream(seed, stream::INIT);
    let mut params = Parameters::zeros(spec);
    for bank in params.banks_mut() {
        let limit = glorot_limit(bank.dims());
        for w in bank.weights_mut() {
            *w = rng.random_range(-limit..=limit);
        }
    }
    params
}

pub fn glorot_limit([out_c, in_c, k_h, k_w]: [usize; 4]) -> f64 {
    let fan_in = in_c * k_h * k_w;
    let fan_out = out_c * k_h * k_w;
    libm::sqrt(6.0 / (fan_in + fan_out) as f64)
}
