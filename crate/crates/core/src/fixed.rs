//! Q-format fixed-point words.
//!
//! A value is stored as a raw integer `r` and read as `r / 2^frac_bits`. Conversions round
//! half to even and saturate at the format bounds; nothing here traps on overflow.
//!
//! Multiply-accumulate runs in a widened `i64` register holding `2 * frac_bits` fractional
//! bits. Accumulation is saturating and happens in a fixed order (input channel, kernel row,
//! kernel column), so every caller that uses [`Accumulator`] gets the same word for the same
//! operands. The accumulator is narrowed exactly once per output element.

use core::fmt;

use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    total_bits: u32,
    frac_bits: u32,
    signed: bool,
}

impl FixedPointFormat {
    /// Signed Q(16,8), the default word of the accelerator model.
    pub const Q16_8: FixedPointFormat = FixedPointFormat {
        total_bits: 16,
        frac_bits: 8,
        signed: true,
    };

    pub fn new(total_bits: u32, frac_bits: u32, signed: bool) -> Result<Self> {
        if total_bits == 0 || total_bits > 32 || frac_bits >= total_bits {
            return Err(Error::InvalidArgument(alloc::format!(
                "fixed-point format needs 0 <= frac_bits < total_bits <= 32, got Q({total_bits},{frac_bits})"
            )));
        }
        Ok(FixedPointFormat {
            total_bits,
            frac_bits,
            signed,
        })
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn min_raw(&self) -> i64 {
        if self.signed {
            -(1i64 << (self.total_bits - 1))
        } else {
            0
        }
    }

    pub fn max_raw(&self) -> i64 {
        if self.signed {
            (1i64 << (self.total_bits - 1)) - 1
        } else {
            (1i64 << self.total_bits) - 1
        }
    }

    /// Weight of one least-significant bit.
    pub fn resolution(&self) -> f64 {
        1.0 / self.scale()
    }

    fn scale(&self) -> f64 {
        (1u64 << self.frac_bits) as f64
    }

    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 / self.scale()
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 / self.scale()
    }

    pub fn clamp_value(&self, x: f64) -> f64 {
        x.clamp(self.min_value(), self.max_value())
    }

    fn saturate(&self, raw: i64) -> i32 {
        // Every format fits in 32 bits, unsigned Q(32, _) included as long as raw stays
        // below 2^31; wider unsigned words are clamped to i32::MAX.
        raw.clamp(self.min_raw(), self.max_raw().min(i32::MAX as i64)) as i32
    }

    /// Round-half-even quantization with saturation. NaN maps to zero.
    pub fn quantize(&self, x: f64) -> i32 {
        if x.is_nan() {
            return 0;
        }
        let scaled = libm::rint(x * self.scale());
        if scaled <= self.min_raw() as f64 {
            self.saturate(self.min_raw())
        } else if scaled >= self.max_raw() as f64 {
            self.saturate(self.max_raw())
        } else {
            self.saturate(scaled as i64)
        }
    }

    pub fn dequantize(&self, raw: i32) -> f64 {
        raw as f64 / self.scale()
    }

    /// Narrow a `2 * frac_bits` accumulator to one word.
    pub fn narrow(&self, acc: i64) -> i32 {
        self.saturate(shr_round_half_even(acc, self.frac_bits))
    }

    /// Lift a word to accumulator precision (`2 * frac_bits` fractional bits).
    pub fn widen(&self, raw: i32) -> i64 {
        (raw as i64) << self.frac_bits
    }

    pub fn relu(&self, raw: i32) -> i32 {
        raw.max(0)
    }

    /// Logistic function on a word. Evaluated through `f64`, which is exact for the
    /// input word and deterministic, then re-quantized.
    pub fn sigmoid(&self, raw: i32) -> i32 {
        let x = self.dequantize(raw);
        self.quantize(1.0 / (1.0 + libm::exp(-x)))
    }
}

impl Default for FixedPointFormat {
    fn default() -> Self {
        Self::Q16_8
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.signed { "" } else { "u" };
        write!(f, "{sign}Q({},{})", self.total_bits, self.frac_bits)
    }
}

/// Arithmetic right shift by `bits` rounding ties to even.
pub fn shr_round_half_even(v: i64, bits: u32) -> i64 {
    if bits == 0 {
        return v;
    }
    let floor = v >> bits;
    let rem = v & ((1i64 << bits) - 1);
    let half = 1i64 << (bits - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Widened multiply-accumulate register.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Accumulator(i64);

impl Accumulator {
    /// Starts from a bias word lifted to accumulator precision.
    pub fn with_bias(fmt: FixedPointFormat, bias: i32) -> Self {
        Accumulator(fmt.widen(bias))
    }

    #[inline]
    pub fn mac(&mut self, a: i32, b: i32) {
        self.0 = self.0.saturating_add(a as i64 * b as i64);
    }

    pub fn raw(&self) -> i64 {
        self.0
    }

    pub fn finish(self, fmt: FixedPointFormat) -> i32 {
        fmt.narrow(self.0)
    }
}

pub fn quantize(input: &Tensor<f64>, fmt: FixedPointFormat) -> Tensor<i32> {
    input.map(|&x| fmt.quantize(x))
}

pub fn dequantize(input: &Tensor<i32>, fmt: FixedPointFormat) -> Tensor<f64> {
    input.map(|&r| fmt.dequantize(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantize_examples() {
        let q = FixedPointFormat::Q16_8;
        assert_eq!(q.quantize(0.0), 0);
        assert_eq!(q.quantize(1.5), 384);
        assert_eq!(q.quantize(200.0), 32767);
        assert_eq!(q.quantize(-200.0), -32768);
    }

    #[test]
    fn ties_round_to_even() {
        let q = FixedPointFormat::Q16_8;
        // 0.5 LSB and 1.5 LSB
        assert_eq!(q.quantize(0.5 / 256.0), 0);
        assert_eq!(q.quantize(1.5 / 256.0), 2);
        assert_eq!(q.quantize(-0.5 / 256.0), 0);
        assert_eq!(shr_round_half_even(0b1_1000, 4), 2);
        assert_eq!(shr_round_half_even(0b0_1000, 4), 0);
        assert_eq!(shr_round_half_even(-8, 4), 0);
        assert_eq!(shr_round_half_even(-24, 4), -2);
        assert_eq!(shr_round_half_even(-25, 4), -2);
    }

    #[test]
    fn format_validation() {
        assert!(FixedPointFormat::new(16, 16, true).is_err());
        assert!(FixedPointFormat::new(33, 8, true).is_err());
        assert!(FixedPointFormat::new(32, 0, false).is_ok());
        let u = FixedPointFormat::new(8, 4, false).unwrap();
        assert_eq!(u.quantize(-1.0), 0);
        assert_eq!(u.quantize(100.0), 255);
    }

    #[test]
    fn accumulator_narrows_once() {
        let q = FixedPointFormat::Q16_8;
        let mut acc = Accumulator::with_bias(q, q.quantize(0.25));
        acc.mac(q.quantize(1.5), q.quantize(2.0));
        assert_eq!(q.dequantize(acc.finish(q)), 3.25);
    }

    proptest! {
        #[test]
        fn round_trip_error_bounded(x in -300.0f64..300.0, frac in 0u32..12) {
            let q = FixedPointFormat::new(16, frac, true).unwrap();
            let back = q.dequantize(q.quantize(x));
            let bound = libm::ldexp(1.0, -(frac as i32) - 1);
            prop_assert!((back - q.clamp_value(x)).abs() <= bound);
        }

        #[test]
        fn quantize_monotone(a in -300.0f64..300.0, b in -300.0f64..300.0) {
            let q = FixedPointFormat::Q16_8;
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(q.quantize(lo) <= q.quantize(hi));
            prop_assert!(q.quantize(hi) as i64 <= q.max_raw());
            prop_assert!(q.quantize(lo) as i64 >= q.min_raw());
        }
    }
}
