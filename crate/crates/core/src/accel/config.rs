use crate::fixed::FixedPointFormat;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelConfig {
    pub clock_hz: f64,
    pub num_channels: usize,
    /// Multiply-accumulates each lane retires per cycle.
    pub macs_per_channel: usize,
    pub fifo_depth: usize,
    pub fixed_format: FixedPointFormat,
    /// Supplied, not modelled.
    pub power_watts: f64,
    /// When false a push into a full FIFO is an error instead of a stall.
    pub backpressure: bool,
    /// Record every event. Counters are kept either way.
    pub trace: bool,
}

impl Default for AccelConfig {
    fn default() -> Self {
        AccelConfig {
            clock_hz: 100e6,
            num_channels: 8,
            macs_per_channel: 16,
            fifo_depth: 512,
            fixed_format: FixedPointFormat::Q16_8,
            power_watts: 5.93,
            backpressure: true,
            trace: false,
        }
    }
}

impl AccelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_channels == 0 || self.num_channels > 64 {
            return Err(Error::InvalidArgument(alloc::format!(
                "num_channels must lie in 1..=64, got {}",
                self.num_channels
            )));
        }
        if self.fifo_depth == 0 {
            return Err(Error::InvalidArgument("fifo_depth must be >= 1".into()));
        }
        if self.macs_per_channel == 0 {
            return Err(Error::InvalidArgument("macs_per_channel must be >= 1".into()));
        }
        if !(self.clock_hz > 0.0 && self.clock_hz.is_finite()) {
            return Err(Error::InvalidArgument("clock_hz must be positive".into()));
        }
        if !(self.power_watts > 0.0 && self.power_watts.is_finite()) {
            return Err(Error::InvalidArgument("power_watts must be positive".into()));
        }
        Ok(())
    }
}
