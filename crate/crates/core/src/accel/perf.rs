use alloc::vec::Vec;
use core::fmt;

use super::config::AccelConfig;
use super::pipeline::PerfCounters;
use crate::model::{Activation, LayerKind, NetworkSpec};
use crate::{Error, Result};

/// Operations for one pass over the internal canvas.
///
/// A convolution costs `2 * kh * kw * in * out * out_h * out_w` (multiply and add counted
/// separately) plus one per output element for its activation. Pooling and up-sampling
/// cost one per output element.
pub fn count_ops(spec: &NetworkSpec) -> Result<u64> {
    let shapes = spec.shape_chain()?;
    let mut total = 0u64;
    for (layer, out) in spec.layers().iter().zip(&shapes[1..]) {
        let elements = out.len() as u64;
        total += match layer.kind {
            LayerKind::Convolution => {
                let k = (layer.window * layer.window) as u64;
                let act = (layer.activation != Activation::None) as u64;
                2 * k * layer.in_channels as u64 * elements + act * elements
            }
            LayerKind::MaxPool | LayerKind::UpSample => elements,
        };
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfReport {
    pub latency_s: f64,
    pub total_ops: f64,
    pub throughput_gops: f64,
    pub energy_eff_gops_per_w: f64,
    pub power_watts: f64,
}

impl PerfReport {
    /// Report for `total_ops` operations finished in `latency_s` seconds at `power_watts`.
    pub fn from_totals(total_ops: f64, latency_s: f64, power_watts: f64) -> Result<Self> {
        if !(latency_s > 0.0 && latency_s.is_finite()) {
            return Err(Error::ZeroCycles);
        }
        if !(power_watts > 0.0 && power_watts.is_finite()) {
            return Err(Error::InvalidArgument("power_watts must be positive".into()));
        }
        let throughput_gops = total_ops / latency_s / 1e9;
        Ok(PerfReport {
            latency_s,
            total_ops,
            throughput_gops,
            energy_eff_gops_per_w: throughput_gops / power_watts,
            power_watts,
        })
    }
}

/// Latency from the cycle count, operations at two per multiply-accumulate.
pub fn perf_report(counters: &PerfCounters, cfg: &AccelConfig) -> Result<PerfReport> {
    if counters.total_cycles == 0 {
        return Err(Error::ZeroCycles);
    }
    PerfReport::from_totals(
        counters.total_ops() as f64,
        counters.total_cycles as f64 / cfg.clock_hz,
        cfg.power_watts,
    )
}

/// A published comparison row, text exactly as printed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub platform: &'static str,
    pub technology: &'static str,
    pub frequency: &'static str,
    pub power: &'static str,
    pub latency: &'static str,
    pub throughput: &'static str,
    pub energy_efficiency: &'static str,
    pub throughput_gops: f64,
}

#[allow(clippy::too_many_arguments)]
const fn row(
    platform: &'static str,
    technology: &'static str,
    frequency: &'static str,
    power: &'static str,
    latency: &'static str,
    throughput: &'static str,
    energy_efficiency: &'static str,
    throughput_gops: f64,
) -> PublishedRow {
    PublishedRow {
        platform,
        technology,
        frequency,
        power,
        latency,
        throughput,
        energy_efficiency,
        throughput_gops,
    }
}

pub const TABLE2_ROWS: [PublishedRow; 6] = [
    row(
        "NVIDIA K80",
        "ASIC (28nm)",
        "1.48GHz",
        "30W",
        "1137.62ms",
        "22000(GOP/s)",
        "733.33(GOP/s/W)",
        22000.0,
    ),
    row(
        "NVIDIA GTX 1080 TI",
        "GPU(16nm)",
        "1.48GHz",
        "250W",
        "6.15ms",
        "235.77(GOP/s)",
        "0.94(GOP/s/W)",
        235.77,
    ),
    row(
        "Chakradhar et al.",
        "FPGA(28nm)",
        "200MHz",
        "15W",
        "-",
        "16(GOP/s)",
        "1.06(GOP/s/W)",
        16.0,
    ),
    row(
        "Gokhale et al.",
        "FPGA(28nm)",
        "150MHz",
        "8W",
        "4.50ms",
        "23.18(GOP/s)",
        "2.90(GOP/s/W)",
        23.18,
    ),
    row(
        "Zhang et al.",
        "FPGA(28nm)",
        "100MHz",
        "18.61W",
        "21.61ms",
        "61.62(GOP/s)",
        "3.31(GOP/s/W)",
        61.62,
    ),
    row(
        "Ours",
        "FPGA(16nm)",
        "100MHz",
        "5.93W",
        "2.91ms",
        "21.12(GOP/s)",
        "3.56(GOP/s/W)",
        21.12,
    ),
];

/// Published rows next to a simulated one.
#[derive(Debug, Clone, PartialEq)]
pub struct Table2 {
    pub published: Vec<PublishedRow>,
    pub simulated: PerfReport,
    pub clock_hz: f64,
}

impl Table2 {
    /// Simulated throughput over each published throughput.
    pub fn ratios(&self) -> Vec<f64> {
        self.published
            .iter()
            .map(|r| self.simulated.throughput_gops / r.throughput_gops)
            .collect()
    }

    /// Ratio against the accelerator this design reproduces.
    pub fn ratio_to_ours(&self) -> f64 {
        self.simulated.throughput_gops / TABLE2_ROWS[5].throughput_gops
    }
}

pub fn compare_table2(report: &PerfReport, cfg: &AccelConfig) -> Table2 {
    Table2 {
        published: TABLE2_ROWS.to_vec(),
        simulated: *report,
        clock_hz: cfg.clock_hz,
    }
}

impl fmt::Display for Table2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20} {:<12} {:<10} {:<8} {:<11} {:<14} {:<17} {:>10}",
            "Platform", "Technology", "Frequency", "Power", "Latency", "Throughput", "Energy eff.", "sim/row"
        )?;
        for (r, ratio) in self.published.iter().zip(self.ratios()) {
            writeln!(
                f,
                "{:<20} {:<12} {:<10} {:<8} {:<11} {:<14} {:<17} {:>10.4}",
                r.platform, r.technology, r.frequency, r.power, r.latency, r.throughput, r.energy_efficiency, ratio
            )?;
        }
        let s = &self.simulated;
        writeln!(
            f,
            "{:<20} {:<12} {:<10} {:<8} {:<11} {:<14} {:<17} {:>10.4}",
            "Simulated",
            "model",
            alloc::format!("{}MHz", self.clock_hz / 1e6),
            alloc::format!("{}W", s.power_watts),
            alloc::format!("{:.4}ms", s.latency_s * 1e3),
            alloc::format!("{:.4}(GOP/s)", s.throughput_gops),
            alloc::format!("{:.4}(GOP/s/W)", s.energy_eff_gops_per_w),
            self.ratio_to_ours()
        )
    }
}
