//! The subcommands behind the `cae` binary.
//!
//! Each command reads a resolved [`RunConfig`], writes its artifacts under an output
//! directory and prints a human-readable summary. JSON reports never contain wall-clock
//! values, so reruns with the same configuration produce identical files.

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use cae_core::accel::{compare_table2, count_ops, output_done, perf_report, run_pipeline, PerfReport, TABLE2_ROWS};
use cae_core::dataset::{add_gaussian_noise, normalize, split, ImageSet};
use cae_core::fixed::{dequantize, quantize};
use cae_core::metrics::{self, QualitySummary, PIXEL_THRESHOLD};
use cae_core::model::{
    build_table1_network, infer, init_parameters, make_pairs, train, BatchExecutor, EpochStats, NetworkSpec,
    Parameters, TrainingPair,
};
use cae_core::rng::{self, stream};
use cae_core::Tensor;
use rand::Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exec::{Parallel, WallClock};
use crate::{idx, pgm, weights};

/// The accuracy figure reported for the original design, printed next to ours.
pub const REFERENCE_ACCURACY: f64 = 0.8083;
pub const ACCURACY_DEFINITION: &str = "fraction of pixels on the same side of 0.5 as the clean target";

pub const WEIGHTS_FILE: &str = "weights.caew";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const EVAL_REPORT: &str = "eval_report.json";
pub const SIM_REPORT: &str = "sim_report.json";
pub const TRACE_FILE: &str = "trace.txt";

/// Colored status words unless disabled by `CAE_NO_COLOR` or a non-terminal stdout.
#[derive(Debug, Clone, Copy)]
pub struct Style {
    color: bool,
}

impl Style {
    pub fn detect() -> Self {
        Style {
            color: std::env::var_os("CAE_NO_COLOR").is_none() && std::io::stdout().is_terminal(),
        }
    }

    pub fn plain() -> Self {
        Style { color: false }
    }

    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    pub fn pass(&self) -> String {
        self.paint("32", "PASS")
    }

    pub fn fail(&self) -> String {
        self.paint("31", "FAIL")
    }

    pub fn heading(&self, text: &str) -> String {
        self.paint("1", text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quality {
    pub mse: f64,
    pub psnr_db: f64,
    pub pixel_accuracy: f64,
}

impl From<QualitySummary> for Quality {
    fn from(q: QualitySummary) -> Self {
        Quality {
            mse: q.mse,
            psnr_db: q.psnr,
            pixel_accuracy: q.pixel_accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLine {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub config: RunConfig,
    pub images: usize,
    pub train_pairs: usize,
    pub validation_pairs: usize,
    pub epochs: Vec<EpochLine>,
    pub baseline: Quality,
    pub denoised: Quality,
    pub psnr_gain_db: f64,
    pub accuracy_definition: &'static str,
    pub weights_file: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DigitRow {
    pub digit: u8,
    pub images: usize,
    pub baseline: Quality,
    pub denoised: Quality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub weights: PathBuf,
    pub images: PathBuf,
    pub count: usize,
    pub sigma: f64,
    pub seed: u64,
    pub baseline: Quality,
    pub denoised: Quality,
    pub reference_accuracy: f64,
    pub accuracy_definition: &'static str,
    pub per_digit: Vec<DigitRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub profile: Vec<usize>,
    pub source: String,
    pub clock_hz: f64,
    pub num_channels: usize,
    pub macs_per_channel: usize,
    pub fifo_depth: usize,
    pub fixed_format: String,
    pub total_cycles: u64,
    pub mac_ops: u64,
    pub aux_ops: u64,
    pub stall_cycles: u64,
    pub elements_emitted: u64,
    pub output_done: bool,
    pub network_ops: u64,
    pub latency_s: f64,
    pub total_ops: f64,
    pub throughput_gops: f64,
    pub energy_eff_gops_per_w: f64,
    pub power_watts: f64,
    pub throughput_ratio_to_published: f64,
    pub max_abs_diff_vs_float: f64,
    pub trace_file: &'static str,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::file(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text.as_bytes())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))
}

/// Images named by the config, cut to its limit, with their labels when configured.
pub fn load_images(cfg: &RunConfig) -> Result<(ImageSet, Option<Vec<u8>>)> {
    let mut set = idx::load_idx_images(&read(&cfg.data.images)?)?;
    let mut labels = match &cfg.data.labels {
        Some(p) => {
            let l = idx::load_idx_labels(&read(p)?)?;
            idx::check_paired(&set, &l)?;
            Some(l)
        }
        None => None,
    };
    if let Some(n) = cfg.data.limit {
        set = set.take(n);
        if let Some(l) = &mut labels {
            l.truncate(n);
        }
    }
    if set.count() == 0 {
        return Err(Error::Format(format!("{}: no images", cfg.data.images.display())));
    }
    Ok((set, labels))
}

/// Clean images in [0, 1] paired with their corrupted copies.
pub fn noisy_pairs(cfg: &RunConfig, set: &ImageSet) -> Result<Vec<TrainingPair>> {
    let clean = normalize(set);
    let noisy = add_gaussian_noise(&clean, &cfg.noise_config())?;
    Ok(make_pairs(noisy, clean)?)
}

fn load_weights(path: &Path) -> Result<(NetworkSpec, Parameters<f64>)> {
    let params = weights::decode(&read(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let spec = weights::network_for(&params)?;
    Ok((spec, params))
}

fn fmt_quality(label: &str, q: &Quality) -> String {
    format!(
        "{label:<9} mse {:.6}  psnr {:>7.3} dB  pixel accuracy {:.4}",
        q.mse, q.psnr_db, q.pixel_accuracy
    )
}

pub fn train_cmd(cfg: &RunConfig, out: &Path, console: &mut dyn Write) -> Result<TrainSummary> {
    let spec = build_table1_network(&cfg.profile)?;
    let (set, _) = load_images(cfg)?;
    let pairs = noisy_pairs(cfg, &set)?;
    let (train_pairs, val_pairs) = split(&pairs, &cfg.split_config())?;
    ensure_dir(out)?;
    let tc = cfg.train_config();
    writeln!(
        console,
        "training on {} pairs, validating on {} ({} epochs, batch {}, lr {}, {:?})",
        train_pairs.len(),
        val_pairs.len(),
        tc.epochs,
        tc.batch_size,
        tc.learning_rate,
        tc.optimizer
    )?;
    let mut io_err = None;
    let mut hooks = WallClock::new(|s: &EpochStats| {
        let r = writeln!(
            console,
            "epoch {:>3}  train loss {:.6}  val loss {:.6}  ({:.1} s)",
            s.epoch, s.train_loss, s.val_loss, s.seconds
        );
        if let Err(e) = r {
            io_err.get_or_insert(e);
        }
    });
    let (params, report) = train(&spec, &train_pairs, &val_pairs, &tc, &Parallel, &mut hooks)?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    write(&out.join(WEIGHTS_FILE), &weights::encode(&params))?;
    let summary = TrainSummary {
        config: cfg.clone(),
        images: set.count(),
        train_pairs: train_pairs.len(),
        validation_pairs: val_pairs.len(),
        epochs: report
            .epochs
            .iter()
            .map(|e| EpochLine {
                epoch: e.epoch,
                train_loss: e.train_loss,
                val_loss: e.val_loss,
            })
            .collect(),
        baseline: report.baseline.into(),
        denoised: report.denoised.into(),
        psnr_gain_db: report.denoised.psnr - report.baseline.psnr,
        accuracy_definition: ACCURACY_DEFINITION,
        weights_file: WEIGHTS_FILE,
    };
    write_json(&out.join(TRAIN_REPORT), &summary)?;
    writeln!(console, "{}", fmt_quality("noisy", &summary.baseline))?;
    writeln!(console, "{}", fmt_quality("denoised", &summary.denoised))?;
    writeln!(
        console,
        "wrote {} and {}",
        out.join(WEIGHTS_FILE).display(),
        out.join(TRAIN_REPORT).display()
    )?;
    Ok(summary)
}

fn denoise_all(spec: &NetworkSpec, params: &Parameters<f64>, inputs: &[Tensor<f64>]) -> Result<Vec<Tensor<f64>>> {
    Parallel
        .map(inputs.len(), &|i| infer(spec, params, &inputs[i]))
        .into_iter()
        .collect::<cae_core::Result<Vec<_>>>()
        .map_err(Into::into)
}

/// Writes `noisy/NNNNN.pgm` and `denoised/NNNNN.pgm` for every input image.
pub fn denoise_cmd(cfg: &RunConfig, weights_path: &Path, out: &Path, console: &mut dyn Write) -> Result<usize> {
    let (spec, params) = load_weights(weights_path)?;
    let (set, _) = load_images(cfg)?;
    let pairs = noisy_pairs(cfg, &set)?;
    let inputs: Vec<Tensor<f64>> = pairs.iter().map(|p| p.noisy.clone()).collect();
    let outputs = denoise_all(&spec, &params, &inputs)?;
    for sub in ["noisy", "denoised"] {
        ensure_dir(&out.join(sub))?;
    }
    for (i, (noisy, clean)) in inputs.iter().zip(&outputs).enumerate() {
        let name = format!("{i:05}.pgm");
        write(&out.join("noisy").join(&name), &pgm::encode(noisy)?)?;
        write(&out.join("denoised").join(&name), &pgm::encode(clean)?)?;
    }
    writeln!(
        console,
        "denoised {} images into {}",
        outputs.len(),
        out.join("denoised").display()
    )?;
    Ok(outputs.len())
}

pub fn eval_cmd(cfg: &RunConfig, weights_path: &Path, out: &Path, console: &mut dyn Write) -> Result<EvalSummary> {
    let (spec, params) = load_weights(weights_path)?;
    let (set, labels) = load_images(cfg)?;
    let pairs = noisy_pairs(cfg, &set)?;
    let noisy: Vec<Tensor<f64>> = pairs.iter().map(|p| p.noisy.clone()).collect();
    let clean: Vec<Tensor<f64>> = pairs.iter().map(|p| p.clean.clone()).collect();
    let denoised = denoise_all(&spec, &params, &noisy)?;

    let mut per_digit = Vec::new();
    if let Some(labels) = &labels {
        for digit in 0..10u8 {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == digit).collect();
            if idx.is_empty() {
                continue;
            }
            let pick = |v: &[Tensor<f64>]| idx.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
            per_digit.push(DigitRow {
                digit,
                images: idx.len(),
                baseline: metrics::summarize(&pick(&noisy), &pick(&clean))?.into(),
                denoised: metrics::summarize(&pick(&denoised), &pick(&clean))?.into(),
            });
        }
    }
    let summary = EvalSummary {
        weights: weights_path.to_path_buf(),
        images: cfg.data.images.clone(),
        count: set.count(),
        sigma: cfg.noise.sigma,
        seed: cfg.seed,
        baseline: metrics::summarize(&noisy, &clean)?.into(),
        denoised: metrics::summarize(&denoised, &clean)?.into(),
        reference_accuracy: REFERENCE_ACCURACY,
        accuracy_definition: ACCURACY_DEFINITION,
        per_digit,
    };
    ensure_dir(out)?;
    write_json(&out.join(EVAL_REPORT), &summary)?;
    writeln!(console, "{} images, sigma {}", summary.count, summary.sigma)?;
    writeln!(console, "{}", fmt_quality("noisy", &summary.baseline))?;
    writeln!(console, "{}", fmt_quality("denoised", &summary.denoised))?;
    writeln!(
        console,
        "reference accuracy {:.2}% (original report; its metric is not defined, ours is the {} threshold pixel match)",
        REFERENCE_ACCURACY * 100.0,
        PIXEL_THRESHOLD
    )?;
    for row in &summary.per_digit {
        writeln!(
            console,
            "  digit {} ({:>5} images): noisy {:.4}  denoised {:.4}",
            row.digit, row.images, row.baseline.pixel_accuracy, row.denoised.pixel_accuracy
        )?;
    }
    Ok(summary)
}

/// Where `simulate` gets its image from.
#[derive(Debug, Clone, PartialEq)]
pub enum SimSource {
    /// Image `index` of the configured file, with the configured noise.
    Dataset { index: usize },
    /// Uniform random pixels drawn from the run seed.
    Synthetic,
}

pub fn simulate_cmd(
    cfg: &RunConfig,
    weights_path: Option<&Path>,
    source: &SimSource,
    out: &Path,
    console: &mut dyn Write,
) -> Result<(SimSummary, PerfReport)> {
    let (spec, params) = match weights_path {
        Some(p) => load_weights(p)?,
        None => {
            let spec = build_table1_network(&cfg.profile)?;
            let params = init_parameters(&spec, cfg.seed);
            (spec, params)
        }
    };
    let (image, source_text) = match source {
        SimSource::Dataset { index } => {
            let (set, _) = load_images(cfg)?;
            if *index >= set.count() {
                return Err(Error::Format(format!(
                    "image index {index} out of range ({} images)",
                    set.count()
                )));
            }
            let pairs = noisy_pairs(cfg, &set.take(index + 1))?;
            (
                pairs[*index].noisy.clone(),
                format!("{} #{index}", cfg.data.images.display()),
            )
        }
        SimSource::Synthetic => {
            let mut r = rng::seeded_stream(cfg.seed, stream::SAMPLE);
            let img = Tensor::from_fn(spec.input_shape(), |_, _, _| r.random_range(0.0..1.0))?;
            (img, format!("synthetic seed {}", cfg.seed))
        }
    };
    let accel = cae_core::accel::AccelConfig {
        trace: true,
        ..cfg.accel_config()?
    };
    let fmt = accel.fixed_format;
    let qparams = params.quantize(fmt);
    let run = run_pipeline(&spec, &qparams, &quantize(&image, fmt), &accel)?;
    let report = perf_report(&run.counters, &accel)?;
    let float_out = infer(&spec, &params, &image)?;
    let max_diff = dequantize(&run.output, fmt)
        .as_slice()
        .iter()
        .zip(float_out.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    ensure_dir(out)?;
    write(&out.join(TRACE_FILE), run.trace.to_string().as_bytes())?;
    let table = compare_table2(&report, &accel);
    let summary = SimSummary {
        profile: cfg.profile.clone(),
        source: source_text,
        clock_hz: accel.clock_hz,
        num_channels: accel.num_channels,
        macs_per_channel: accel.macs_per_channel,
        fifo_depth: accel.fifo_depth,
        fixed_format: fmt.to_string(),
        total_cycles: run.counters.total_cycles,
        mac_ops: run.counters.mac_ops,
        aux_ops: run.counters.aux_ops,
        stall_cycles: run.counters.stall_cycles,
        elements_emitted: run.counters.elements_emitted,
        output_done: output_done(&run.counters, spec.input_shape().len() as u64),
        network_ops: count_ops(&spec)?,
        latency_s: report.latency_s,
        total_ops: report.total_ops,
        throughput_gops: report.throughput_gops,
        energy_eff_gops_per_w: report.energy_eff_gops_per_w,
        power_watts: report.power_watts,
        throughput_ratio_to_published: table.ratio_to_ours(),
        max_abs_diff_vs_float: max_diff,
        trace_file: TRACE_FILE,
    };
    write_json(&out.join(SIM_REPORT), &summary)?;
    writeln!(
        console,
        "{} cycles ({} stalled), {} MACs, {} elements emitted, done: {}",
        summary.total_cycles, summary.stall_cycles, summary.mac_ops, summary.elements_emitted, summary.output_done
    )?;
    writeln!(console, "fixed-point output vs float model: max |diff| {:.5}", max_diff)?;
    writeln!(console)?;
    write!(console, "{table}")?;
    writeln!(
        console,
        "\nops counted at 2 per multiply-accumulate plus 1 per activation, pooling or up-sampling output"
    )?;
    writeln!(
        console,
        "published row for this design: {} at {}",
        TABLE2_ROWS[5].throughput, TABLE2_ROWS[5].latency
    )?;
    Ok((summary, report))
}
