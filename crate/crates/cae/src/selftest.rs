//! Built-in oracle suites run by `cae selftest`.
//!
//! Every suite builds its own inputs from fixed seeds and compares the library against a
//! naive reference, so the outcome does not depend on any trained weights.

use std::io::Write;
use std::time::Instant;

use cae_core::accel::{arbiter_grant, run_pipeline, AccelConfig, ArbiterState};
use cae_core::fixed::{quantize, FixedPointFormat};
use cae_core::model::{
    backward, build_network, build_table1_network, forward, forward_fixed, init_parameters, loss_mse, Parameters,
    DEFAULT_PROFILE,
};
use cae_core::ops::{conv2d, maxpool2d, KernelBank, Padding};
use cae_core::{rng, Shape, Tensor};
use rand::Rng;

use crate::commands::Style;
use crate::error::Result;

/// A one-line detail on success, a description of the first mismatch on failure.
pub type Outcome = std::result::Result<String, String>;

pub struct Suite {
    pub name: &'static str,
    pub run: fn() -> Outcome,
}

pub const SUITES: &[Suite] = &[
    Suite {
        name: "conv brute force",
        run: || conv_check(400, 101),
    },
    Suite {
        name: "maxpool brute force",
        run: || pool_check(400, 202),
    },
    Suite {
        name: "gradient check",
        run: || gradient_check(3),
    },
    Suite {
        name: "pipeline equivalence",
        run: || pipeline_check(20, 2),
    },
    Suite {
        name: "fixed-point rounding",
        run: fixed_check,
    },
    Suite {
        name: "arbiter fairness",
        run: arbiter_check,
    },
];

fn check(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ints(n: usize, r: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-6..=6) as f64).collect()
}

/// `count` random valid convolutions with small integer values against a direct loop.
pub fn conv_check(count: usize, seed: u64) -> Outcome {
    let mut r = rng::seeded(seed);
    let mut cases = 0;
    while cases < count {
        let (c, h, w) = (r.random_range(1..=3), r.random_range(1..=6), r.random_range(1..=6));
        let (o, k, s) = (r.random_range(1..=3), r.random_range(1..=4), r.random_range(1..=2));
        if k > h || k > w {
            continue;
        }
        let x = Tensor::from_vec(Shape::new(c, h, w), ints(c * h * w, &mut r)).map_err(|e| e.to_string())?;
        let bank =
            KernelBank::new([o, c, k, k], ints(o * c * k * k, &mut r), ints(o, &mut r)).map_err(|e| e.to_string())?;
        let got = conv2d(&x, &bank, s, Padding::Valid).map_err(|e| e.to_string())?;
        let (oh, ow) = ((h - k) / s + 1, (w - k) / s + 1);
        for oc in 0..o {
            for y in 0..oh {
                for xx in 0..ow {
                    let mut acc = bank.bias()[oc];
                    for ic in 0..c {
                        for a in 0..k {
                            for b in 0..k {
                                acc += x[(ic, y * s + a, xx * s + b)] * bank.weight(oc, ic, a, b);
                            }
                        }
                    }
                    check(got[(oc, y, xx)] == acc, || format!("case {cases} at ({oc},{y},{xx})"))?;
                }
            }
        }
        cases += 1;
    }
    Ok(format!("{cases} random instances exact"))
}

pub fn pool_check(count: usize, seed: u64) -> Outcome {
    let mut r = rng::seeded(seed);
    let mut cases = 0;
    while cases < count {
        let (c, h, w) = (r.random_range(1..=3), r.random_range(1..=6), r.random_range(1..=6));
        let (win, s) = (r.random_range(1..=3), r.random_range(1..=3));
        if win > h || win > w {
            continue;
        }
        let x = Tensor::from_vec(Shape::new(c, h, w), ints(c * h * w, &mut r)).map_err(|e| e.to_string())?;
        let (got, _) = maxpool2d(&x, win, s).map_err(|e| e.to_string())?;
        for ch in 0..c {
            for y in 0..(h - win) / s + 1 {
                for xx in 0..(w - win) / s + 1 {
                    let m = (0..win * win)
                        .map(|t| x[(ch, y * s + t / win, xx * s + t % win)])
                        .fold(f64::NEG_INFINITY, f64::max);
                    check(got[(ch, y, xx)] == m, || format!("case {cases} at ({ch},{y},{xx})"))?;
                }
            }
        }
        cases += 1;
    }
    Ok(format!("{cases} random instances exact"))
}

/// Central differences over every weight of the reduced 8x8 network, seeds `1..=seeds`.
pub fn gradient_check(seeds: u64) -> Outcome {
    const H: f64 = 1e-4;
    let s = Shape::new(1, 8, 8);
    let spec = build_network(&[3, 2, 2, 2, 2, 3, 1], s, s).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for seed in 1..=seeds {
        let mut r = rng::seeded(seed);
        let mut params = init_parameters(&spec, seed);
        for b in params.banks_mut() {
            for v in b.bias_mut() {
                *v = r.random_range(0.0..0.2);
            }
        }
        let x = Tensor::from_fn(s, |_, _, _| r.random_range(0.0..1.0)).map_err(|e| e.to_string())?;
        let t = Tensor::from_fn(s, |_, _, _| r.random_range(0.0..1.0)).map_err(|e| e.to_string())?;
        let loss = |p: &Parameters| -> f64 { loss_mse(&forward(&spec, p, &x).unwrap().0, &t).unwrap() };
        let (_, cache) = forward(&spec, &params, &x).map_err(|e| e.to_string())?;
        let g = backward(&spec, &params, &cache, &t).map_err(|e| e.to_string())?;
        for bank in 0..params.banks().len() {
            for i in 0..params.banks()[bank].weights().len() {
                let mut p = params.clone();
                p.banks_mut()[bank].weights_mut()[i] += H;
                let mut m = params.clone();
                m.banks_mut()[bank].weights_mut()[i] -= H;
                let num = (loss(&p) - loss(&m)) / (2.0 * H);
                let a = g.banks()[bank].weights()[i];
                worst = worst.max((a - num).abs() / a.abs().max(num.abs()).max(1e-6));
            }
        }
    }
    check(worst < 1e-3, || format!("max relative error {worst:.3e}"))?;
    Ok(format!("{seeds} seeds, max relative error {worst:.2e}"))
}

/// Simulated output against the fixed-point reference on `small_images` reduced-network images
/// and `full_images` through the default network.
pub fn pipeline_check(small_images: u64, full_images: u64) -> Outcome {
    let fmt = FixedPointFormat::Q16_8;
    let cfg = AccelConfig::default();
    let small =
        build_network(&[2, 3, 2, 2, 3, 2, 1], Shape::new(1, 6, 6), Shape::new(1, 8, 8)).map_err(|e| e.to_string())?;
    let full = build_table1_network(&DEFAULT_PROFILE).map_err(|e| e.to_string())?;
    let mut n = 0;
    for (spec, images) in [(&small, small_images), (&full, full_images)] {
        for seed in 0..images {
            let q = init_parameters(spec, seed).quantize(fmt);
            let mut r = rng::seeded(seed);
            let img =
                Tensor::from_fn(spec.input_shape(), |_, _, _| r.random_range(0.0..1.0)).map_err(|e| e.to_string())?;
            let img = quantize(&img, fmt);
            let run = run_pipeline(spec, &q, &img, &cfg).map_err(|e| e.to_string())?;
            let reference = forward_fixed(spec, &q, &img, fmt).map_err(|e| e.to_string())?;
            check(run.output == reference, || {
                format!("image {seed} differs from reference")
            })?;
            n += 1;
        }
    }
    Ok(format!("{n} images bit-identical"))
}

pub fn fixed_check() -> Outcome {
    let fmt = FixedPointFormat::Q16_8;
    let mut r = rng::seeded(303);
    for _ in 0..10_000 {
        let v = r.random_range(fmt.min_value()..fmt.max_value());
        let err = (fmt.dequantize(fmt.quantize(v)) - v).abs();
        check(err <= fmt.resolution() / 2.0, || format!("{v} -> error {err}"))?;
    }
    check(fmt.quantize(1.5) == 384 && fmt.quantize(200.0) == 32767, || {
        "reference words".into()
    })?;
    Ok("10000 round trips within half a step".into())
}

pub fn arbiter_check() -> Outcome {
    let mut s = ArbiterState::unlogged(8);
    let mut counts = [0usize; 8];
    for _ in 0..10_000 {
        counts[arbiter_grant(&mut s, 0xff).ok_or("no grant")?] += 1;
    }
    check(counts.iter().all(|&c| c.abs_diff(1250) <= 1), || format!("{counts:?}"))?;
    Ok("10000 grants, 1250 each".into())
}

/// Runs every suite and prints one line per suite. Returns whether all passed.
pub fn run(force_fail: bool, style: Style, console: &mut dyn Write) -> Result<bool> {
    let mut all = true;
    for suite in SUITES {
        let start = Instant::now();
        let outcome = (suite.run)();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => writeln!(console, "{} {:<22} {detail} ({secs:.2} s)", style.pass(), suite.name)?,
            Err(detail) => {
                all = false;
                writeln!(console, "{} {:<22} {detail}", style.fail(), suite.name)?
            }
        }
    }
    if force_fail {
        all = false;
        writeln!(
            console,
            "{} {:<22} failure requested by --force-fail",
            style.fail(),
            "forced"
        )?;
    }
    Ok(all)
}
