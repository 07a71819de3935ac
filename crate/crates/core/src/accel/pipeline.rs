use alloc::format;
use alloc::vec::Vec;

use super::arbiter::{arbiter_grant, ArbiterState};
use super::config::AccelConfig;
use super::distributor::distribute;
use super::fifo::FifoModel;
use super::trace::{PipelineTrace, TraceKind, Unit};
use crate::fixed::FixedPointFormat;
use crate::model::{canvas_border, Activation, LayerKind, NetworkSpec, Parameters};
use crate::ops::{conv2d_fixed_element, Border, ConvGeometry, KernelBank};
use crate::tensor::{Shape, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PerfCounters {
    pub total_cycles: u64,
    /// Multiply-accumulates issued, padding taps included.
    pub mac_ops: u64,
    /// One per activation, pooling or up-sampling result.
    pub aux_ops: u64,
    /// Cycles in which at least one lane was blocked by a full FIFO.
    pub stall_cycles: u64,
    pub elements_emitted: u64,
}

impl PerfCounters {
    /// Operations at two per multiply-accumulate.
    pub fn total_ops(&self) -> u64 {
        2 * self.mac_ops + self.aux_ops
    }
}

/// Whether the output controller has seen every expected element.
pub fn output_done(counters: &PerfCounters, expected_elements: u64) -> bool {
    counters.elements_emitted == expected_elements
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub output: Tensor<i32>,
    pub counters: PerfCounters,
    pub trace: PipelineTrace,
    /// Final state of each lane FIFO, counters included.
    pub fifos: Vec<FifoModel<(usize, i32)>>,
    /// Words that crossed the arbiter in each phase: the ingest first, then one per layer.
    pub phase_elements: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Lane {
    next: usize,
    busy: Option<(usize, u64)>,
    pending: Option<(usize, i32)>,
}

/// Shared state of one simulation.
struct Machine {
    cfg: AccelConfig,
    cycle: u64,
    fifos: Vec<FifoModel<(usize, i32)>>,
    arbiter: ArbiterState,
    counters: PerfCounters,
    trace: PipelineTrace,
}

/// Per-layer work description handed to [`Machine::run_phase`].
struct Work<'a> {
    phase: i64,
    count: usize,
    cycles_per_element: u64,
    macs_per_element: u64,
    aux_per_element: u64,
    compute: &'a dyn Fn(usize) -> i32,
}

impl Machine {
    fn new(cfg: AccelConfig) -> Self {
        Machine {
            cfg,
            cycle: 0,
            fifos: (0..cfg.num_channels).map(|_| FifoModel::new(cfg.fifo_depth)).collect(),
            arbiter: ArbiterState::unlogged(cfg.num_channels),
            counters: PerfCounters::default(),
            trace: PipelineTrace::new(cfg.trace),
        }
    }

    fn overflow(&self, lane: usize) -> Error {
        Error::FifoOverflow {
            unit: format!("fifo{lane}"),
            cycle: self.cycle,
        }
    }

    /// Moves at most one word from a lane FIFO to `sink`, chosen by the arbiter.
    fn drain_one(&mut self, phase: i64, sink: &mut dyn FnMut(&mut Self, usize, i32)) -> bool {
        let mask = self
            .fifos
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_empty())
            .fold(0u64, |m, (k, _)| m | 1 << k);
        let Some(k) = arbiter_grant(&mut self.arbiter, mask) else {
            return false;
        };
        let (index, value) = self.fifos[k].pop().expect("granted lane has data");
        self.trace
            .record(self.cycle, Unit::Arbiter, TraceKind::Grant, &[("lane", k as i64)]);
        self.trace.record(
            self.cycle,
            Unit::Fifo(k as u8),
            TraceKind::Pop,
            &[("layer", phase), ("index", index as i64)],
        );
        sink(self, index, value);
        true
    }

    /// Pushes a finished word, or parks it when the FIFO is full and backpressure is on.
    fn offer(&mut self, lane: &mut Lane, k: usize, phase: i64, word: (usize, i32)) -> Result<bool> {
        match self.fifos[k].push(word) {
            Ok(()) => {
                self.trace.record(
                    self.cycle,
                    Unit::Fifo(k as u8),
                    TraceKind::Push,
                    &[("layer", phase), ("index", word.0 as i64), ("value", word.1 as i64)],
                );
                Ok(true)
            }
            Err(word) if self.cfg.backpressure => {
                lane.pending = Some(word);
                Ok(false)
            }
            Err(_) => Err(self.overflow(k)),
        }
    }

    /// Ingest: the distributor sends one pixel per cycle to FIFO `i % lanes` while the
    /// arbiter moves words onto the canvas.
    fn ingest(&mut self, image: &Tensor<i32>, canvas: &mut Tensor<i32>, border: Border) -> Result<usize> {
        let lanes = self.cfg.num_channels;
        let streams = distribute(image, lanes)?;
        let width = image.shape().width;
        let total = image.len();
        let (mut sent, mut landed) = (0, 0);
        while landed < total {
            let mut stalled = false;
            if sent < total {
                let k = sent % lanes;
                let word = (sent, streams[k][sent / lanes]);
                match self.fifos[k].push(word) {
                    Ok(()) => {
                        self.trace.record(
                            self.cycle,
                            Unit::Distributor,
                            TraceKind::Push,
                            &[("lane", k as i64), ("index", sent as i64), ("value", word.1 as i64)],
                        );
                        sent += 1;
                    }
                    Err(_) if self.cfg.backpressure => {
                        stalled = true;
                        self.trace
                            .record(self.cycle, Unit::Distributor, TraceKind::Stall, &[("lane", k as i64)]);
                    }
                    Err(_) => return Err(self.overflow(k)),
                }
            }
            let mut sink = |_: &mut Self, i: usize, v: i32| {
                canvas[(0, border.top + i / width, border.left + i % width)] = v;
            };
            if self.drain_one(0, &mut sink) {
                landed += 1;
            }
            self.counters.stall_cycles += stalled as u64;
            self.cycle += 1;
        }
        Ok(total)
    }

    /// Runs one layer: lane `k` computes words `k, k + lanes, ...` in turn and the arbiter
    /// retires one finished word per cycle into `sink`.
    fn run_phase(&mut self, work: &Work<'_>, sink: &mut dyn FnMut(&mut Self, usize, i32)) -> Result<()> {
        let n = self.cfg.num_channels;
        let mut lanes: Vec<Lane> = (0..n)
            .map(|k| Lane {
                next: k,
                ..Lane::default()
            })
            .collect();
        let mut retired = 0;
        while retired < work.count {
            let mut stalled = false;
            for (k, lane) in lanes.iter_mut().enumerate() {
                if let Some(word) = lane.pending.take() {
                    if !self.offer(lane, k, work.phase, word)? {
                        stalled = true;
                        self.trace.record(
                            self.cycle,
                            Unit::Lane(k as u8),
                            TraceKind::Stall,
                            &[("layer", work.phase), ("index", word.0 as i64)],
                        );
                        continue;
                    }
                }
                if lane.busy.is_none() && lane.next < work.count {
                    lane.busy = Some((lane.next, work.cycles_per_element));
                    lane.next += n;
                }
                if let Some((j, left)) = lane.busy {
                    if left > 1 {
                        lane.busy = Some((j, left - 1));
                        continue;
                    }
                    lane.busy = None;
                    let value = (work.compute)(j);
                    self.counters.mac_ops += work.macs_per_element;
                    self.counters.aux_ops += work.aux_per_element;
                    self.trace.record(
                        self.cycle,
                        Unit::Lane(k as u8),
                        TraceKind::Mac,
                        &[
                            ("layer", work.phase),
                            ("index", j as i64),
                            ("macs", work.macs_per_element as i64),
                        ],
                    );
                    self.offer(lane, k, work.phase, (j, value))?;
                }
            }
            if self.drain_one(work.phase, sink) {
                retired += 1;
            }
            self.counters.stall_cycles += stalled as u64;
            self.cycle += 1;
        }
        Ok(())
    }
}

fn pool_element(x: &Tensor<i32>, window: usize, stride: usize, (c, y, xx): (usize, usize, usize)) -> i32 {
    let (y0, x0) = (y * stride, xx * stride);
    let mut best = x[(c, y0, x0)];
    for a in 0..window {
        for b in 0..window {
            let v = x[(c, y0 + a, x0 + b)];
            if v > best {
                best = v;
            }
        }
    }
    best
}

fn unravel(shape: Shape, j: usize) -> (usize, usize, usize) {
    let plane = shape.plane();
    (j / plane, j % plane / shape.width, j % shape.width)
}

fn activate(fmt: FixedPointFormat, activation: Activation, raw: i32) -> i32 {
    match activation {
        Activation::Relu => fmt.relu(raw),
        Activation::Sigmoid => fmt.sigmoid(raw),
        Activation::None => raw,
    }
}

/// Streams one image through the modelled accelerator.
///
/// `image` holds words in `cfg.fixed_format` and has the network's input shape; `qparams`
/// must be quantized in the same format. The result equals
/// [`forward_fixed`](crate::model::forward_fixed) exactly. Layers run back to back with a
/// barrier between them. The last layer's words pass through the output controller, which
/// emits only those inside the input-sized crop.
pub fn run_pipeline(
    spec: &NetworkSpec,
    qparams: &Parameters<i32>,
    image: &Tensor<i32>,
    cfg: &AccelConfig,
) -> Result<PipelineRun> {
    cfg.validate()?;
    qparams.check_against(spec)?;
    image.expect_shape("run_pipeline", spec.input_shape())?;
    let border = canvas_border(spec)?;
    let fmt = cfg.fixed_format;
    let mut m = Machine::new(*cfg);
    let mut phase_elements = Vec::with_capacity(spec.layers().len() + 1);

    let mut x = Tensor::<i32>::zeros(spec.internal_shape())?;
    phase_elements.push(m.ingest(image, &mut x, border)?);

    let out_shape = spec.input_shape();
    let mut output = Tensor::<i32>::zeros(out_shape)?;
    let mut banks = qparams.banks().iter();
    let last = spec.layers().len() - 1;
    for (l, layer) in spec.layers().iter().enumerate() {
        let y_shape = layer.output_shape(x.shape())?;
        let mut y = Tensor::<i32>::zeros(y_shape)?;
        let input = &x;
        let conv_state: Option<(&KernelBank<i32>, ConvGeometry)> = match layer.kind {
            LayerKind::Convolution => {
                let bank = banks.next().expect("one bank per convolution");
                let g = ConvGeometry::new(input.shape(), bank.kernel_size(), layer.stride, layer.padding)?;
                Some((bank, g))
            }
            _ => None,
        };
        let compute = |j: usize| -> i32 {
            let at = unravel(y_shape, j);
            match (layer.kind, &conv_state) {
                (LayerKind::Convolution, Some((bank, g))) => {
                    activate(fmt, layer.activation, conv2d_fixed_element(input, bank, g, fmt, at))
                }
                (LayerKind::MaxPool, _) => pool_element(input, layer.window, layer.stride, at),
                (LayerKind::UpSample, _) => {
                    let f = layer.upsample_factor();
                    input[(at.0, at.1 / f, at.2 / f)]
                }
                _ => unreachable!("convolution without a kernel bank"),
            }
        };
        let (macs, aux) = match layer.kind {
            LayerKind::Convolution => {
                let (kh, kw) = conv_state.as_ref().unwrap().0.kernel_size();
                let macs = (kh * kw * layer.in_channels) as u64;
                (macs, (layer.activation != Activation::None) as u64)
            }
            _ => (0, 1),
        };
        let work = Work {
            phase: l as i64 + 1,
            count: y_shape.len(),
            cycles_per_element: macs.div_ceil(cfg.macs_per_channel as u64).max(1),
            macs_per_element: macs,
            aux_per_element: aux,
            compute: &compute,
        };
        if l == last {
            let mut sink = |m: &mut Machine, j: usize, v: i32| {
                let (c, yy, xx) = unravel(y_shape, j);
                let inside = (border.top..border.top + out_shape.height).contains(&yy)
                    && (border.left..border.left + out_shape.width).contains(&xx);
                if inside {
                    let (oy, ox) = (yy - border.top, xx - border.left);
                    output[(c, oy, ox)] = v;
                    m.counters.elements_emitted += 1;
                    let flat = (c * out_shape.height + oy) * out_shape.width + ox;
                    m.trace.record(
                        m.cycle,
                        Unit::Output,
                        TraceKind::Emit,
                        &[("index", flat as i64), ("value", v as i64)],
                    );
                }
            };
            m.run_phase(&work, &mut sink)?;
        } else {
            let mut sink = |_: &mut Machine, j: usize, v: i32| y.as_mut_slice()[j] = v;
            m.run_phase(&work, &mut sink)?;
        }
        phase_elements.push(work.count);
        if l != last {
            x = y;
        }
    }
    m.counters.total_cycles = m.cycle;
    Ok(PipelineRun {
        output,
        counters: m.counters,
        trace: m.trace,
        fifos: m.fifos,
        phase_elements,
    })
}
