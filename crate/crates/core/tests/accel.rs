use cae_core::accel::{count_ops, perf_report, run_pipeline, AccelConfig, TraceKind};
use cae_core::fixed::{quantize, FixedPointFormat};
use cae_core::model::{
    build_network, build_table1_network, forward_fixed, init_parameters, NetworkSpec, DEFAULT_PROFILE,
};
use cae_core::rng;
use cae_core::{Shape, Tensor};
use rand::Rng;

const Q: FixedPointFormat = FixedPointFormat::Q16_8;

fn reduced(input: usize) -> NetworkSpec {
    build_network(&[2, 3, 2, 2, 3, 2, 1], Shape::new(1, input, input), Shape::new(1, 8, 8)).unwrap()
}

fn image(shape: Shape, seed: u64) -> Tensor<i32> {
    let mut r = rng::seeded(seed);
    quantize(&Tensor::from_fn(shape, |_, _, _| r.random_range(0.0..1.0)).unwrap(), Q)
}

#[test]
fn every_tiny_image_matches_reference() {
    let spec = reduced(2);
    let q = init_parameters(&spec, 4).quantize(Q);
    let levels = [0, 128, 256];
    for code in 0..81 {
        let px: Vec<i32> = (0..4).map(|i| levels[code / 3usize.pow(i) % 3]).collect();
        let img = Tensor::from_vec(spec.input_shape(), px).unwrap();
        let run = run_pipeline(&spec, &q, &img, &AccelConfig::default()).unwrap();
        assert_eq!(run.output, forward_fixed(&spec, &q, &img, Q).unwrap(), "image {code}");
    }
}

#[test]
fn full_size_images_match_reference() {
    let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
    let q = init_parameters(&spec, 9).quantize(Q);
    for seed in 0..5 {
        let img = image(spec.input_shape(), seed);
        let run = run_pipeline(&spec, &q, &img, &AccelConfig::default()).unwrap();
        assert_eq!(run.output, forward_fixed(&spec, &q, &img, Q).unwrap());
        assert_eq!(run.counters.elements_emitted, 784);
        assert_eq!(run.counters.total_ops(), count_ops(&spec).unwrap());
    }
}

#[test]
fn elements_are_conserved_across_boundaries() {
    let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
    let q = init_parameters(&spec, 1).quantize(Q);
    let run = run_pipeline(&spec, &q, &image(spec.input_shape(), 1), &AccelConfig::default()).unwrap();
    let chain = spec.shape_chain().unwrap();
    assert_eq!(run.phase_elements[0], 784);
    for (got, shape) in run.phase_elements[1..].iter().zip(&chain[1..]) {
        assert_eq!(*got, shape.len());
    }
    for f in &run.fifos {
        assert_eq!(f.pushes() - f.pops(), f.occupancy() as u64);
        assert_eq!(f.occupancy(), 0);
        assert!(f.high_water() <= f.depth());
    }
    let pops: u64 = run.fifos.iter().map(|f| f.pops()).sum();
    assert_eq!(pops as usize, run.phase_elements.iter().sum::<usize>());
}

#[test]
fn more_macs_per_lane_never_costs_cycles() {
    for spec in [reduced(6), build_table1_network(&DEFAULT_PROFILE).unwrap()] {
        let q = init_parameters(&spec, 2).quantize(Q);
        let img = image(spec.input_shape(), 2);
        let mut last = u64::MAX;
        for macs in [1, 2, 3, 4, 8, 16, 32, 64, 256] {
            let cfg = AccelConfig {
                macs_per_channel: macs,
                ..AccelConfig::default()
            };
            let c = run_pipeline(&spec, &q, &img, &cfg).unwrap().counters;
            assert!(c.total_cycles <= last, "macs {macs}: {} > {last}", c.total_cycles);
            last = c.total_cycles;
        }
    }
}

#[test]
fn deeper_fifos_never_stall_more() {
    let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
    let q = init_parameters(&spec, 3).quantize(Q);
    let img = image(spec.input_shape(), 3);
    let mut last = u64::MAX;
    for depth in [1, 2, 4, 16, 64, 256, 512, 4096] {
        let cfg = AccelConfig {
            fifo_depth: depth,
            ..AccelConfig::default()
        };
        let run = run_pipeline(&spec, &q, &img, &cfg).unwrap();
        let c = run.counters;
        assert!(c.stall_cycles <= last, "depth {depth}");
        assert!(c.stall_cycles <= c.total_cycles);
        assert_eq!(run.output, forward_fixed(&spec, &q, &img, Q).unwrap());
        last = c.stall_cycles;
    }
}

#[test]
fn reruns_produce_identical_traces() {
    let spec = reduced(6);
    let q = init_parameters(&spec, 5).quantize(Q);
    let img = image(spec.input_shape(), 5);
    let cfg = AccelConfig {
        trace: true,
        fifo_depth: 2,
        ..AccelConfig::default()
    };
    let a = run_pipeline(&spec, &q, &img, &cfg).unwrap();
    let b = run_pipeline(&spec, &q, &img, &cfg).unwrap();
    assert_eq!(a.trace.to_string(), b.trace.to_string());
    assert_eq!(a.counters, b.counters);
    assert_eq!(
        perf_report(&a.counters, &cfg).unwrap(),
        perf_report(&b.counters, &cfg).unwrap()
    );
    assert_eq!(a.trace.count(TraceKind::Emit), 36);
    assert!(a.trace.count(TraceKind::Stall) > 0);
    let text = a.trace.to_string();
    let first = text.lines().next().unwrap();
    assert!(
        first.starts_with("cycle=0 unit=distributor event=push detail=lane=0,index=0,value="),
        "{first}"
    );
    // cycles never go backwards
    let cycles: Vec<u64> = a.trace.events().iter().map(|e| e.cycle).collect();
    assert!(cycles.windows(2).all(|w| w[0] <= w[1]));
}
