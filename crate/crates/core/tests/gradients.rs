//! Hand-derived adjoints against central finite differences.

use cae_core::model::{backward, build_network, forward, init_parameters, loss_mse, NetworkSpec, Parameters};
use cae_core::ops::{
    conv2d, conv2d_backward, maxpool2d, maxpool2d_backward, relu, relu_backward, sigmoid, sigmoid_backward,
    upsample_backward, upsample_nearest, KernelBank, Padding,
};
use cae_core::rng;
use cae_core::{Shape, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;

const H: f64 = 1e-4;

/// |a - n| / max(|a|, |n|, floor): relative error with an absolute floor so that entries whose
/// true gradient is ~0 are judged by absolute error instead of amplified round-off.
fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn random_tensor(shape: Shape, rng: &mut impl Rng) -> Tensor {
    Tensor::from_fn(shape, |_, _, _| rng.random_range(-1.0..1.0)).unwrap()
}

fn random_bank(dims: [usize; 4], rng: &mut impl Rng) -> KernelBank {
    let n = dims.iter().product();
    KernelBank::new(
        dims,
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        (0..dims[0]).map(|_| rng.random_range(-0.5..0.5)).collect(),
    )
    .unwrap()
}

/// Scalar objective <weights, f(x)> whose gradient with respect to f(x) is `weights`.
fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

#[test]
fn conv_backward_matches_finite_differences() {
    let mut rng = rng::seeded(11);
    for (stride, padding) in [(1, Padding::Valid), (1, Padding::Same), (2, Padding::Same)] {
        let x = random_tensor(Shape::new(1, 5, 5), &mut rng);
        let k = random_bank([2, 1, 3, 3], &mut rng);
        let y = conv2d(&x, &k, stride, padding).unwrap();
        let probe = random_tensor(y.shape(), &mut rng);
        let g = conv2d_backward(&x, &k, stride, padding, &probe).unwrap();

        let objective = |x: &Tensor, k: &KernelBank| dot(&probe, &conv2d(x, k, stride, padding).unwrap());
        for i in 0..x.len() {
            let (mut p, mut m) = (x.clone(), x.clone());
            p.as_mut_slice()[i] += H;
            m.as_mut_slice()[i] -= H;
            let num = (objective(&p, &k) - objective(&m, &k)) / (2.0 * H);
            assert!(rel_err(g.input.as_slice()[i], num, 1e-6) < 1e-3, "input {i}");
        }
        for i in 0..k.weights().len() {
            let (mut p, mut m) = (k.clone(), k.clone());
            p.weights_mut()[i] += H;
            m.weights_mut()[i] -= H;
            let num = (objective(&x, &p) - objective(&x, &m)) / (2.0 * H);
            assert!(rel_err(g.kernels.weights()[i], num, 1e-6) < 1e-3, "weight {i}");
        }
        for i in 0..k.bias().len() {
            let (mut p, mut m) = (k.clone(), k.clone());
            p.bias_mut()[i] += H;
            m.bias_mut()[i] -= H;
            let num = (objective(&x, &p) - objective(&x, &m)) / (2.0 * H);
            assert!(rel_err(g.kernels.bias()[i], num, 1e-6) < 1e-3, "bias {i}");
        }
    }
}

#[test]
fn one_by_one_kernel_gradient_is_input_dot_grad() {
    let mut rng = rng::seeded(5);
    let x = random_tensor(Shape::new(1, 4, 4), &mut rng);
    let k = KernelBank::new([1, 1, 1, 1], vec![0.7], vec![0.0]).unwrap();
    let go = random_tensor(Shape::new(1, 4, 4), &mut rng);
    let g = conv2d_backward(&x, &k, 1, Padding::Valid, &go).unwrap();
    assert!((g.kernels.weights()[0] - dot(&x, &go)).abs() < 1e-12);
}

#[test]
fn elementwise_and_pooling_adjoints() {
    let mut rng = rng::seeded(9);
    // distinct values spaced far beyond H so no perturbation changes a window's winner
    let shape = Shape::new(2, 6, 6);
    let mut levels: Vec<f64> = (0..shape.len())
        .map(|i| (i as f64 + 0.5) / shape.len() as f64 - 0.5)
        .collect();
    levels.shuffle(&mut rng);
    let x = Tensor::from_vec(shape, levels).unwrap();

    type Forward = Box<dyn Fn(&Tensor) -> Tensor>;
    type Adjoint = Box<dyn Fn(&Tensor, &Tensor) -> Tensor>;
    let checks: Vec<(&str, Forward, Adjoint)> = vec![
        ("relu", Box::new(relu), Box::new(|x, g| relu_backward(x, g).unwrap())),
        (
            "sigmoid",
            Box::new(sigmoid),
            Box::new(|x, g| sigmoid_backward(&sigmoid(x), g).unwrap()),
        ),
        (
            "maxpool",
            Box::new(|x| maxpool2d(x, 2, 2).unwrap().0),
            Box::new(|x, g| {
                let (_, map) = maxpool2d(x, 2, 2).unwrap();
                maxpool2d_backward(&map, g, x.shape()).unwrap()
            }),
        ),
        (
            "maxpool-overlap",
            Box::new(|x| maxpool2d(x, 3, 1).unwrap().0),
            Box::new(|x, g| {
                let (_, map) = maxpool2d(x, 3, 1).unwrap();
                maxpool2d_backward(&map, g, x.shape()).unwrap()
            }),
        ),
        (
            "upsample",
            Box::new(|x| upsample_nearest(x, 2).unwrap()),
            Box::new(|_, g| upsample_backward(2, g).unwrap()),
        ),
    ];

    for (name, f, adjoint) in checks {
        let probe = random_tensor(f(&x).shape(), &mut rng);
        let analytic = adjoint(&x, &probe);
        for i in 0..x.len() {
            let (mut p, mut m) = (x.clone(), x.clone());
            p.as_mut_slice()[i] += H;
            m.as_mut_slice()[i] -= H;
            let num = (dot(&probe, &f(&p)) - dot(&probe, &f(&m))) / (2.0 * H);
            let err = rel_err(analytic.as_slice()[i], num, 1e-6);
            assert!(err < 1e-3, "{name} entry {i}: {} vs {num}", analytic.as_slice()[i]);
        }
    }
}

#[test]
fn maxpool_backward_conserves_mass() {
    let mut rng = rng::seeded(3);
    let x = random_tensor(Shape::new(3, 8, 8), &mut rng);
    let (y, map) = maxpool2d(&x, 2, 2).unwrap();
    let g = random_tensor(y.shape(), &mut rng);
    let back = maxpool2d_backward(&map, &g, x.shape()).unwrap();
    assert!((back.sum() - g.sum()).abs() < 1e-12);
}

fn network_loss(spec: &NetworkSpec, params: &Parameters, x: &Tensor, t: &Tensor) -> f64 {
    loss_mse(&forward(spec, params, x).unwrap().0, t).unwrap()
}

/// Largest relative error over every parameter of the reduced 8x8 network.
pub fn network_gradient_error(seed: u64) -> f64 {
    let s = Shape::new(1, 8, 8);
    let spec = build_network(&[3, 2, 2, 2, 2, 3, 1], s, s).unwrap();
    let mut rng = rng::seeded(seed);
    let mut params = init_parameters(&spec, seed);
    // non-zero biases keep more units active
    for b in params.banks_mut() {
        for v in b.bias_mut() {
            *v = rng.random_range(0.0..0.2);
        }
    }
    let x = Tensor::from_fn(s, |_, _, _| rng.random_range(0.0..1.0)).unwrap();
    let t = Tensor::from_fn(s, |_, _, _| rng.random_range(0.0..1.0)).unwrap();
    let (_, cache) = forward(&spec, &params, &x).unwrap();
    let analytic = backward(&spec, &params, &cache, &t).unwrap();

    let mut worst: f64 = 0.0;
    for bank in 0..params.banks().len() {
        let nw = params.banks()[bank].weights().len();
        let nb = params.banks()[bank].bias().len();
        for i in 0..nw + nb {
            let bump = |p: &mut Parameters, d: f64| {
                let b = &mut p.banks_mut()[bank];
                if i < nw {
                    b.weights_mut()[i] += d
                } else {
                    b.bias_mut()[i - nw] += d
                }
            };
            let (mut p, mut m) = (params.clone(), params.clone());
            bump(&mut p, H);
            bump(&mut m, -H);
            let num = (network_loss(&spec, &p, &x, &t) - network_loss(&spec, &m, &x, &t)) / (2.0 * H);
            let a = if i < nw {
                analytic.banks()[bank].weights()[i]
            } else {
                analytic.banks()[bank].bias()[i - nw]
            };
            worst = worst.max(rel_err(a, num, 1e-6));
        }
    }
    worst
}

#[test]
fn full_network_matches_finite_differences() {
    for seed in 1..=5 {
        let err = network_gradient_error(seed);
        assert!(err < 1e-3, "seed {seed}: max relative error {err}");
    }
}
