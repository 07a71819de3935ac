use alloc::vec::Vec;

use crate::ops::{pooled_shape, Padding};
use crate::tensor::Shape;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Convolution,
    MaxPool,
    UpSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    None,
}

/// One row of the layer table.
///
/// For `UpSample` the replication factor is `stride`; `window` records the table's window
/// column and is not otherwise used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub window: usize,
    pub stride: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub padding: Padding,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn conv(in_channels: usize, out_channels: usize, window: usize, activation: Activation) -> Self {
        LayerSpec {
            kind: LayerKind::Convolution,
            window,
            stride: 1,
            in_channels,
            out_channels,
            padding: Padding::Same,
            activation,
        }
    }

    pub fn max_pool(channels: usize, window: usize, stride: usize) -> Self {
        LayerSpec {
            kind: LayerKind::MaxPool,
            window,
            stride,
            in_channels: channels,
            out_channels: channels,
            padding: Padding::Valid,
            activation: Activation::None,
        }
    }

    pub fn up_sample(channels: usize, factor: usize) -> Self {
        LayerSpec {
            kind: LayerKind::UpSample,
            window: factor,
            stride: factor,
            in_channels: channels,
            out_channels: channels,
            padding: Padding::Valid,
            activation: Activation::None,
        }
    }

    pub fn upsample_factor(&self) -> usize {
        self.stride
    }

    /// Output shape for a given input, or an error if the layer cannot consume it.
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.channels != self.in_channels {
            return Err(Error::ShapeMismatch {
                op: "layer",
                expected: Shape::new(self.in_channels, input.height, input.width),
                actual: input,
            });
        }
        match self.kind {
            LayerKind::Convolution => {
                let g = crate::ops::ConvGeometry::new(input, (self.window, self.window), self.stride, self.padding)?;
                Ok(Shape::new(self.out_channels, g.out_h, g.out_w))
            }
            LayerKind::MaxPool => pooled_shape(input, self.window, self.stride),
            LayerKind::UpSample => Ok(Shape::new(
                input.channels,
                input.height * self.stride,
                input.width * self.stride,
            )),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 || self.stride == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::InvalidArgument(alloc::format!(
                "layer {self:?}: window, stride and channel counts must be >= 1"
            )));
        }
        if self.kind != LayerKind::Convolution && self.in_channels != self.out_channels {
            return Err(Error::InvalidArgument(alloc::format!(
                "{:?} layers pass channels through ({} != {})",
                self.kind,
                self.in_channels,
                self.out_channels
            )));
        }
        Ok(())
    }
}

/// Kinds of the 13 layers, in order.
pub const TABLE1_KINDS: [LayerKind; 13] = {
    use LayerKind::*;
    [
        Convolution,
        MaxPool,
        Convolution,
        MaxPool,
        Convolution,
        MaxPool,
        Convolution,
        UpSample,
        Convolution,
        UpSample,
        Convolution,
        UpSample,
        Convolution,
    ]
};

/// Output channels of the seven convolutions in the default network.
pub const DEFAULT_PROFILE: [usize; 7] = [16, 8, 8, 8, 8, 16, 1];
/// A wider profile whose operation count per 32x32 frame is about 65 MOp.
pub const CALIBRATION_PROFILE: [usize; 7] = [64, 48, 48, 48, 48, 64, 1];

pub const CONV_WINDOW: usize = 4;
pub const MNIST_SHAPE: Shape = Shape::new(1, 28, 28);
pub const CANVAS_SHAPE: Shape = Shape::new(1, 32, 32);

/// Ordered layer list together with the external input shape and the internal canvas the
/// input is zero-padded to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    layers: Vec<LayerSpec>,
    input_shape: Shape,
    internal_shape: Shape,
}

impl NetworkSpec {
    /// Checks channel chaining and that the canvas can hold the input; it does not require
    /// the stack to map the canvas back onto itself (see [`NetworkSpec::is_shape_preserving`]).
    pub fn new(layers: Vec<LayerSpec>, input_shape: Shape, internal_shape: Shape) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        if !input_shape.is_valid() || !internal_shape.is_valid() {
            return Err(Error::EmptyShape(if input_shape.is_valid() {
                internal_shape
            } else {
                input_shape
            }));
        }
        if input_shape.channels != internal_shape.channels
            || input_shape.height > internal_shape.height
            || input_shape.width > internal_shape.width
        {
            return Err(Error::InvalidArgument(alloc::format!(
                "input {input_shape} does not fit on canvas {internal_shape}"
            )));
        }
        let mut channels = internal_shape.channels;
        for l in &layers {
            l.validate()?;
            if l.in_channels != channels {
                return Err(Error::InvalidArgument(alloc::format!(
                    "layer expects {} input channels but receives {channels}",
                    l.in_channels
                )));
            }
            channels = l.out_channels;
        }
        let spec = NetworkSpec {
            layers,
            input_shape,
            internal_shape,
        };
        spec.shape_chain()?;
        Ok(spec)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn internal_shape(&self) -> Shape {
        self.internal_shape
    }

    /// Shapes at every layer boundary, starting with the canvas.
    pub fn shape_chain(&self) -> Result<Vec<Shape>> {
        let mut shapes = Vec::with_capacity(self.layers.len() + 1);
        let mut s = self.internal_shape;
        shapes.push(s);
        for l in &self.layers {
            s = l.output_shape(s)?;
            shapes.push(s);
        }
        Ok(shapes)
    }

    pub fn output_canvas_shape(&self) -> Shape {
        *self.shape_chain().expect("validated at construction").last().unwrap()
    }

    /// True when the stack maps the canvas onto itself, which `forward` requires.
    pub fn is_shape_preserving(&self) -> bool {
        self.output_canvas_shape() == self.internal_shape
    }

    /// Indices of convolution layers, in declaration order.
    pub fn conv_layers(&self) -> impl Iterator<Item = (usize, &LayerSpec)> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind == LayerKind::Convolution)
    }

    pub fn kernel_dims(&self) -> Vec<[usize; 4]> {
        self.conv_layers()
            .map(|(_, l)| [l.out_channels, l.in_channels, l.window, l.window])
            .collect()
    }

    /// Position in [`NetworkSpec::shape_chain`] of the bottleneck, the smallest boundary tensor.
    pub fn bottleneck_boundary(&self) -> usize {
        let chain = self.shape_chain().expect("validated at construction");
        let mut best = 0;
        for (i, s) in chain.iter().enumerate() {
            if s.len() < chain[best].len() {
                best = i;
            }
        }
        best
    }
}

fn check_profile(profile: &[usize]) -> Result<()> {
    if profile.len() != 7 {
        return Err(Error::InvalidArgument(alloc::format!(
            "channel profile needs 7 entries, got {}",
            profile.len()
        )));
    }
    if profile[6] != 1 {
        return Err(Error::InvalidArgument(alloc::format!(
            "last convolution must produce 1 channel, got {}",
            profile[6]
        )));
    }
    if profile.contains(&0) {
        return Err(Error::InvalidArgument("channel counts must be >= 1".into()));
    }
    Ok(())
}

/// The 13-layer stack on an arbitrary canvas: window-4 stride-1 same-padded convolutions,
/// 2x2/2 max-pooling and 2x nearest up-sampling; ReLU everywhere except the final sigmoid.
pub fn build_network(profile: &[usize], input_shape: Shape, internal_shape: Shape) -> Result<NetworkSpec> {
    check_profile(profile)?;
    let mut layers = Vec::with_capacity(13);
    let mut channels = internal_shape.channels;
    let mut convs = profile.iter();
    for kind in TABLE1_KINDS {
        let layer = match kind {
            LayerKind::Convolution => {
                let out = *convs.next().expect("7 convolutions");
                let act = if convs.len() == 0 {
                    Activation::Sigmoid
                } else {
                    Activation::Relu
                };
                LayerSpec::conv(channels, out, CONV_WINDOW, act)
            }
            LayerKind::MaxPool => LayerSpec::max_pool(channels, 2, 2),
            LayerKind::UpSample => LayerSpec::up_sample(channels, 2),
        };
        channels = layer.out_channels;
        layers.push(layer);
    }
    let spec = NetworkSpec::new(layers, input_shape, internal_shape)?;
    if !spec.is_shape_preserving() {
        return Err(Error::InvalidArgument(alloc::format!(
            "canvas {internal_shape} is not restored by three 2x pool/up-sample stages"
        )));
    }
    Ok(spec)
}

/// Default network: 28x28 input on a 32x32 canvas.
pub fn build_table1_network(profile: &[usize]) -> Result<NetworkSpec> {
    build_network(profile, MNIST_SHAPE, CANVAS_SHAPE)
}

/// The layer table read literally: pooling with window 4 and stride 1 (valid), up-sampling
/// with stride 1. Forward-only: the canvas shrinks 32 -> 29 -> 26 -> 23 and is never restored,
/// so the result is not shape preserving.
pub fn build_strict_table1_network(profile: &[usize]) -> Result<NetworkSpec> {
    check_profile(profile)?;
    let mut layers = Vec::with_capacity(13);
    let mut channels = 1;
    let mut convs = profile.iter();
    for kind in TABLE1_KINDS {
        let layer = match kind {
            LayerKind::Convolution => {
                let out = *convs.next().expect("7 convolutions");
                let act = if convs.len() == 0 {
                    Activation::Sigmoid
                } else {
                    Activation::Relu
                };
                LayerSpec::conv(channels, out, CONV_WINDOW, act)
            }
            LayerKind::MaxPool => LayerSpec::max_pool(channels, 4, 1),
            LayerKind::UpSample => LayerSpec {
                window: 4,
                ..LayerSpec::up_sample(channels, 1)
            },
        };
        channels = layer.out_channels;
        layers.push(layer);
    }
    NetworkSpec::new(layers, MNIST_SHAPE, CANVAS_SHAPE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_table_structure() {
        let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
        assert_eq!(spec.layers().len(), 13);
        let kinds: Vec<_> = spec.layers().iter().map(|l| l.kind).collect();
        assert_eq!(kinds, TABLE1_KINDS);
        for i in [1, 3, 5] {
            assert_eq!(spec.layers()[i].kind, LayerKind::MaxPool);
        }
        for i in [7, 9, 11] {
            assert_eq!(spec.layers()[i].kind, LayerKind::UpSample);
        }
        for (_, l) in spec.conv_layers() {
            assert_eq!((l.window, l.stride), (4, 1));
        }
        assert_eq!(spec.layers()[12].activation, Activation::Sigmoid);
        assert_eq!(spec.layers()[10].activation, Activation::Relu);
    }

    #[test]
    fn shape_chain_round_trips() {
        let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
        let sides: Vec<_> = spec.shape_chain().unwrap().iter().map(|s| s.height).collect();
        assert_eq!(sides, [32, 32, 16, 16, 8, 8, 4, 4, 8, 8, 16, 16, 32, 32]);
        assert!(spec.is_shape_preserving());
        assert_eq!(spec.shape_chain().unwrap()[6], Shape::new(8, 4, 4));
        assert_eq!(spec.bottleneck_boundary(), 6);
    }

    #[test]
    fn profile_errors() {
        assert!(build_table1_network(&[16, 8, 8, 8, 8, 16]).is_err());
        assert!(build_table1_network(&[16, 8, 8, 8, 8, 16, 2]).is_err());
        assert!(build_network(&DEFAULT_PROFILE, MNIST_SHAPE, Shape::new(1, 30, 30)).is_err());
    }

    #[test]
    fn strict_variant_is_not_invertible() {
        let spec = build_strict_table1_network(&DEFAULT_PROFILE).unwrap();
        assert_eq!(spec.layers().len(), 13);
        assert!(!spec.is_shape_preserving());
        assert_eq!(spec.output_canvas_shape(), Shape::new(1, 23, 23));
    }

    #[test]
    fn reduced_canvas() {
        let s = Shape::new(1, 8, 8);
        let spec = build_network(&[2, 2, 2, 2, 2, 2, 1], s, s).unwrap();
        assert_eq!(spec.shape_chain().unwrap()[6], Shape::new(2, 1, 1));
    }
}
