use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::tensor::Tensor;
use super::Real;
use crate::error::{shape_err, Error, Result};
use crate::events::{FrameImage, VoxelGrid};
use crate::seed;

/// Negative-side slope of the leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.1;

/// Output channels of the default six-layer network. The middle part is the
/// widest so that most of the arithmetic runs on the provider side.
pub const DEFAULT_WIDTHS: [usize; 6] = [8, 8, 32, 8, 8, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    LeakyRelu,
    Sigmoid,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::LeakyRelu => 0,
            Activation::Sigmoid => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::LeakyRelu),
            1 => Some(Activation::Sigmoid),
            _ => None,
        }
    }

    #[inline]
    fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::LeakyRelu => {
                if x > T::zero() {
                    x
                } else {
                    x * T::from(LEAKY_SLOPE).unwrap()
                }
            }
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
        }
    }

    /// Derivative given the pre-activation and the activation output.
    #[inline]
    fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if pre > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Sigmoid => out * (1.0 - out),
        }
    }
}

/// 3x3 same-padded convolution followed by a pointwise activation.
///
/// The kernel is stored `[c_out][c_in][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

/// Gradients of one layer, laid out like its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerGrad {
    pub fn zeros_like<T>(layer: &ConvLayer<T>) -> Self {
        LayerGrad {
            kernel: vec![0.0; layer.kernel.len()],
            bias: vec![0.0; layer.bias.len()],
        }
    }

    pub fn add_assign(&mut self, other: &LayerGrad) {
        for (a, b) in self.kernel.iter_mut().zip(&other.kernel) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.kernel.iter_mut().chain(self.bias.iter_mut()).for_each(|v| *v *= s);
    }
}

impl<T: Real> ConvLayer<T> {
    pub fn zeros(c_in: usize, c_out: usize, activation: Activation) -> Self {
        ConvLayer {
            c_in,
            c_out,
            kernel: vec![T::zero(); c_out * c_in * 9],
            bias: vec![T::zero(); c_out],
            activation,
        }
    }

    /// Uniform initialization in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn random<R: Rng>(c_in: usize, c_out: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = 1.0 / libm::sqrt((9 * c_in) as f64);
        let mut draw = || T::from(rng.random_range(-bound..=bound)).unwrap();
        let kernel = (0..c_out * c_in * 9).map(|_| draw()).collect();
        let bias = (0..c_out).map(|_| draw()).collect();
        ConvLayer {
            c_in,
            c_out,
            kernel,
            bias,
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.kernel.len() + self.bias.len()
    }

    /// Floating-point operations for one application on an `h x w` input.
    pub fn flops(&self, h: usize, w: usize) -> u64 {
        (h * w * self.c_out * (2 * 9 * self.c_in + 1)) as u64
    }

    pub fn cast<U: Real>(&self) -> ConvLayer<U> {
        ConvLayer {
            c_in: self.c_in,
            c_out: self.c_out,
            kernel: self.kernel.iter().map(|&v| U::from(v).unwrap()).collect(),
            bias: self.bias.iter().map(|&v| U::from(v).unwrap()).collect(),
            activation: self.activation,
        }
    }

    /// Convolution output before the activation.
    pub fn pre_activation(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        if input.channels != self.c_in {
            return Err(shape_err(self.c_in, input.channels));
        }
        let (h, w) = (input.height, input.width);
        let plane = h * w;
        let mut out = Tensor::zeros(self.c_out, h, w);
        for o in 0..self.c_out {
            let dst = &mut out.data[o * plane..(o + 1) * plane];
            dst.iter_mut().for_each(|v| *v = self.bias[o]);
            for i in 0..self.c_in {
                let src = &input.data[i * plane..(i + 1) * plane];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let k = self.kernel[((o * self.c_in + i) * 3 + ky) * 3 + kx];
                        // Output rows/cols whose tap (y + ky - 1, x + kx - 1) is in range.
                        let (y0, y1) = (if ky == 0 { 1 } else { 0 }, if ky == 2 { h.saturating_sub(1) } else { h });
                        let (x0, x1) = (if kx == 0 { 1 } else { 0 }, if kx == 2 { w.saturating_sub(1) } else { w });
                        for y in y0..y1 {
                            let sy = y + ky - 1;
                            let drow = &mut dst[y * w..(y + 1) * w];
                            let srow = &src[sy * w..(sy + 1) * w];
                            for x in x0..x1 {
                                drow[x] = drow[x] + k * srow[x + kx - 1];
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let mut out = self.pre_activation(input)?;
        out.data.iter_mut().for_each(|v| *v = self.activation.apply(*v));
        Ok(out)
    }
}

impl ConvLayer<f64> {
    /// Backpropagates `d_out` (gradient w.r.t. this layer's output).
    /// Returns the parameter gradients and the gradient w.r.t. the input.
    fn backward(&self, input: &Tensor<f64>, pre: &Tensor<f64>, out: &Tensor<f64>, d_out: &[f64]) -> (LayerGrad, Tensor<f64>) {
        let (h, w) = (input.height, input.width);
        let plane = h * w;
        let d_pre: Vec<f64> = (0..d_out.len())
            .map(|j| d_out[j] * self.activation.derivative(pre.data[j], out.data[j]))
            .collect();
        let mut grad = LayerGrad::zeros_like(self);
        let mut d_in = Tensor::zeros(self.c_in, h, w);
        for o in 0..self.c_out {
            let g = &d_pre[o * plane..(o + 1) * plane];
            grad.bias[o] = g.iter().sum();
            for i in 0..self.c_in {
                let src = &input.data[i * plane..(i + 1) * plane];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let kidx = ((o * self.c_in + i) * 3 + ky) * 3 + kx;
                        let k = self.kernel[kidx];
                        let (y0, y1) = (if ky == 0 { 1 } else { 0 }, if ky == 2 { h.saturating_sub(1) } else { h });
                        let (x0, x1) = (if kx == 0 { 1 } else { 0 }, if kx == 2 { w.saturating_sub(1) } else { w });
                        let mut acc = 0.0;
                        let din = &mut d_in.data[i * plane..(i + 1) * plane];
                        for y in y0..y1 {
                            let sy = y + ky - 1;
                            for x in x0..x1 {
                                let gv = g[y * w + x];
                                let sx = x + kx - 1;
                                acc += gv * src[sy * w + sx];
                                din[sy * w + sx] += k * gv;
                            }
                        }
                        grad.kernel[kidx] = acc;
                    }
                }
            }
        }
        (grad, d_in)
    }
}

/// Evaluates a sequence of layers.
pub fn run_layers<T: Real>(layers: &[ConvLayer<T>], input: &Tensor<T>) -> Result<Tensor<T>> {
    let mut x = input.clone();
    for layer in layers {
        x = layer.forward(&x)?;
    }
    Ok(x)
}

/// Which of the three consecutive parts of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// Runs on the client, first.
    Frontal,
    /// Runs on the service provider.
    Middle,
    /// Runs on the client, last.
    Rear,
}

/// A feed-forward convolutional network split into frontal, middle and rear
/// parts at `split.0` and `split.1` (layer indices).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvNet<T> {
    layers: Vec<ConvLayer<T>>,
    split: (usize, usize),
}

impl<T: Real> ConvNet<T> {
    pub fn new(layers: Vec<ConvLayer<T>>, split: (usize, usize)) -> Result<Self> {
        let n = layers.len();
        if !(0 < split.0 && split.0 < split.1 && split.1 < n) {
            return Err(Error::InvalidArgument(format!(
                "split points {split:?} must be strictly increasing and interior to {n} layers"
            )));
        }
        for pair in layers.windows(2) {
            if pair[0].c_out != pair[1].c_in {
                return Err(shape_err(pair[0].c_out, pair[1].c_in));
            }
        }
        let last = &layers[n - 1];
        if last.c_out != 1 || last.activation != Activation::Sigmoid {
            return Err(Error::InvalidArgument("last layer must be a single-channel sigmoid".into()));
        }
        for l in &layers {
            if l.kernel.len() != l.c_out * l.c_in * 9 || l.bias.len() != l.c_out {
                return Err(Error::InvalidArgument("layer parameter sizes disagree with channels".into()));
            }
        }
        Ok(ConvNet { layers, split })
    }

    /// Randomly initialized network; leaky ReLU everywhere except a sigmoid head.
    pub fn random(in_channels: usize, widths: &[usize], split: (usize, usize), seed: u64) -> Result<Self> {
        let mut rng = seed::rng(seed);
        let mut c_in = in_channels;
        let mut layers = Vec::with_capacity(widths.len());
        for (k, &c_out) in widths.iter().enumerate() {
            let act = if k + 1 == widths.len() { Activation::Sigmoid } else { Activation::LeakyRelu };
            layers.push(ConvLayer::random(c_in, c_out, act, &mut rng));
            c_in = c_out;
        }
        ConvNet::new(layers, split)
    }

    /// The default six-layer network split after layer 2 and before layer 5.
    pub fn default_random(in_channels: usize, seed: u64) -> Self {
        Self::random(in_channels, &DEFAULT_WIDTHS, (2, 4), seed).expect("default architecture is valid")
    }

    pub fn layers(&self) -> &[ConvLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [ConvLayer<T>] {
        &mut self.layers
    }

    pub fn split(&self) -> (usize, usize) {
        self.split
    }

    pub fn in_channels(&self) -> usize {
        self.layers[0].c_in
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(ConvLayer::param_count).sum()
    }

    pub fn part_range(&self, part: Part) -> core::ops::Range<usize> {
        match part {
            Part::Frontal => 0..self.split.0,
            Part::Middle => self.split.0..self.split.1,
            Part::Rear => self.split.1..self.layers.len(),
        }
    }

    pub fn part(&self, part: Part) -> &[ConvLayer<T>] {
        &self.layers[self.part_range(part)]
    }

    pub fn cast<U: Real>(&self) -> ConvNet<U> {
        ConvNet {
            layers: self.layers.iter().map(ConvLayer::cast).collect(),
            split: self.split,
        }
    }

    pub fn forward_tensor(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        run_layers(&self.layers, input)
    }

    /// Reconstructs an image from a voxel grid.
    pub fn forward(&self, grid: &VoxelGrid) -> Result<FrameImage> {
        self.forward_tensor(&Tensor::from_voxel(grid))?.to_image()
    }

    /// Evaluates one of the three parts on an activation.
    pub fn forward_split(&self, part: Part, activation: &Tensor<T>) -> Result<Tensor<T>> {
        run_layers(self.part(part), activation)
    }

    /// Floating-point operations per part `(frontal, middle, rear)` at `h x w`.
    pub fn part_flops(&self, h: usize, w: usize) -> (u64, u64, u64) {
        let sum = |p| self.part(p).iter().map(|l| l.flops(h, w)).sum::<u64>();
        (sum(Part::Frontal), sum(Part::Middle), sum(Part::Rear))
    }
}

impl ConvNet<f64> {
    /// All parameters, layer by layer, kernel before bias.
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.kernel.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for l in &mut self.layers {
            for v in l.kernel.iter_mut().chain(l.bias.iter_mut()) {
                *v = *it.next().expect("flat parameter vector too short");
            }
        }
    }
}

/// Cached activations of a chain of layers for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    inputs: Vec<Tensor<f64>>,
    pre: Vec<Tensor<f64>>,
    output: Tensor<f64>,
}

impl Trace {
    pub fn run(layers: &[&ConvLayer<f64>], input: &Tensor<f64>) -> Result<Self> {
        let mut inputs = Vec::with_capacity(layers.len());
        let mut pre = Vec::with_capacity(layers.len());
        let mut x = input.clone();
        for layer in layers {
            let p = layer.pre_activation(&x)?;
            let mut y = p.clone();
            y.data.iter_mut().for_each(|v| *v = layer.activation.apply(*v));
            inputs.push(x);
            pre.push(p);
            x = y;
        }
        Ok(Trace { inputs, pre, output: x })
    }

    pub fn output(&self) -> &Tensor<f64> {
        &self.output
    }

    /// Gradients for every layer in the chain and w.r.t. the chain input.
    pub fn backward(&self, layers: &[&ConvLayer<f64>], d_output: &[f64]) -> (Vec<LayerGrad>, Tensor<f64>) {
        let n = layers.len();
        let mut grads = Vec::with_capacity(n);
        let mut d = d_output.to_vec();
        let mut d_in = None;
        for k in (0..n).rev() {
            let out = if k + 1 == n { &self.output } else { &self.inputs[k + 1] };
            let (g, di) = layers[k].backward(&self.inputs[k], &self.pre[k], out, &d);
            grads.push(g);
            d = di.data.clone();
            d_in = Some(di);
        }
        grads.reverse();
        let d_in = d_in.unwrap_or_else(|| Tensor {
            channels: self.output.channels,
            height: self.output.height,
            width: self.output.width,
            data: d_output.to_vec(),
        });
        (grads, d_in)
    }
}
