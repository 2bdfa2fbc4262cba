use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::loss::{sobel_sharpness_grad, ImageDistance, MeanAbsolute};
use super::net::{ConvLayer, ConvNet, Part, Trace};
use super::tensor::Tensor;
use super::watermark::{infuse, NoiseWatermark};
use crate::error::{Error, Result};
use crate::events::VoxelGrid;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Multiplier on the adversarial sharpness terms.
    pub adv_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 2,
            epochs: 10,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            adv_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "learning rate must be positive and batch size at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(cfg: &TrainConfig, n: usize) -> Self {
        Adam {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.epsilon,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(self.step));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(self.step));
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
    }
}

/// Settings of the private objective `d(F(E), F'(E~)) + w * adv`.
#[derive(Debug, Clone, Copy)]
pub struct PrivateObjective<'a> {
    /// The frozen original network.
    pub original: &'a ConvNet<f64>,
    pub adv_weight: f64,
}

/// What a training run minimizes, per sample, given the sample's input and
/// target image.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Reconstruction loss only.
    Supervised,
    /// Reconstruction loss plus the sharpness of the two swapped compositions
    /// `F3 . F2 . F1'` and `F3 . F2' . F1'` of the original network.
    Private(PrivateObjective<'a>),
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: ConvNet<f64>,
    /// Mean dataset loss before training (index 0) and after every epoch.
    pub loss_trace: Vec<f64>,
}

fn layer_refs(layers: &[ConvLayer<f64>]) -> Vec<&ConvLayer<f64>> {
    layers.iter().collect()
}

fn offsets(net: &ConvNet<f64>) -> Vec<usize> {
    let mut out = Vec::with_capacity(net.depth() + 1);
    let mut acc = 0;
    out.push(0);
    for l in net.layers() {
        acc += l.param_count();
        out.push(acc);
    }
    out
}

fn scatter(flat: &mut [f64], offsets: &[usize], layer: usize, grad: &super::net::LayerGrad) {
    let base = offsets[layer];
    let nk = grad.kernel.len();
    for (i, g) in grad.kernel.iter().enumerate() {
        flat[base + i] += g;
    }
    for (i, g) in grad.bias.iter().enumerate() {
        flat[base + nk + i] += g;
    }
}

/// Per-sample loss and its gradient w.r.t. the flattened parameters of `net`.
pub fn loss_and_gradient(
    net: &ConvNet<f64>,
    input: &Tensor<f64>,
    target: &[f64],
    objective: Objective<'_>,
    distance: &dyn ImageDistance,
) -> Result<(f64, Vec<f64>)> {
    let offs = offsets(net);
    let mut flat = vec![0.0; offs[net.depth()]];

    let all = layer_refs(net.layers());
    let trace = Trace::run(&all, input)?;
    let out = &trace.output().data;
    if out.len() != target.len() {
        return Err(crate::error::shape_err(target.len(), out.len()));
    }
    let mut loss = distance.value(target, out);
    let (grads, _) = trace.backward(&all, &distance.grad(target, out));
    for (k, g) in grads.iter().enumerate() {
        scatter(&mut flat, &offs, k, g);
    }

    if let Objective::Private(p) = objective {
        let (h, w) = (input.height, input.width);
        let orig = p.original;
        let f1 = net.part_range(Part::Frontal).end;
        let f2 = net.part_range(Part::Middle).end;
        // F3 . F2 . F1' and F3 . F2' . F1'
        for own in [f1, f2] {
            let mut chain: Vec<&ConvLayer<f64>> = net.layers()[..own].iter().collect();
            chain.extend(orig.layers()[own..].iter());
            let t = Trace::run(&chain, input)?;
            let (s, gs) = sobel_sharpness_grad(h, w, &t.output().data)?;
            loss += p.adv_weight * s;
            let scaled: Vec<f64> = gs.iter().map(|g| g * p.adv_weight).collect();
            let (grads, _) = t.backward(&chain, &scaled);
            for (k, g) in grads.iter().take(own).enumerate() {
                scatter(&mut flat, &offs, k, g);
            }
        }
    }
    Ok((loss, flat))
}

/// Per-sample supervised loss and gradient with the default distance.
pub fn supervised_loss_and_gradient(net: &ConvNet<f64>, input: &Tensor<f64>, target: &[f64]) -> Result<(f64, Vec<f64>)> {
    loss_and_gradient(net, input, target, Objective::Supervised, &MeanAbsolute)
}

/// Mean loss over a dataset.
pub fn total_loss(
    net: &ConvNet<f64>,
    inputs: &[Tensor<f64>],
    targets: &[Vec<f64>],
    objective: Objective<'_>,
    distance: &dyn ImageDistance,
) -> Result<f64> {
    let mut sum = 0.0;
    for (x, y) in inputs.iter().zip(targets) {
        sum += sample_loss(net, x, y, objective, distance)?;
    }
    Ok(sum / inputs.len().max(1) as f64)
}

fn sample_loss(
    net: &ConvNet<f64>,
    input: &Tensor<f64>,
    target: &[f64],
    objective: Objective<'_>,
    distance: &dyn ImageDistance,
) -> Result<f64> {
    let out = net.forward_tensor(input)?;
    let mut loss = distance.value(target, &out.data);
    if let Objective::Private(p) = objective {
        let (h, w) = (input.height, input.width);
        let f1 = net.part_range(Part::Frontal).end;
        let f2 = net.part_range(Part::Middle).end;
        for own in [f1, f2] {
            let mid = super::net::run_layers(&net.layers()[..own], input)?;
            let img = super::net::run_layers(&p.original.layers()[own..], &mid)?;
            loss += p.adv_weight * sobel_sharpness_grad(h, w, &img.data)?.0;
        }
    }
    Ok(loss)
}

/// Mini-batch Adam training from `init`. The sample order is reshuffled every
/// epoch from `cfg.seed`.
pub fn train(
    init: ConvNet<f64>,
    inputs: &[Tensor<f64>],
    targets: &[Vec<f64>],
    objective: Objective<'_>,
    distance: &dyn ImageDistance,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if inputs.len() != targets.len() {
        return Err(crate::error::shape_err(inputs.len(), targets.len()));
    }
    let mut net = init;
    let mut params = net.flat_params();
    let mut adam = Adam::new(cfg, params.len());
    let mut rng = seed::rng(seed::derive(cfg.seed, "order"));
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs + 1);
    loss_trace.push(total_loss(&net, inputs, targets, objective, distance)?);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = vec![0.0; params.len()];
            for &i in batch {
                let (_, g) = loss_and_gradient(&net, &inputs[i], &targets[i], objective, distance)?;
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += b;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut params, &grad);
            net.set_flat_params(&params);
        }
        loss_trace.push(total_loss(&net, inputs, targets, objective, distance)?);
    }
    Ok(TrainOutcome { net, loss_trace })
}

/// Private re-training: a freshly initialized network with the original's
/// architecture learns to reproduce `original(E)` from watermark-infused
/// voxels while making swapped compositions with the original blurry.
pub fn train_private(
    original: &ConvNet<f64>,
    data: &[VoxelGrid],
    watermark: &NoiseWatermark,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    let mut targets = Vec::with_capacity(data.len());
    let mut inputs = Vec::with_capacity(data.len());
    for grid in data {
        targets.push(original.forward_tensor(&Tensor::from_voxel(grid))?.data);
        inputs.push(Tensor::from_voxel(&infuse(grid, watermark)?));
    }
    let widths: Vec<usize> = original.layers().iter().map(|l| l.c_out).collect();
    let init = ConvNet::random(
        original.in_channels(),
        &widths,
        original.split(),
        seed::derive(cfg.seed, "init"),
    )?;
    let objective = Objective::Private(PrivateObjective {
        original,
        adv_weight: cfg.adv_weight,
    });
    train(init, &inputs, &targets, objective, &MeanAbsolute, cfg)
}
