//! Attacks available to a provider that holds the middle part, the
//! intercepted frontal activations and the original network, but never the
//! watermark.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::events::{FrameImage, VoxelGrid};
use crate::metrics::{similarity, MetricConfig};
use crate::recon::{
    infuse, run_layers, train, ConvLayer, ConvNet, MeanAbsolute, NoiseWatermark, Objective, Part, PrivateObjective,
    Real, Tensor, TrainConfig,
};
use crate::seed;

/// Where an attack joins the victim's layers to a rear chain of its choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpliceDepth {
    L2,
    L3,
    L4,
    /// Directly after the middle part, whatever its index.
    Mid,
}

impl SpliceDepth {
    pub const ALL: [SpliceDepth; 4] = [SpliceDepth::L2, SpliceDepth::L3, SpliceDepth::L4, SpliceDepth::Mid];

    /// Number of victim layers evaluated before the splice.
    pub fn layers(self, split: (usize, usize)) -> usize {
        match self {
            SpliceDepth::L2 => 2,
            SpliceDepth::L3 => 3,
            SpliceDepth::L4 => 4,
            SpliceDepth::Mid => split.1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SpliceDepth::L2 => "L2",
            SpliceDepth::L3 => "L3",
            SpliceDepth::L4 => "L4",
            SpliceDepth::Mid => "MID",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    SwappedLayer,
    GenericRetrain,
    TargetedRetrain,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [AttackKind::SwappedLayer, AttackKind::GenericRetrain, AttackKind::TargetedRetrain];

    pub fn label(self) -> &'static str {
        match self {
            AttackKind::SwappedLayer => "swapped",
            AttackKind::GenericRetrain => "generic",
            AttackKind::TargetedRetrain => "targeted",
        }
    }
}

/// Runs `victim` up to `depth` layers, then `rear` from `depth` on.
pub fn splice<T: Real>(victim: &ConvNet<T>, rear: &ConvNet<T>, depth: usize, input: &Tensor<T>) -> Result<Tensor<T>> {
    if depth == 0 || depth >= victim.depth() || depth >= rear.depth() {
        return Err(Error::OutOfBounds(format!("splice depth {depth}")));
    }
    let mid = run_layers(&victim.layers()[..depth], input)?;
    run_layers(&rear.layers()[depth..], &mid)
}

fn provider_depth(private: &ConvNet<f64>, depth: SpliceDepth) -> Result<usize> {
    let (s1, s2) = private.split();
    let d = depth.layers((s1, s2));
    // The provider sees the frontal output and can run the middle layers.
    if d < s1 || d > s2 {
        return Err(Error::InvalidArgument(format!(
            "depth {} is outside the provider's reach {s1}..={s2}",
            depth.label()
        )));
    }
    Ok(d)
}

/// Feeds the private network's activation at `depth` into the original
/// network's remaining layers.
pub fn attack_swapped_layer(
    original: &ConvNet<f64>,
    private: &ConvNet<f64>,
    depth: SpliceDepth,
    infused: &VoxelGrid,
) -> Result<FrameImage> {
    let d = provider_depth(private, depth)?;
    splice(private, original, d, &Tensor::from_voxel(infused))?.to_image()
}

fn retrain(original: &ConvNet<f64>, init: ConvNet<f64>, data: &[VoxelGrid], cfg: &TrainConfig) -> Result<ConvNet<f64>> {
    let inputs: Vec<Tensor<f64>> = data.iter().map(Tensor::from_voxel).collect();
    let targets = inputs
        .iter()
        .map(|x| original.forward_tensor(x).map(|t| t.data))
        .collect::<Result<Vec<_>>>()?;
    let objective = Objective::Private(PrivateObjective { original, adv_weight: cfg.adv_weight });
    Ok(train(init, &inputs, &targets, objective, &MeanAbsolute, cfg)?.net)
}

fn same_architecture(original: &ConvNet<f64>, seed: u64) -> Result<ConvNet<f64>> {
    let widths: Vec<usize> = original.layers().iter().map(|l| l.c_out).collect();
    ConvNet::random(original.in_channels(), &widths, original.split(), seed)
}

/// Trains a fresh network with the private-training objective, but on the
/// attacker's own watermark-free voxels.
pub fn attack_generic_retrain(original: &ConvNet<f64>, data: &[VoxelGrid], cfg: &TrainConfig) -> Result<ConvNet<f64>> {
    let init = same_architecture(original, seed::derive(cfg.seed, "generic"))?;
    retrain(original, init, data, cfg)
}

/// Like [`attack_generic_retrain`], but the middle part starts from the
/// victim's shared middle layers.
pub fn attack_targeted_retrain(
    original: &ConvNet<f64>,
    shared_middle: &[ConvLayer<f64>],
    data: &[VoxelGrid],
    cfg: &TrainConfig,
) -> Result<ConvNet<f64>> {
    let mut init = same_architecture(original, seed::derive(cfg.seed, "targeted"))?;
    let range = init.part_range(Part::Middle);
    if shared_middle.len() != range.len() {
        return Err(crate::error::shape_err(range.len(), shared_middle.len()));
    }
    for (dst, src) in init.layers_mut()[range].iter_mut().zip(shared_middle) {
        if (dst.c_in, dst.c_out) != (src.c_in, src.c_out) {
            return Err(crate::error::shape_err((dst.c_in, dst.c_out), (src.c_in, src.c_out)));
        }
        *dst = src.clone();
    }
    retrain(original, init, data, cfg)
}

/// Mean similarity of one attack at one depth to the original network's
/// reconstructions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackReport {
    pub attack: AttackKind,
    pub depth: SpliceDepth,
    pub mae: f64,
    /// Infinite if any sample was reproduced exactly.
    pub psnr: f64,
    pub ssim: f64,
    pub n: usize,
}

impl AttackReport {
    pub const CSV_HEADER: &'static str = "attack,depth,mae,psnr,ssim,n";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.attack.label(),
            self.depth.label(),
            self.mae,
            fmt_psnr(self.psnr),
            self.ssim,
            self.n
        )
    }
}

fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

/// Mean MAE, PSNR and SSIM of an image sequence against references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSimilarity {
    pub mae: f64,
    pub psnr: f64,
    pub ssim: f64,
    pub n: usize,
}

impl fmt::Display for MeanSimilarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mae={:.4} psnr={} ssim={:.4} n={}", self.mae, fmt_psnr(self.psnr), self.ssim, self.n)
    }
}

pub fn mean_similarity(images: &[FrameImage], references: &[FrameImage], cfg: &MetricConfig) -> Result<MeanSimilarity> {
    if images.is_empty() {
        return Err(Error::Empty("image set"));
    }
    if images.len() != references.len() {
        return Err(crate::error::shape_err(references.len(), images.len()));
    }
    let (mut mae, mut psnr, mut ssim) = (0.0, 0.0, 0.0);
    for (a, b) in images.iter().zip(references) {
        let s = similarity(a, b, cfg)?;
        mae += s.mae;
        psnr += s.psnr.unwrap_or(f64::INFINITY);
        ssim += s.ssim;
    }
    let n = images.len() as f64;
    Ok(MeanSimilarity { mae: mae / n, psnr: psnr / n, ssim: ssim / n, n: images.len() })
}

/// Similarity tables of one attack experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackResults {
    /// One row per attack and depth, attacks outermost.
    pub reports: Vec<AttackReport>,
    /// The legitimate split pipeline against the original network.
    pub legitimate: MeanSimilarity,
    /// The generic attacker's full network on clean voxels.
    pub generic_clean: MeanSimilarity,
    /// The generic attacker's full network on watermark-infused voxels.
    pub generic_infused: MeanSimilarity,
}

impl AttackResults {
    pub fn get(&self, attack: AttackKind, depth: SpliceDepth) -> Option<&AttackReport> {
        self.reports.iter().find(|r| r.attack == attack && r.depth == depth)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(AttackReport::CSV_HEADER);
        out.push('\n');
        for r in &self.reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// The four networks of an attack experiment.
#[derive(Debug, Clone, Copy)]
pub struct AttackNets<'a> {
    pub original: &'a ConvNet<f64>,
    pub private: &'a ConvNet<f64>,
    pub generic: &'a ConvNet<f64>,
    pub targeted: &'a ConvNet<f64>,
}

/// Scores every attack at every depth on held-out voxels. References are
/// the original network's reconstructions of the clean voxels; attacks run
/// on the watermark-infused voxels the client would process.
pub fn evaluate_attacks(
    nets: AttackNets<'_>,
    eval: &[VoxelGrid],
    watermark: &NoiseWatermark,
    cfg: &MetricConfig,
) -> Result<AttackResults> {
    if eval.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut references = Vec::with_capacity(eval.len());
    let mut infused = Vec::with_capacity(eval.len());
    let mut legit = Vec::with_capacity(eval.len());
    let mut generic_clean = Vec::with_capacity(eval.len());
    let mut generic_infused = Vec::with_capacity(eval.len());
    for grid in eval {
        references.push(nets.original.forward(grid)?);
        let t = infuse(grid, watermark)?;
        legit.push(nets.private.forward(&t)?);
        generic_clean.push(nets.generic.forward(grid)?);
        generic_infused.push(nets.generic.forward(&t)?);
        infused.push(Tensor::<f64>::from_voxel(&t));
    }
    let mut reports = Vec::with_capacity(12);
    for attack in AttackKind::ALL {
        let rear = match attack {
            AttackKind::SwappedLayer => nets.original,
            AttackKind::GenericRetrain => nets.generic,
            AttackKind::TargetedRetrain => nets.targeted,
        };
        for depth in SpliceDepth::ALL {
            let d = provider_depth(nets.private, depth)?;
            let images = infused
                .iter()
                .map(|x| splice(nets.private, rear, d, x)?.to_image())
                .collect::<Result<Vec<_>>>()?;
            let m = mean_similarity(&images, &references, cfg)?;
            reports.push(AttackReport { attack, depth, mae: m.mae, psnr: m.psnr, ssim: m.ssim, n: m.n });
        }
    }
    Ok(AttackResults {
        reports,
        legitimate: mean_similarity(&legit, &references, cfg)?,
        generic_clean: mean_similarity(&generic_clean, &references, cfg)?,
        generic_infused: mean_similarity(&generic_infused, &references, cfg)?,
    })
}
