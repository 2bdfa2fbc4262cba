//! Seeded end-to-end experiments shared by the command line and the tests.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::Result;
use crate::events::{voxelize, FrameImage, VoxelGrid};
use crate::localization::{
    accuracy_report, build_synthetic_scene, localize, AccuracyReport, LocalizeConfig, Query, QueryResult, SceneConfig,
    SceneMap,
};
use crate::metrics::MetricConfig;
use crate::privacy::{FilterParams, ProtectMode};
use crate::recon::{
    train, train_private, ConvNet, MeanAbsolute, NoiseWatermark, Objective, Part, Tensor, TrainConfig, TrainOutcome,
    DEFAULT_WIDTHS,
};
use crate::seed;
use crate::split::{attack_generic_retrain, attack_targeted_retrain, evaluate_attacks, AttackNets, AttackResults};
use crate::synth::{render_frame, simulate_events, SceneKind, SceneSpec};

/// Synthetic voxel/frame pairs for reconstruction training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconDataConfig {
    pub size: usize,
    pub bins: usize,
    pub duration: f64,
    pub contrast: f64,
    pub substeps: usize,
    /// Range of the scene speed in pixels per second.
    pub speed: (f64, f64),
}

impl Default for ReconDataConfig {
    fn default() -> Self {
        ReconDataConfig { size: 16, bins: 5, duration: 0.2, contrast: 0.2, substeps: 40, speed: (40.0, 80.0) }
    }
}

/// A textured scene moving in a random direction: its voxel grid and the
/// final frame.
pub fn recon_sample(seed: u64, cfg: &ReconDataConfig) -> Result<(VoxelGrid, FrameImage)> {
    let mut rng = seed::rng(seed);
    let angle = rng.random_range(0.0..core::f64::consts::TAU);
    let speed = rng.random_range(cfg.speed.0..=cfg.speed.1);
    let spec = SceneSpec {
        velocity: [speed * libm::cos(angle), speed * libm::sin(angle)],
        contrast: cfg.contrast,
        duration: cfg.duration,
        seed: rng.random(),
        tile: (2 * cfg.size, 2 * cfg.size),
        ..SceneSpec::new(SceneKind::Texture, cfg.size, cfg.size)
    };
    let stream = simulate_events(&spec, cfg.substeps)?;
    Ok((voxelize(&stream, cfg.bins)?, render_frame(&spec, cfg.duration)?))
}

pub fn recon_dataset(seed: u64, n: usize, cfg: &ReconDataConfig) -> Result<(Vec<VoxelGrid>, Vec<FrameImage>)> {
    let mut voxels = Vec::with_capacity(n);
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let (v, f) = recon_sample(seed::derive_index(seed, i as u64), cfg)?;
        voxels.push(v);
        frames.push(f);
    }
    Ok((voxels, frames))
}

/// Trains the original network on voxel/frame pairs.
pub fn train_original(
    voxels: &[VoxelGrid],
    frames: &[FrameImage],
    widths: &[usize],
    split: (usize, usize),
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let bins = voxels.first().map_or(1, VoxelGrid::bins);
    let init = ConvNet::random(bins, widths, split, seed::derive(cfg.seed, "init"))?;
    let inputs: Vec<Tensor<f64>> = voxels.iter().map(Tensor::from_voxel).collect();
    let targets: Vec<Vec<f64>> = frames.iter().map(|f| f.pixels().to_vec()).collect();
    train(init, &inputs, &targets, Objective::Supervised, &MeanAbsolute, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackExperimentConfig {
    pub data: ReconDataConfig,
    pub widths: Vec<usize>,
    pub split: (usize, usize),
    /// Samples and schedule of the original network.
    pub n_public: usize,
    pub original: TrainConfig,
    /// Samples and schedule of private re-training.
    pub n_private: usize,
    pub private: TrainConfig,
    /// Samples and schedule of both re-training attacks.
    pub n_attacker: usize,
    pub attacker: TrainConfig,
    pub n_eval: usize,
    pub metrics: MetricConfig,
}

impl Default for AttackExperimentConfig {
    fn default() -> Self {
        AttackExperimentConfig {
            data: ReconDataConfig::default(),
            widths: DEFAULT_WIDTHS.to_vec(),
            split: (2, 4),
            n_public: 64,
            original: TrainConfig { learning_rate: 1e-3, batch_size: 4, epochs: 20, ..TrainConfig::default() },
            n_private: 64,
            private: TrainConfig::default(),
            n_attacker: 64,
            attacker: TrainConfig { learning_rate: 1e-3, epochs: 10, ..TrainConfig::default() },
            n_eval: 16,
            metrics: MetricConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub results: AttackResults,
    pub original: ConvNet<f64>,
    pub private: ConvNet<f64>,
    pub generic: ConvNet<f64>,
    pub targeted: ConvNet<f64>,
    pub watermark: NoiseWatermark,
    pub original_trace: Vec<f64>,
    pub private_trace: Vec<f64>,
}

/// The original network and its privately re-trained copy.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub original: ConvNet<f64>,
    pub private: ConvNet<f64>,
    pub watermark: NoiseWatermark,
    pub original_trace: Vec<f64>,
    pub private_trace: Vec<f64>,
}

fn with_seed(tc: &TrainConfig, root: u64, label: &str) -> TrainConfig {
    TrainConfig { seed: seed::derive(root, label), ..tc.clone() }
}

/// Original training followed by private re-training, on disjoint data.
pub fn train_models(root: u64, cfg: &AttackExperimentConfig) -> Result<TrainedModels> {
    let (public_v, public_f) = recon_dataset(seed::derive(root, "public"), cfg.n_public, &cfg.data)?;
    let orig = train_original(&public_v, &public_f, &cfg.widths, cfg.split, &with_seed(&cfg.original, root, "original"))?;
    let original = orig.net;

    let (private_v, _) = recon_dataset(seed::derive(root, "private"), cfg.n_private, &cfg.data)?;
    let shape = (cfg.data.bins, cfg.data.size, cfg.data.size);
    let watermark = NoiseWatermark::generate(seed::derive(root, "watermark"), shape);
    let priv_out = train_private(&original, &private_v, &watermark, &with_seed(&cfg.private, root, "private"))?;
    Ok(TrainedModels {
        original,
        private: priv_out.net,
        watermark,
        original_trace: orig.loss_trace,
        private_trace: priv_out.loss_trace,
    })
}

/// Both re-training attacks and the evaluation of all attacks against
/// trained models.
pub fn attack_models(
    root: u64,
    cfg: &AttackExperimentConfig,
    original: &ConvNet<f64>,
    private: &ConvNet<f64>,
    watermark: &NoiseWatermark,
) -> Result<(AttackResults, ConvNet<f64>, ConvNet<f64>)> {
    let (attacker_v, _) = recon_dataset(seed::derive(root, "attacker"), cfg.n_attacker, &cfg.data)?;
    let generic = attack_generic_retrain(original, &attacker_v, &with_seed(&cfg.attacker, root, "generic"))?;
    let shared = private.part(Part::Middle).to_vec();
    let targeted = attack_targeted_retrain(original, &shared, &attacker_v, &with_seed(&cfg.attacker, root, "targeted"))?;

    let (eval_v, _) = recon_dataset(seed::derive(root, "eval"), cfg.n_eval, &cfg.data)?;
    let nets = AttackNets { original, private, generic: &generic, targeted: &targeted };
    let results = evaluate_attacks(nets, &eval_v, watermark, &cfg.metrics)?;
    Ok((results, generic, targeted))
}

/// Original training, private re-training, both re-training attacks and
/// the evaluation of all attacks, each on disjoint seeded data.
pub fn run_attack_experiment(root: u64, cfg: &AttackExperimentConfig) -> Result<AttackOutcome> {
    let models = train_models(root, cfg)?;
    let (results, generic, targeted) = attack_models(root, cfg, &models.original, &models.private, &models.watermark)?;
    Ok(AttackOutcome {
        results,
        original: models.original,
        private: models.private,
        generic,
        targeted,
        watermark: models.watermark,
        original_trace: models.original_trace,
        private_trace: models.private_trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationExperimentConfig {
    pub scene: SceneConfig,
    pub localize: LocalizeConfig,
    /// Protection of the second run.
    pub protect: (FilterParams, ProtectMode),
}

impl Default for LocalizationExperimentConfig {
    fn default() -> Self {
        LocalizationExperimentConfig {
            scene: SceneConfig::default(),
            localize: LocalizeConfig::default(),
            protect: (FilterParams::default(), ProtectMode::Sparse),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationOutcome {
    pub map: SceneMap,
    pub queries: Vec<Query>,
    pub plain: Vec<QueryResult>,
    pub protected: Vec<QueryResult>,
    pub plain_report: AccuracyReport,
    pub protected_report: AccuracyReport,
}

/// Localizes the same queries with raw and with protected query voxels.
pub fn run_localization_experiment(
    map_seed: u64,
    query_seed: u64,
    cfg: &LocalizationExperimentConfig,
) -> Result<LocalizationOutcome> {
    let (map, queries) = build_synthetic_scene(map_seed, query_seed, &cfg.scene)?;
    let plain = localize(&map, &queries, &LocalizeConfig { protect: None, ..cfg.localize })?;
    let protected = localize(&map, &queries, &LocalizeConfig { protect: Some(cfg.protect), ..cfg.localize })?;
    let report = |r: &[QueryResult]| accuracy_report(&r.iter().map(|q| q.error).collect::<Vec<_>>());
    Ok(LocalizationOutcome {
        plain_report: report(&plain)?,
        protected_report: report(&protected)?,
        map,
        queries,
        plain,
        protected,
    })
}
