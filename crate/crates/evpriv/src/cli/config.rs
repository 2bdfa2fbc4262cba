//! Layered settings: command-line flags over the config file over defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::args::*;
use crate::error::{Error, Result};

/// A parameter set whose fields are all optional until layered.
pub trait Layered: Default {
    /// Keeps the fields set in `self`, taking the rest from `lower`.
    fn or(self, lower: Self) -> Self;
    /// Joins relative paths onto `base`.
    fn rebase(&mut self, base: &Path);
    fn defaults() -> Self;
}

macro_rules! layered {
    ($t:ident { paths: [$($p:ident),*], values: [$($v:ident),*] } => $defaults:expr) => {
        impl Layered for $t {
            fn or(self, lower: Self) -> Self {
                $t { $($p: self.$p.or(lower.$p),)* $($v: self.$v.or(lower.$v),)* }
            }

            #[allow(unused_variables)]
            fn rebase(&mut self, base: &Path) {
                $(if let Some(p) = self.$p.as_mut() {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                })*
            }

            fn defaults() -> Self {
                $defaults
            }
        }
    };
}

layered!(SynthArgs { paths: [out], values: [scene, width, height, vx, vy, contrast, duration, substeps] } => SynthArgs {
    scene: Some(SceneArg::Texture),
    width: Some(64),
    height: Some(48),
    vx: Some(20.0),
    vy: Some(0.0),
    contrast: Some(evpriv_core::synth::DEFAULT_CONTRAST),
    duration: Some(0.5),
    substeps: Some(40),
    ..SynthArgs::default()
});

layered!(VoxelizeArgs { paths: [input, out], values: [bins, width, height, polarity] } => VoxelizeArgs {
    bins: Some(50),
    polarity: Some(CodingArg::Signed),
    ..VoxelizeArgs::default()
});

layered!(RepresentArgs { paths: [input, out], values: [kind, width, height, polarity] } => RepresentArgs {
    kind: Some(RepresentationArg::Histogram),
    polarity: Some(CodingArg::Signed),
    ..RepresentArgs::default()
});

layered!(ProtectArgs { paths: [input, out], values: [kt, ks, mode] } => ProtectArgs {
    kt: Some(evpriv_core::privacy::DEFAULT_KT),
    ks: Some(evpriv_core::privacy::DEFAULT_KS),
    mode: Some(ModeArg::Sparse),
    ..ProtectArgs::default()
});

layered!(TrainArgs {
    paths: [out_dir],
    values: [widths, split, size, bins, contrast, n_public, original_lr, original_epochs, original_batch,
             n_private, lr, batch_size, epochs, adv_weight]
} => {
    let d = evpriv_core::experiments::AttackExperimentConfig::default();
    TrainArgs {
        out_dir: None,
        widths: Some(d.widths.clone()),
        split: Some(vec![d.split.0, d.split.1]),
        size: Some(d.data.size),
        bins: Some(d.data.bins),
        contrast: Some(d.data.contrast),
        n_public: Some(d.n_public),
        original_lr: Some(d.original.learning_rate),
        original_epochs: Some(d.original.epochs),
        original_batch: Some(d.original.batch_size),
        n_private: Some(d.n_private),
        lr: Some(d.private.learning_rate),
        batch_size: Some(d.private.batch_size),
        epochs: Some(d.private.epochs),
        adv_weight: Some(d.private.adv_weight),
    }
});

layered!(AttackArgs {
    paths: [original, private, watermark, out_dir],
    values: [contrast, n_attacker, attacker_lr, attacker_epochs, attacker_batch, adv_weight, n_eval]
} => {
    let d = evpriv_core::experiments::AttackExperimentConfig::default();
    AttackArgs {
        contrast: Some(d.data.contrast),
        n_attacker: Some(d.n_attacker),
        attacker_lr: Some(d.attacker.learning_rate),
        attacker_epochs: Some(d.attacker.epochs),
        attacker_batch: Some(d.attacker.batch_size),
        adv_weight: Some(d.attacker.adv_weight),
        n_eval: Some(d.n_eval),
        ..AttackArgs::default()
    }
});

layered!(ServeArgs { paths: [net], values: [listen, max_sessions] } => ServeArgs {
    listen: Some("127.0.0.1:7878".into()),
    ..ServeArgs::default()
});

layered!(ClientArgs { paths: [net, watermark, voxel, out], values: [connect] } => ClientArgs {
    connect: Some("127.0.0.1:7878".into()),
    ..ClientArgs::default()
});

layered!(LocalizeArgs {
    paths: [out_dir],
    values: [query_seed, n_points, n_refs, n_queries, noise_px, outlier_fraction, k, inlier_px, iterations, kt, ks, mode]
} => {
    let d = evpriv_core::experiments::LocalizationExperimentConfig::default();
    LocalizeArgs {
        out_dir: None,
        query_seed: Some(1),
        n_points: Some(d.scene.n_points),
        n_refs: Some(d.scene.n_refs),
        n_queries: Some(d.scene.n_queries),
        noise_px: Some(d.localize.matching.noise_px),
        outlier_fraction: Some(d.localize.matching.outlier_fraction),
        k: Some(d.localize.k),
        inlier_px: Some(d.localize.ransac.inlier_px),
        iterations: Some(d.localize.ransac.iterations),
        kt: Some(d.protect.0.k_t),
        ks: Some(d.protect.0.k_s),
        mode: Some(ModeArg::Sparse),
    }
});

layered!(MetricsArgs { paths: [a, b], values: [ssim_n] } => MetricsArgs {
    ssim_n: Some(11),
    ..MetricsArgs::default()
});

layered!(ReportArgs { paths: [dir, out], values: [kt, ks] } => ReportArgs {
    kt: Some(evpriv_core::privacy::DEFAULT_KT),
    ks: Some(evpriv_core::privacy::DEFAULT_KS),
    ..ReportArgs::default()
});

/// The TOML config file: a root seed and one optional table per subcommand.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub synth: SynthArgs,
    pub voxelize: VoxelizeArgs,
    pub represent: RepresentArgs,
    pub protect: ProtectArgs,
    pub train: TrainArgs,
    pub serve: ServeArgs,
    pub client: ClientArgs,
    pub attack: AttackArgs,
    pub localize: LocalizeArgs,
    pub metrics: MetricsArgs,
    pub report: ReportArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| Error::Usage(format!("config {}: {}", path.display(), e.message())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.rebase(&base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        self.synth.rebase(base);
        self.voxelize.rebase(base);
        self.represent.rebase(base);
        self.protect.rebase(base);
        self.train.rebase(base);
        self.serve.rebase(base);
        self.client.rebase(base);
        self.attack.rebase(base);
        self.localize.rebase(base);
        self.metrics.rebase(base);
        self.report.rebase(base);
    }
}

/// Flags over file over defaults.
pub fn resolve<T: Layered>(flags: T, file: T) -> T {
    flags.or(file).or(T::defaults())
}

/// A setting that has a default after layering.
pub fn get<T: Clone>(v: &Option<T>) -> T {
    v.clone().expect("layered setting has a default")
}

/// A setting without a default that the subcommand needs.
pub fn need<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::Usage(format!("missing --{flag}")))
}

/// An input path that must exist before anything runs.
pub fn input(v: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    let p = need(v, flag)?;
    if !p.exists() {
        return Err(Error::Usage(format!("--{flag}: {} does not exist", p.display())));
    }
    Ok(p)
}
