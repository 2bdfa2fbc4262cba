//! Parameter sets of the subcommands. Every field is optional on the command
//! line and in the config file; unset fields take their defaults.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use evpriv_core::privacy::ProtectMode;
use evpriv_core::synth::SceneKind;

use crate::formats::events::PolarityCoding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneArg {
    Ramp,
    Step,
    Texture,
}

impl From<SceneArg> for SceneKind {
    fn from(s: SceneArg) -> Self {
        match s {
            SceneArg::Ramp => SceneKind::Ramp,
            SceneArg::Step => SceneKind::Step,
            SceneArg::Texture => SceneKind::Texture,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Dense,
    Sparse,
}

impl From<ModeArg> for ProtectMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Dense => ProtectMode::Dense,
            ModeArg::Sparse => ProtectMode::Sparse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodingArg {
    /// Polarities `1` / `-1`.
    Signed,
    /// Polarities `1` / `0`.
    Binary,
}

impl From<CodingArg> for PolarityCoding {
    fn from(c: CodingArg) -> Self {
        match c {
            CodingArg::Signed => PolarityCoding::Signed,
            CodingArg::Binary => PolarityCoding::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepresentationArg {
    Binary,
    Histogram,
    Timestamp,
    SortedTimestamp,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthArgs {
    /// Output stream; `.evs` selects the binary format, anything else CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scene: Option<SceneArg>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Scene velocity in pixels per second.
    #[arg(long, allow_negative_numbers = true)]
    pub vx: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub vy: Option<f64>,
    /// Contrast threshold in log-intensity units.
    #[arg(long)]
    pub contrast: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    /// Rendered frames between consecutive samples of the window.
    #[arg(long)]
    pub substeps: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoxelizeArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Sensor width for CSV input without a size comment.
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long, value_enum)]
    pub polarity: Option<CodingArg>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RepresentArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Output image; `.pgm` writes 8-bit PGM, anything else `IMG1`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<RepresentationArg>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long, value_enum)]
    pub polarity: Option<CodingArg>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtectArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Half-size of the temporal median window.
    #[arg(long)]
    pub kt: Option<usize>,
    /// Half-size of the spatial maximum window.
    #[arg(long)]
    pub ks: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Output channels per layer, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    /// The two split points, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub split: Option<Vec<usize>>,
    /// Side of the square training scenes.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub contrast: Option<f64>,
    #[arg(long)]
    pub n_public: Option<usize>,
    #[arg(long)]
    pub original_lr: Option<f64>,
    #[arg(long)]
    pub original_epochs: Option<usize>,
    #[arg(long)]
    pub original_batch: Option<usize>,
    #[arg(long)]
    pub n_private: Option<usize>,
    /// Learning rate of private re-training.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub adv_weight: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackArgs {
    #[arg(long)]
    pub original: Option<PathBuf>,
    #[arg(long)]
    pub private: Option<PathBuf>,
    #[arg(long)]
    pub watermark: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Contrast of the attacker and evaluation scenes.
    #[arg(long)]
    pub contrast: Option<f64>,
    #[arg(long)]
    pub n_attacker: Option<usize>,
    #[arg(long)]
    pub attacker_lr: Option<f64>,
    #[arg(long)]
    pub attacker_epochs: Option<usize>,
    #[arg(long)]
    pub attacker_batch: Option<usize>,
    #[arg(long)]
    pub adv_weight: Option<f64>,
    #[arg(long)]
    pub n_eval: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServeArgs {
    /// Middle-part file, or a complete network whose middle part is served.
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[arg(long)]
    pub listen: Option<String>,
    /// Exit after this many sessions have been accepted and finished.
    #[arg(long)]
    pub max_sessions: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClientArgs {
    /// Client-part file, or a complete network.
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[arg(long)]
    pub watermark: Option<PathBuf>,
    #[arg(long)]
    pub voxel: Option<PathBuf>,
    #[arg(long)]
    pub connect: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizeArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Seed of the query set; the map comes from the root seed.
    #[arg(long)]
    pub query_seed: Option<u64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub n_refs: Option<usize>,
    #[arg(long)]
    pub n_queries: Option<usize>,
    #[arg(long)]
    pub noise_px: Option<f64>,
    #[arg(long)]
    pub outlier_fraction: Option<f64>,
    /// Retrieved references per query.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub inlier_px: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub kt: Option<usize>,
    #[arg(long)]
    pub ks: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsArgs {
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    /// Side of the SSIM window.
    #[arg(long)]
    pub ssim_n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportArgs {
    pub dir: Option<PathBuf>,
    /// Where the tables go; defaults to the results directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub kt: Option<usize>,
    #[arg(long)]
    pub ks: Option<usize>,
}
