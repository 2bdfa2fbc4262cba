use std::io::Write as _;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use serde::Serialize;

use evpriv_core::events::{
    binary_event_image, event_histogram, sorted_timestamp_image, timestamp_image, voxelize as voxelize_stream,
    EventStream, FrameImage,
};
use evpriv_core::experiments::{
    attack_models, run_localization_experiment, train_models, AttackExperimentConfig, LocalizationExperimentConfig,
    ReconDataConfig,
};
use evpriv_core::localization::{MatchConfig, RansacConfig};
use evpriv_core::metrics::{similarity, MetricConfig};
use evpriv_core::privacy::{protect as protect_grid, FilterParams};
use evpriv_core::recon::{ConvNet, TrainConfig};
use evpriv_core::split::{ClientEnds, MeanSimilarity, MiddleService};
use evpriv_core::synth::{simulate_events, SceneSpec};

use super::args::*;
use super::config::{get, input, need};
use crate::error::{Error, Result};
use crate::formats::events::{read_events, write_csv, write_evs, CsvMeta};
use crate::formats::image::{read_image, write_img, write_pgm};
use crate::formats::map::write_map;
use crate::formats::net::{NetContents, NetFile};
use crate::formats::results::results_csv;
use crate::formats::voxel::{read_vox, write_vox};
use crate::formats::watermark::{read_wmk, write_wmk};
use crate::formats::{read_file, write_file};
use crate::report::{build_report, finite_or_inf, localization_csv, LocalizationRow, LOCALIZATION_FILE};
use crate::transport::{client_reconstruct, serve as serve_sessions};

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn write_image(path: &Path, img: &FrameImage) -> Result<()> {
    let bytes = if has_extension(path, "pgm") { write_pgm(img) } else { write_img(img)? };
    write_file(path, &bytes)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Runtime(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn read_stream(path: &Path, width: Option<u32>, height: Option<u32>, coding: CodingArg) -> Result<EventStream> {
    let sensor = CsvMeta { width, height, ..CsvMeta::default() };
    read_events(&read_file(path)?, sensor, coding.into())
}

fn read_net(path: &Path) -> Result<NetContents> {
    NetFile::from_bytes(&read_file(path)?)?.contents()
}

pub fn synth(seed: u64, a: &SynthArgs) -> Result<()> {
    let out = need(&a.out, "out")?;
    let spec = SceneSpec {
        velocity: [get(&a.vx), get(&a.vy)],
        contrast: get(&a.contrast),
        duration: get(&a.duration),
        seed,
        ..SceneSpec::new(get(&a.scene).into(), get(&a.width), get(&a.height))
    };
    let stream = simulate_events(&spec, get(&a.substeps))?;
    let bytes = if has_extension(&out, "evs") {
        write_evs(&stream)?
    } else {
        write_csv(&stream, Default::default()).into_bytes()
    };
    write_file(&out, &bytes)?;
    log::info!("wrote {} events to {}", stream.len(), out.display());
    Ok(())
}

pub fn voxelize(_seed: u64, a: &VoxelizeArgs) -> Result<()> {
    let src = input(&a.input, "in")?;
    let out = need(&a.out, "out")?;
    let stream = read_stream(&src, a.width, a.height, get(&a.polarity))?;
    let grid = voxelize_stream(&stream, get(&a.bins)).map_err(|e| Error::Usage(e.to_string()))?;
    write_file(&out, &write_vox(&grid)?)?;
    log::info!("wrote {:?} grid to {}", grid.shape(), out.display());
    Ok(())
}

pub fn represent(_seed: u64, a: &RepresentArgs) -> Result<()> {
    let src = input(&a.input, "in")?;
    let out = need(&a.out, "out")?;
    let stream = read_stream(&src, a.width, a.height, get(&a.polarity))?;
    let img = match get(&a.kind) {
        RepresentationArg::Binary => binary_event_image(&stream),
        RepresentationArg::Histogram => event_histogram(&stream),
        RepresentationArg::Timestamp => timestamp_image(&stream),
        RepresentationArg::SortedTimestamp => sorted_timestamp_image(&stream),
    };
    write_image(&out, &img)
}

pub fn protect(_seed: u64, a: &ProtectArgs) -> Result<()> {
    let src = input(&a.input, "in")?;
    let out = need(&a.out, "out")?;
    let grid = read_vox(&read_file(&src)?)?;
    let params = FilterParams { k_t: get(&a.kt), k_s: get(&a.ks) };
    let protected = protect_grid(&grid, params, get(&a.mode).into());
    write_file(&out, &write_vox(&protected)?)
}

fn split_points(v: &[usize]) -> Result<(usize, usize)> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Usage("--split takes exactly two layer indices".into())),
    }
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    original_loss: &'a [f64],
    private_loss: &'a [f64],
}

pub fn train(seed: u64, a: &TrainArgs) -> Result<()> {
    let out = need(&a.out_dir, "out-dir")?;
    let defaults = AttackExperimentConfig::default();
    let cfg = AttackExperimentConfig {
        data: ReconDataConfig { size: get(&a.size), bins: get(&a.bins), contrast: get(&a.contrast), ..defaults.data },
        widths: get(&a.widths),
        split: split_points(&get(&a.split))?,
        n_public: get(&a.n_public),
        original: TrainConfig {
            learning_rate: get(&a.original_lr),
            epochs: get(&a.original_epochs),
            batch_size: get(&a.original_batch),
            ..defaults.original
        },
        n_private: get(&a.n_private),
        private: TrainConfig {
            learning_rate: get(&a.lr),
            batch_size: get(&a.batch_size),
            epochs: get(&a.epochs),
            adv_weight: get(&a.adv_weight),
            ..defaults.private
        },
        ..defaults
    };
    let models = train_models(seed, &cfg).map_err(|e| Error::Usage(e.to_string()))?;
    let original = models.original.cast::<f32>();
    let private = models.private.cast::<f32>();
    write_file(&out.join("original.net"), &NetFile::full(&original).to_bytes()?)?;
    write_file(&out.join("private.net"), &NetFile::full(&private).to_bytes()?)?;
    write_file(&out.join("mid.net"), &NetFile::middle(&private).to_bytes()?)?;
    write_file(&out.join("ends.net"), &NetFile::ends(&private).to_bytes()?)?;
    write_file(&out.join("watermark.wmk"), &write_wmk(&models.watermark)?)?;
    let summary = TrainSummary { original_loss: &models.original_trace, private_loss: &models.private_trace };
    write_json(&out.join("train.json"), &summary)?;
    log::info!(
        "final losses: original {:?}, private {:?}",
        models.original_trace.last(),
        models.private_trace.last()
    );
    Ok(())
}

#[derive(Serialize)]
struct Similarity {
    mae: f64,
    #[serde(serialize_with = "finite_or_inf")]
    psnr: f64,
    ssim: f64,
    n: usize,
}

impl From<&MeanSimilarity> for Similarity {
    fn from(m: &MeanSimilarity) -> Self {
        Similarity { mae: m.mae, psnr: m.psnr, ssim: m.ssim, n: m.n }
    }
}

#[derive(Serialize)]
struct AttackSummary {
    legitimate: Similarity,
    generic_clean: Similarity,
    generic_infused: Similarity,
}

fn full_net(path: &Path, flag: &str) -> Result<ConvNet<f64>> {
    match read_net(path)? {
        NetContents::Full(n) => Ok(n.cast()),
        _ => Err(Error::format(format!("--{flag}: {} holds a partial network", path.display()))),
    }
}

pub fn attack(seed: u64, a: &AttackArgs) -> Result<()> {
    let original = full_net(&input(&a.original, "original")?, "original")?;
    let private = full_net(&input(&a.private, "private")?, "private")?;
    let watermark = read_wmk(&read_file(&input(&a.watermark, "watermark")?)?)?;
    let out = need(&a.out_dir, "out-dir")?;
    let (bins, h, w) = watermark.shape();
    if h != w {
        return Err(Error::Usage(format!("watermark must be square, found {h}x{w}")));
    }
    let defaults = AttackExperimentConfig::default();
    let cfg = AttackExperimentConfig {
        data: ReconDataConfig { size: h, bins, contrast: get(&a.contrast), ..defaults.data },
        n_attacker: get(&a.n_attacker),
        attacker: TrainConfig {
            learning_rate: get(&a.attacker_lr),
            epochs: get(&a.attacker_epochs),
            batch_size: get(&a.attacker_batch),
            adv_weight: get(&a.adv_weight),
            ..defaults.attacker
        },
        n_eval: get(&a.n_eval),
        ..defaults
    };
    let (results, _, _) = attack_models(seed, &cfg, &original, &private, &watermark)?;
    write_file(&out.join("attacks.csv"), results.to_csv().as_bytes())?;
    let summary = AttackSummary {
        legitimate: (&results.legitimate).into(),
        generic_clean: (&results.generic_clean).into(),
        generic_infused: (&results.generic_infused).into(),
    };
    write_json(&out.join("attack_summary.json"), &summary)?;
    log::info!("legitimate: {}", results.legitimate);
    Ok(())
}

pub fn serve(_seed: u64, a: &ServeArgs) -> Result<()> {
    let path = input(&a.net, "net")?;
    let service = match read_net(&path)? {
        NetContents::Middle(layers) => MiddleService::new(layers)?,
        NetContents::Full(net) => MiddleService::from_net(&net),
        NetContents::Ends { .. } => {
            return Err(Error::format(format!("--net: {} holds client parts", path.display())));
        }
    };
    let listen = get(&a.listen);
    let listener =
        TcpListener::bind(&listen).map_err(|e| Error::Runtime(format!("cannot listen on {listen}: {e}")))?;
    let addr = listener.local_addr()?;
    // Tests and scripts read the bound port from this line.
    println!("listening on {addr}");
    let _ = std::io::stdout().flush();
    log::info!("serving {} middle layers on {addr}", service.layers().len());
    serve_sessions(listener, Arc::new(service), a.max_sessions, Arc::new(AtomicBool::new(false)))
}

pub fn client(_seed: u64, a: &ClientArgs) -> Result<()> {
    let net = input(&a.net, "net")?;
    let watermark = read_wmk(&read_file(&input(&a.watermark, "watermark")?)?)?;
    let grid = read_vox(&read_file(&input(&a.voxel, "voxel")?)?)?;
    let out = need(&a.out, "out")?;
    let ends = match read_net(&net)? {
        NetContents::Ends { frontal, rear } => ClientEnds::new(frontal, rear, watermark)?,
        NetContents::Full(n) => ClientEnds::from_net(&n, watermark)?,
        NetContents::Middle(_) => {
            return Err(Error::format(format!("--net: {} holds only the middle part", net.display())));
        }
    };
    let img = client_reconstruct(ends, &grid, get(&a.connect).as_str())?;
    write_image(&out, &img)
}

pub fn localize(seed: u64, a: &LocalizeArgs) -> Result<()> {
    let out = need(&a.out_dir, "out-dir")?;
    let defaults = LocalizationExperimentConfig::default();
    let mut cfg = defaults.clone();
    cfg.scene.n_points = get(&a.n_points);
    cfg.scene.n_refs = get(&a.n_refs);
    cfg.scene.n_queries = get(&a.n_queries);
    cfg.localize.k = get(&a.k);
    cfg.localize.matching =
        MatchConfig { noise_px: get(&a.noise_px), outlier_fraction: get(&a.outlier_fraction), ..defaults.localize.matching };
    cfg.localize.ransac =
        RansacConfig { inlier_px: get(&a.inlier_px), iterations: get(&a.iterations), ..defaults.localize.ransac };
    cfg.localize.seed = seed;
    cfg.protect = (FilterParams { k_t: get(&a.kt), k_s: get(&a.ks) }, get(&a.mode).into());
    let outcome =
        run_localization_experiment(seed, get(&a.query_seed), &cfg).map_err(|e| Error::Usage(e.to_string()))?;
    write_file(&out.join("map.map"), &write_map(&outcome.map)?)?;
    write_file(&out.join("results_plain.csv"), results_csv(&outcome.plain).as_bytes())?;
    write_file(&out.join("results_protected.csv"), results_csv(&outcome.protected).as_bytes())?;
    let rows = [
        LocalizationRow::new("plain", &outcome.plain_report),
        LocalizationRow::new("protected", &outcome.protected_report),
    ];
    write_file(&out.join(LOCALIZATION_FILE), localization_csv(&rows).as_bytes())?;
    for r in &rows {
        log::info!("{}: median t {} median R {} accuracy {}", r.split, r.median_t, r.median_r, r.accuracy);
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricsOut {
    mae: f64,
    #[serde(serialize_with = "finite_or_inf")]
    psnr: f64,
    ssim: f64,
}

pub fn metrics(_seed: u64, a: &MetricsArgs) -> Result<()> {
    let ia = read_image(&read_file(&input(&a.a, "a")?)?)?;
    let ib = read_image(&read_file(&input(&a.b, "b")?)?)?;
    let cfg = MetricConfig { ssim_window: get(&a.ssim_n), ..MetricConfig::default() };
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let s = similarity(&ia, &ib, &cfg)?;
    let out = MetricsOut { mae: s.mae, psnr: s.psnr.unwrap_or(f64::INFINITY), ssim: s.ssim };
    println!("{}", serde_json::to_string(&out).map_err(|e| Error::Runtime(e.to_string()))?);
    Ok(())
}

pub fn report(_seed: u64, a: &ReportArgs) -> Result<()> {
    let dir = need(&a.dir, "dir")?;
    let out: PathBuf = a.out.clone().unwrap_or_else(|| dir.clone());
    let params = FilterParams { k_t: get(&a.kt), k_s: get(&a.ks) };
    let report = build_report(&dir, params)?;
    for name in &report.missing {
        log::warn!("missing input: {name}");
    }
    write_file(&out.join("report_attacks.csv"), report.attacks_csv().as_bytes())?;
    write_file(&out.join("report_localization.csv"), report.localization_csv().as_bytes())?;
    write_file(&out.join("report_filters.csv"), report.filters_csv().as_bytes())?;
    write_file(&out.join("report.json"), report.to_json().as_bytes())?;
    Ok(())
}
