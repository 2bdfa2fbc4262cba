//! Acceptance suite. Prints one PASS or FAIL line per criterion and exits
//! non-zero if any fails. Run with `cargo test -p evpriv --test acceptance`.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::hash::Hasher;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use evpriv::transport::{Server, SplitClient};
use evpriv::Error;
use evpriv_core::events::{voxelize, Event, EventStream, FrameImage, Polarity, VoxelGrid};
use evpriv_core::experiments::{
    run_attack_experiment, run_localization_experiment, AttackExperimentConfig, AttackOutcome,
    LocalizationExperimentConfig,
};
use evpriv_core::localization::{pnp_ransac, pose_errors, reprojection_error, Intrinsics, RansacConfig};
use evpriv_core::metrics::{mae, psnr, ssim, MetricConfig};
use evpriv_core::privacy::{
    accumulation_mask, blend, max_reflection_filter, median_filter_temporal, protect, FilterParams, ProtectMode,
};
use evpriv_core::recon::{infuse, ConvNet, NoiseWatermark, Tensor, DEFAULT_WIDTHS};
use evpriv_core::seed;
use evpriv_core::split::{AttackKind, ClientEnds, ErrorCode, Message, MiddleService, SpliceDepth};
use evpriv_core::synth::{simulate_events, SceneKind, SceneSpec};
use rand::Rng;

/// Root seed of every experiment in the suite.
const ROOT: u64 = 1;
const ATTACK_SEEDS: [u64; 3] = [1, 2, 3];

/// Order-sensitive fingerprint of everything an experiment produced.
#[derive(Default)]
struct Digest(std::collections::hash_map::DefaultHasher);

impl Digest {
    fn floats(&mut self, xs: &[f64]) {
        self.0.write_usize(xs.len());
        for x in xs {
            self.0.write_u64(x.to_bits());
        }
    }

    fn text(&mut self, s: &str) {
        self.0.write(s.as_bytes());
        self.0.write_u8(0xff);
    }

    fn finish(&self) -> u64 {
        self.0.finish()
    }
}

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

// Voxelization

fn random_stream(s: u64) -> EventStream {
    let mut rng = seed::rng(s);
    let (w, h) = (rng.random_range(1..=32u32), rng.random_range(1..=32u32));
    let n = rng.random_range(0..=10_000usize);
    let (t0, dt) = (rng.random_range(0.0..5.0), rng.random_range(0.001..2.0));
    let mut events: Vec<Event> = (0..n)
        .map(|_| {
            let p = if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
            Event::new(t0 + rng.random_range(0.0..=dt), rng.random_range(0..w) as u16, rng.random_range(0..h) as u16, p)
        })
        .collect();
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    EventStream::new(events, w, h, t0, dt).unwrap()
}

fn voxelizer(d: &mut Digest) -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    for i in 0..1000u64 {
        let s = random_stream(seed::derive_index(seed::derive(ROOT, "voxelizer"), i));
        let bins = 1 + (i as usize % 50);
        let g = voxelize(&s, bins).map_err(|e| e.to_string())?;
        let tuples: Vec<_> = s.events().iter().map(|e| (e.t, e.x as usize, e.y as usize, e.p.value())).collect();
        let want = oracles::voxel(&tuples, s.t0(), s.duration(), bins, s.height() as usize, s.width() as usize);
        check(g.data() == &want[..], || format!("stream {i} differs from the oracle"))?;
        let drift = (g.sum() - s.polarity_sum() as f64).abs();
        check(drift <= 1e-12 * s.len().max(1) as f64, || format!("stream {i}: polarity drift {drift}"))?;
        total += s.len();
        d.floats(g.data());
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(30), || format!("took {}", secs(t)))?;
    Ok(format!("1000 streams, {total} events, exact, {}", secs(t)))
}

// Sensor-level protection

/// Grid with repeated values so window ties occur.
fn tie_grid(s: u64, b: usize, h: usize, w: usize) -> VoxelGrid {
    let mut rng = seed::rng(s);
    let data = (0..b * h * w)
        .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-6i32..=6) as f64 * 0.5 })
        .collect();
    VoxelGrid::from_data(b, h, w, data).unwrap()
}

fn random_dims(s: u64) -> (VoxelGrid, usize, usize) {
    let mut rng = seed::rng(s);
    let (b, h, w) = (rng.random_range(1..=10), rng.random_range(1..=16), rng.random_range(1..=16));
    (tie_grid(rng.random(), b, h, w), rng.random_range(0..=3), rng.random_range(0..=2))
}

fn filters(d: &mut Digest) -> Outcome {
    for i in 0..200u64 {
        let (g, kt, ks) = random_dims(seed::derive_index(seed::derive(ROOT, "filters"), i));
        let (b, h, w) = g.shape();
        let med = median_filter_temporal(&g, kt);
        let max = max_reflection_filter(&g, ks);
        check(med.data() == &oracles::temporal_median(g.data(), b, h, w, kt)[..], || format!("grid {i}: median"))?;
        check(max.data() == &oracles::max_reflection(g.data(), b, h, w, ks)[..], || format!("grid {i}: reflection"))?;
        d.floats(med.data());
        d.floats(max.data());
    }
    Ok("200 grids, median and reflection exact".into())
}

fn ramp_monotonicity(d: &mut Digest) -> Outcome {
    let (bins, k_t) = (12, 2);
    let (mut interior, mut kept) = (0usize, 0usize);
    for s in 0..20u64 {
        let mut rng = seed::rng(seed::derive_index(seed::derive(ROOT, "ramp"), s));
        let spec = SceneSpec {
            velocity: [-rng.random_range(30.0..60.0), 0.0],
            duration: 1.0,
            contrast: 0.01,
            seed: s,
            ..SceneSpec::new(SceneKind::Ramp, 24, 8)
        };
        let g = voxelize(&simulate_events(&spec, 200).map_err(|e| e.to_string())?, bins).map_err(|e| e.to_string())?;
        let f = median_filter_temporal(&g, k_t);
        for l in k_t + 1..=bins - 2 - k_t {
            for m in 0..g.height() {
                for n in 0..g.width() {
                    interior += 1;
                    kept += usize::from(f.get(l, m, n) == g.get(l, m, n));
                }
            }
        }
        d.floats(f.data());
    }
    check(interior > 0 && kept == interior, || format!("{kept}/{interior} interior entries unchanged"))?;
    Ok(format!("20 scenes, {kept}/{interior} interior entries unchanged"))
}

/// A stream whose events mostly land on a small hot blob, so the mask is
/// sparse.
fn hot_blob_stream(s: u64, n: usize, w: u32, h: u32) -> EventStream {
    let mut rng = seed::rng(s);
    let (bx, by, side) = (rng.random_range(0..w - 8), rng.random_range(0..h - 8), 8);
    let mut events: Vec<Event> = (0..n)
        .map(|_| {
            let (x, y) = if rng.random_bool(0.6) {
                (bx + rng.random_range(0..side), by + rng.random_range(0..side))
            } else {
                (rng.random_range(0..w), rng.random_range(0..h))
            };
            let p = if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
            Event::new(rng.random_range(0.0..1.0), x as u16, y as u16, p)
        })
        .collect();
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    EventStream::new(events, w, h, 0.0, 1.0).unwrap()
}

fn best_of<T>(runs: usize, mut f: impl FnMut() -> T) -> (T, Duration) {
    let mut best = Duration::MAX;
    let mut out = None;
    for _ in 0..runs {
        let t = Instant::now();
        let v = f();
        best = best.min(t.elapsed());
        out = Some(v);
    }
    (out.unwrap(), best)
}

fn sparse_dense(d: &mut Digest) -> Outcome {
    for i in 0..200u64 {
        let (g, kt, ks) = random_dims(seed::derive_index(seed::derive(ROOT, "sparse"), i));
        let p = FilterParams { k_t: kt, k_s: ks };
        let dense = protect(&g, p, ProtectMode::Dense);
        let sparse = protect(&g, p, ProtectMode::Sparse);
        let same = dense.data().iter().zip(sparse.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        check(same, || format!("grid {i}: sparse differs from dense"))?;
        d.floats(sparse.data());
    }
    let stream = hot_blob_stream(seed::derive(ROOT, "timing"), 300_000, 64, 64);
    let g = voxelize(&stream, 50).map_err(|e| e.to_string())?;
    let density = accumulation_mask(&g).density();
    check(density <= 0.05, || format!("mask density {density}"))?;
    let p = FilterParams::default();
    let (dense, td) = best_of(3, || protect(&g, p, ProtectMode::Dense));
    let (sparse, ts) = best_of(3, || protect(&g, p, ProtectMode::Sparse));
    check(dense == sparse, || "timing grid: sparse differs from dense".into())?;
    d.floats(sparse.data());
    let speedup = td.as_secs_f64() / ts.as_secs_f64();
    check(speedup >= 5.0, || format!("speedup {speedup:.1}x (dense {}, sparse {})", secs(td), secs(ts)))?;
    Ok(format!(
        "200 grids bit-identical; {} events, density {:.3}, dense {} vs sparse {} ({speedup:.1}x)",
        stream.len(),
        density,
        secs(td),
        secs(ts)
    ))
}

fn mask_blend(d: &mut Digest) -> Outcome {
    let mut untouched = 0;
    for i in 0..100u64 {
        let (g, kt, ks) = random_dims(seed::derive_index(seed::derive(ROOT, "blend"), i));
        let (b, h, w) = g.shape();
        let u = oracles::mask(g.data(), b, h, w);
        let mask = accumulation_mask(&g);
        check(mask.bits() == &u[..], || format!("grid {i}: mask"))?;
        let med = median_filter_temporal(&g, kt);
        let max = max_reflection_filter(&g, ks);
        let want = oracles::blend(g.data(), med.data(), max.data(), &u);
        let got = blend(&g, &med, &max, &mask).map_err(|e| e.to_string())?;
        let exact = got.data().iter().zip(&want).all(|(a, b)| a.to_bits() == b.to_bits());
        check(exact, || format!("grid {i}: blend"))?;
        for (j, v) in got.data().iter().enumerate() {
            if !u[j % (h * w)] {
                check(v.to_bits() == g.data()[j].to_bits(), || format!("grid {i}: U = 0 entry {j} changed"))?;
                untouched += 1;
            }
        }
        d.floats(got.data());
    }
    Ok(format!("100 grids exact, {untouched} U = 0 entries copied bit for bit"))
}

// Reconstruction network

fn gradients(d: &mut Digest) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut skipped: f64 = 0.0;
    for s in 0..20 {
        let (err, skip) = support::gradient_error(seed::derive_index(ROOT, s));
        check(err < 1e-3, || format!("seed {s}: relative error {err:e}"))?;
        check(skip < 0.15, || format!("seed {s}: {skip} of coordinates straddle a kink"))?;
        worst = worst.max(err);
        skipped = skipped.max(skip);
        d.floats(&[err, skip]);
    }
    Ok(format!("20 seeds, max relative error {worst:.1e}, at most {:.1}% of coordinates at kinks", 100.0 * skipped))
}

// Network-level protection

fn loopback(d: &mut Digest) -> Outcome {
    let root = seed::derive(ROOT, "loopback");
    for i in 0..100u64 {
        let mut rng = seed::rng(seed::derive_index(root, i));
        let (b, h, w) = (rng.random_range(1..=6), rng.random_range(3..=16), rng.random_range(3..=16));
        let net = ConvNet::<f32>::random(b, &DEFAULT_WIDTHS, (2, 4), rng.random()).map_err(|e| e.to_string())?;
        let wm = NoiseWatermark::generate(rng.random(), (b, h, w));
        let grid = VoxelGrid::from_data(b, h, w, (0..b * h * w).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
        let server = Server::spawn("127.0.0.1:0", MiddleService::from_net(&net)).map_err(|e| e.to_string())?;
        let ends = ClientEnds::from_net(&net, wm.clone()).map_err(|e| e.to_string())?;
        let mut client = SplitClient::connect(server.local_addr(), ends).map_err(|e| e.to_string())?;
        let got = client.reconstruct(&grid).map_err(|e| e.to_string())?;
        let want = net.forward(&infuse(&grid, &wm).unwrap()).unwrap();
        check(got == want, || format!("pair {i}: loopback differs from the local forward pass"))?;
        client.close().map_err(|e| e.to_string())?;
        server.shutdown().map_err(|e| e.to_string())?;
        d.floats(got.pixels());
    }

    let net = ConvNet::<f32>::random(2, &DEFAULT_WIDTHS, (2, 4), root).unwrap();
    let wm = NoiseWatermark::generate(root, (2, 6, 6));
    let server = Server::spawn("127.0.0.1:0", MiddleService::from_net(&net)).map_err(|e| e.to_string())?;
    let ends = ClientEnds::from_net(&net, wm).unwrap();
    let code = |r: evpriv::Result<Message>| match r {
        Err(Error::Remote { code, .. }) => Some(code),
        _ => None,
    };
    let mut c = SplitClient::connect(server.local_addr(), ends.clone()).map_err(|e| e.to_string())?;
    let mut frame = Message::ActUp(Tensor::from_data(8, 2, 2, vec![0.25f32; 32]).unwrap()).encode();
    let mid = frame.len() / 2;
    frame[mid] ^= 0x01;
    let got = code(c.send_raw(&frame));
    check(got == Some(ErrorCode::Malformed), || format!("corrupted frame answered with {got:?}"))?;
    let mut c = SplitClient::connect(server.local_addr(), ends.clone()).map_err(|e| e.to_string())?;
    let bad = Message::ActUp(Tensor::from_data(3, 2, 2, vec![0.25f32; 12]).unwrap()).encode();
    let got = code(c.send_raw(&bad));
    check(got == Some(ErrorCode::Shape), || format!("shape mismatch answered with {got:?}"))?;
    let mut c = SplitClient::connect(server.local_addr(), ends).map_err(|e| e.to_string())?;
    let probe = c.reconstruct(&VoxelGrid::zeros(2, 6, 6)).map_err(|e| e.to_string())?;
    d.floats(probe.pixels());
    Ok("100 pairs exact over TCP; corrupted frame and shape mismatch rejected, server kept serving".into())
}

fn attack_digest(o: &AttackOutcome) -> u64 {
    let mut d = Digest::default();
    d.text(&format!("{:?}", o.results));
    for net in [&o.original, &o.private, &o.generic, &o.targeted] {
        d.floats(&net.flat_params());
    }
    d.floats(o.watermark.values());
    d.floats(&o.original_trace);
    d.floats(&o.private_trace);
    d.finish()
}

/// Runs one attack experiment; returns its digest and a summary line.
fn attack_seed(root: u64) -> Result<(u64, String), String> {
    let start = Instant::now();
    let o = run_attack_experiment(root, &AttackExperimentConfig::default()).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    check(t < Duration::from_secs(300), || format!("seed {root}: took {}", secs(t)))?;
    let r = &o.results;
    let legit = r.legitimate.mae;
    for depth in SpliceDepth::ALL {
        let swapped = r.get(AttackKind::SwappedLayer, depth).unwrap().mae;
        check(swapped > legit, || format!("seed {root}: swapped {} MAE {swapped:.4} <= legitimate {legit:.4}", depth.label()))?;
    }
    let (clean, infused) = (r.generic_clean.mae, r.generic_infused.mae);
    check(infused > clean, || format!("seed {root}: generic MAE infused {infused:.4} <= clean {clean:.4}"))?;
    let min_swapped = SpliceDepth::ALL
        .iter()
        .map(|&dp| r.get(AttackKind::SwappedLayer, dp).unwrap().mae)
        .fold(f64::INFINITY, f64::min);
    Ok((
        attack_digest(&o),
        format!("seed {root}: legit {legit:.4} < swapped >= {min_swapped:.4}; generic clean {clean:.4} < infused {infused:.4} ({})", secs(t)),
    ))
}

fn attacks(digests: &mut Vec<u64>) -> Outcome {
    let mut lines = Vec::new();
    for s in ATTACK_SEEDS {
        let (d, line) = attack_seed(s)?;
        digests.push(d);
        lines.push(line);
    }
    Ok(lines.join("\n      "))
}

// Metrics

fn random_pair(s: u64) -> (FrameImage, FrameImage) {
    let mut rng = seed::rng(s);
    let (h, w) = (rng.random_range(16..=64), rng.random_range(16..=64));
    let a: Vec<f64> = (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect();
    let b = a.iter().map(|v| (v + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0)).collect();
    (FrameImage::new(h, w, a).unwrap(), FrameImage::new(h, w, b).unwrap())
}

fn metrics(d: &mut Digest) -> Outcome {
    let cfg = MetricConfig::default();
    check((cfg.c1, cfg.c2, cfg.ssim_window) == (6.5025, 58.5225, 11), || format!("constants {cfg:?}"))?;
    for i in 0..50u64 {
        let (a, b) = random_pair(seed::derive_index(seed::derive(ROOT, "metrics"), i));
        let (h, w) = (a.height(), a.width());
        let m = mae(&a, &b).map_err(|e| e.to_string())?;
        let p = psnr(&a, &b, &cfg).map_err(|e| e.to_string())?;
        let s = ssim(&a, &b, &cfg).map_err(|e| e.to_string())?;
        check((m - oracles::mae(a.pixels(), b.pixels())).abs() < 1e-9, || format!("pair {i}: mae"))?;
        check((p - oracles::psnr(a.pixels(), b.pixels(), 1.0)).abs() < 1e-9, || format!("pair {i}: psnr"))?;
        let want = oracles::ssim(a.pixels(), b.pixels(), h, w, 11, cfg.c1, cfg.c2, 255.0);
        check((s - want).abs() < 1e-9, || format!("pair {i}: ssim {s} vs {want}"))?;
        let same = ssim(&a, &a, &cfg).map_err(|e| e.to_string())?;
        check(same == 1.0, || format!("pair {i}: SSIM(I, I) = {same}"))?;
        d.floats(&[m, p, s]);
    }
    Ok("c1 6.5025, c2 58.5225, window 11; 50 pairs within 1e-9; SSIM(I, I) = 1".into())
}

// Localization

fn pnp(d: &mut Digest) -> Outcome {
    let start = Instant::now();
    let k = Intrinsics::default();
    let root = seed::derive(ROOT, "pnp");
    let (mut worst_t, mut worst_r): (f64, f64) = (0.0, 0.0);
    for s in 0..20u64 {
        let (truth, corrs) = support::pnp_problem(seed::derive_index(root, s), 50, 0, 0.0);
        let sol = pnp_ransac(&corrs, &k, &RansacConfig { seed: s, ..RansacConfig::default() }).map_err(|e| e.to_string())?;
        let e = pose_errors(&sol.pose, &truth);
        check(e.t_error < 1e-6 && e.r_error < 1e-4, || format!("noiseless seed {s}: {e:?}"))?;
        let worst = corrs.iter().map(|c| reprojection_error(&sol.pose, &k, c)).fold(0.0, f64::max);
        check(worst < 1e-6, || format!("noiseless seed {s}: residual {worst}"))?;
        (worst_t, worst_r) = (worst_t.max(e.t_error), worst_r.max(e.r_error));
        d.floats(&[e.t_error, e.r_error]);
    }
    let mut ok = 0;
    for s in 0..100u64 {
        let (truth, corrs) = support::pnp_problem(seed::derive_index(root, 1000 + s), 100, 30, 0.5);
        let sol = pnp_ransac(&corrs, &k, &RansacConfig { seed: s, ..RansacConfig::default() }).map_err(|e| e.to_string())?;
        let e = pose_errors(&sol.pose, &truth);
        ok += usize::from(e.t_error < 0.01);
        d.floats(&[e.t_error, e.r_error]);
    }
    let t = start.elapsed();
    check(ok >= 95, || format!("{ok}/100 noisy trials within 0.01"))?;
    check(t < Duration::from_secs(60), || format!("took {}", secs(t)))?;
    Ok(format!("noiseless max t {worst_t:.1e}, R {worst_r:.1e} deg; {ok}/100 noisy trials within 0.01; {}", secs(t)))
}

fn localization(d: &mut Digest) -> Outcome {
    let cfg = LocalizationExperimentConfig {
        localize: evpriv_core::localization::LocalizeConfig { seed: ROOT, ..Default::default() },
        ..LocalizationExperimentConfig::default()
    };
    let o = run_localization_experiment(ROOT, seed::derive(ROOT, "queries"), &cfg).map_err(|e| e.to_string())?;
    let (p, q) = (&o.plain_report, &o.protected_report);
    check(o.map.references.len() == 20 && p.n == 50, || format!("{} references, {} queries", o.map.references.len(), p.n))?;
    check(p.accuracy >= 0.90, || format!("plain accuracy {}", p.accuracy))?;
    let drop = p.accuracy - q.accuracy;
    check(drop <= 0.10, || format!("protection drops accuracy by {drop:.2}"))?;
    d.text(&format!("{:?}{:?}{:?}{:?}", o.plain, o.protected, p, q));
    Ok(format!(
        "plain accuracy {:.2} (median t {:.4}, R {:.3} deg); protected {:.2} (median t {:.4}, R {:.3} deg)",
        p.accuracy, p.median_t, p.median_r, q.accuracy, q.median_t, q.median_r
    ))
}

type Criterion = (&'static str, fn(&mut Digest) -> Outcome);

const CRITERIA: [Criterion; 10] = [
    ("voxelizer matches the brute-force formula", voxelizer),
    ("filters match brute-force oracles", filters),
    ("median keeps monotone ramp interiors", ramp_monotonicity),
    ("sparse protection equals dense and is faster", sparse_dense),
    ("mask and blend match direct recomputation", mask_blend),
    ("analytic gradients match finite differences", gradients),
    ("split inference over TCP equals the local forward", loopback),
    ("attacks degrade reconstructions", |_| unreachable!()),
    ("metric constants and oracles", metrics),
    ("PnP-RANSAC accuracy", pnp),
];

fn guarded<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn report(n: usize, name: &str, r: &Outcome) -> bool {
    match r {
        Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
        Err(why) => println!("FAIL {n:>2} {name}: {why}"),
    }
    r.is_ok()
}

fn main() -> ExitCode {
    let mut passed = true;
    let mut first: Vec<Option<u64>> = Vec::new();
    let mut attack_digests = Vec::new();

    for (i, (name, f)) in CRITERIA.iter().enumerate() {
        let n = i + 1;
        let r = if n == 8 {
            guarded(|| attacks(&mut attack_digests))
        } else {
            let mut d = Digest::default();
            let r = guarded(|| f(&mut d));
            first.push(r.is_ok().then(|| d.finish()));
            r
        };
        passed &= report(n, name, &r);
    }
    let mut d = Digest::default();
    let r = guarded(|| localization(&mut d));
    first.push(r.is_ok().then(|| d.finish()));
    passed &= report(11, "end-to-end synthetic localization", &r);

    let r = guarded(|| {
        let mut differ = Vec::new();
        let rerun = CRITERIA.iter().enumerate().filter(|(i, _)| *i != 7).map(|(i, c)| (i + 1, c.1));
        let all = rerun.chain([(11, localization as fn(&mut Digest) -> Outcome)]);
        for ((n, f), want) in all.zip(&first) {
            let Some(want) = want else {
                differ.push(format!("{n} (failed, not compared)"));
                continue;
            };
            let mut d = Digest::default();
            let _ = f(&mut d);
            if d.finish() != *want {
                differ.push(n.to_string());
            }
        }
        // One attack seed is enough to exercise training, attacks and evaluation.
        match (attack_seed(ATTACK_SEEDS[0]), attack_digests.first()) {
            (Ok((again, _)), Some(want)) if again == *want => {}
            _ => differ.push("8".into()),
        }
        check(differ.is_empty(), || format!("criteria {} differ between runs", differ.join(", ")))?;
        Ok("criteria 1-11 rerun with the same root seed, outputs bit-identical".to_string())
    });
    passed &= report(12, "reproducibility", &r);

    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
