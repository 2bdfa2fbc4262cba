//! Synthetic intensity scenes under constant-velocity translation and an
//! idealized contrast-threshold event generator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, FrameImage, Polarity};
use crate::seed;

/// Default log-intensity contrast threshold.
pub const DEFAULT_CONTRAST: f64 = 0.2;
/// Intensities are clamped into this range before taking logarithms.
pub const MIN_INTENSITY: f64 = 0.1;
pub const MAX_INTENSITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// Intensity rises linearly along x across the scene tile.
    Ramp,
    /// A vertical step edge between dark and bright halves.
    Step,
    /// A smooth random field built from periodic sinusoids.
    Texture,
}

/// A periodic intensity tile translated across the sensor at constant velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub width: usize,
    pub height: usize,
    /// Scene velocity in pixels per second, `[vx, vy]`.
    pub velocity: [f64; 2],
    /// Contrast threshold in log-intensity units.
    pub contrast: f64,
    pub duration: f64,
    pub seed: u64,
    /// Size of the periodic scene tile `(width, height)`; defaults to four
    /// times the sensor size so short motions do not wrap.
    pub tile: (usize, usize),
}

impl SceneSpec {
    pub fn new(kind: SceneKind, width: usize, height: usize) -> Self {
        SceneSpec {
            kind,
            width,
            height,
            velocity: [20.0, 0.0],
            contrast: DEFAULT_CONTRAST,
            duration: 0.5,
            seed: 0,
            tile: (4 * width, 4 * height),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contrast > 0.0) {
            return Err(Error::InvalidArgument(format!("contrast {} must be positive", self.contrast)));
        }
        if !(self.duration > 0.0) {
            return Err(Error::InvalidArgument(format!("duration {} must be positive", self.duration)));
        }
        if self.width == 0 || self.height == 0 || self.tile.0 == 0 || self.tile.1 == 0 {
            return Err(Error::InvalidArgument("scene dimensions must be positive".into()));
        }
        if self.width > usize::from(u16::MAX) || self.height > usize::from(u16::MAX) {
            return Err(Error::InvalidArgument("sensor larger than 65535 pixels".into()));
        }
        if !self.velocity.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("scene velocity"));
        }
        Ok(())
    }
}

/// A materialized scene tile.
#[derive(Debug, Clone)]
pub struct Scene {
    spec: SceneSpec,
    tile: Vec<f64>,
}

impl Scene {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        spec.validate()?;
        let (tw, th) = spec.tile;
        let mut tile = vec![0.0; tw * th];
        match spec.kind {
            SceneKind::Ramp => {
                for r in 0..th {
                    for c in 0..tw {
                        tile[r * tw + c] = MIN_INTENSITY + (MAX_INTENSITY - MIN_INTENSITY) * c as f64 / tw as f64;
                    }
                }
            }
            SceneKind::Step => {
                let edge = spec.width / 2;
                for r in 0..th {
                    for c in 0..tw {
                        let bright = c >= edge && c < edge + tw / 2;
                        tile[r * tw + c] = if bright { MAX_INTENSITY } else { MIN_INTENSITY };
                    }
                }
            }
            SceneKind::Texture => {
                let mut rng = seed::rng(seed::derive(spec.seed, "texture"));
                let waves: Vec<(f64, f64, f64, f64)> = (0..6)
                    .map(|_| {
                        let fx = rng.random_range(0..4) as f64;
                        let fy = rng.random_range(0..4) as f64;
                        let fx = if fx == 0.0 && fy == 0.0 { 1.0 } else { fx };
                        (fx, fy, rng.random_range(0.0..2.0 * PI), rng.random_range(0.3..1.0))
                    })
                    .collect();
                for r in 0..th {
                    for c in 0..tw {
                        let (u, v) = (c as f64 / tw as f64, r as f64 / th as f64);
                        tile[r * tw + c] = waves
                            .iter()
                            .map(|&(fx, fy, ph, a)| a * libm::sin(2.0 * PI * (fx * u + fy * v) + ph))
                            .sum();
                    }
                }
                let lo = tile.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = tile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let span = (hi - lo).max(1e-12);
                for v in &mut tile {
                    *v = MIN_INTENSITY + (MAX_INTENSITY - MIN_INTENSITY) * (*v - lo) / span;
                }
            }
        }
        Ok(Scene { spec, tile })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    #[inline]
    fn tile_at(&self, c: i64, r: i64) -> f64 {
        let (tw, th) = (self.spec.tile.0 as i64, self.spec.tile.1 as i64);
        self.tile[(r.rem_euclid(th) * tw + c.rem_euclid(tw)) as usize]
    }

    /// Bilinear sample of the periodic tile at continuous coordinates.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let (x0, y0) = (libm::floor(x), libm::floor(y));
        let (fx, fy) = (x - x0, y - y0);
        let (c, r) = (x0 as i64, y0 as i64);
        let top = self.tile_at(c, r) * (1.0 - fx) + self.tile_at(c + 1, r) * fx;
        let bottom = self.tile_at(c, r + 1) * (1.0 - fx) + self.tile_at(c + 1, r + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Intensity frame at time `t`; the scene content at pixel `u` is the tile
    /// at `u - v t`.
    pub fn render(&self, t: f64) -> Result<FrameImage> {
        if !(0.0..=self.spec.duration).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside [0, {}]",
                self.spec.duration
            )));
        }
        let (w, h) = (self.spec.width, self.spec.height);
        let (dx, dy) = (self.spec.velocity[0] * t, self.spec.velocity[1] * t);
        let mut pixels = Vec::with_capacity(w * h);
        for r in 0..h {
            for c in 0..w {
                let v = self.sample(c as f64 - dx, r as f64 - dy);
                pixels.push(v.clamp(MIN_INTENSITY, MAX_INTENSITY));
            }
        }
        FrameImage::new(h, w, pixels)
    }
}

pub fn render_frame(spec: &SceneSpec, t: f64) -> Result<FrameImage> {
    Scene::new(spec.clone())?.render(t)
}

/// Per-pixel residual accumulator that turns successive log-intensity frames
/// into events.
///
/// Each pixel keeps the log-intensity change not yet reported. Whenever the
/// residual reaches `±C` an event of that sign fires and the residual moves
/// back by `pC`; the timestamp is interpolated linearly inside the step.
#[derive(Debug, Clone)]
pub struct ContrastSimulator {
    width: usize,
    height: usize,
    contrast: f64,
    residual: Vec<f64>,
    last_log: Vec<f64>,
}

impl ContrastSimulator {
    pub fn new(first: &FrameImage, contrast: f64) -> Result<Self> {
        if !(contrast > 0.0) {
            return Err(Error::InvalidArgument(format!("contrast {contrast} must be positive")));
        }
        Ok(ContrastSimulator {
            width: first.width(),
            height: first.height(),
            contrast,
            residual: vec![0.0; first.pixels().len()],
            last_log: log_frame(first),
        })
    }

    /// Advances from the previous frame (at `t_prev`) to `next` (at `t_next`),
    /// appending fired events to `out` in pixel order.
    pub fn advance(&mut self, next: &FrameImage, t_prev: f64, t_next: f64, out: &mut Vec<Event>) -> Result<()> {
        if next.width() != self.width || next.height() != self.height {
            return Err(crate::error::shape_err(
                (self.height, self.width),
                (next.height(), next.width()),
            ));
        }
        let c = self.contrast;
        let dt = t_next - t_prev;
        for (i, &px) in next.pixels().iter().enumerate() {
            let l = libm::log(px.clamp(MIN_INTENSITY, MAX_INTENSITY));
            let delta = l - self.last_log[i];
            self.last_log[i] = l;
            if delta == 0.0 {
                continue;
            }
            let r = self.residual[i];
            let total = r + delta;
            let (sign, fired) = if total >= c {
                (1.0, libm::floor(total / c))
            } else if total <= -c {
                (-1.0, libm::floor(-total / c))
            } else {
                (0.0, 0.0)
            };
            let fired = fired as u64;
            let (x, y) = ((i % self.width) as u16, (i / self.width) as u16);
            let polarity = if sign > 0.0 { Polarity::Positive } else { Polarity::Negative };
            for j in 1..=fired {
                let level = sign * c * j as f64;
                let frac = ((level - r) / delta).clamp(0.0, 1.0);
                out.push(Event::new(t_prev + frac * dt, x, y, polarity));
            }
            self.residual[i] = total - sign * c * fired as f64;
        }
        Ok(())
    }
}

fn log_frame(frame: &FrameImage) -> Vec<f64> {
    frame
        .pixels()
        .iter()
        .map(|&p| libm::log(p.clamp(MIN_INTENSITY, MAX_INTENSITY)))
        .collect()
}

/// Converts a sequence of frames sampled at `times` into a sorted event stream
/// covering `[times[0], times[last]]`.
pub fn events_from_frames(frames: &[FrameImage], times: &[f64], contrast: f64) -> Result<EventStream> {
    if frames.len() != times.len() || frames.is_empty() {
        return Err(Error::InvalidArgument("need one timestamp per frame".into()));
    }
    let mut sim = ContrastSimulator::new(&frames[0], contrast)?;
    let mut events = Vec::new();
    for k in 1..frames.len() {
        sim.advance(&frames[k], times[k - 1], times[k], &mut events)?;
    }
    let (w, h) = (frames[0].width() as u32, frames[0].height() as u32);
    EventStream::from_unsorted(events, w, h, times[0], times[times.len() - 1] - times[0])
}

/// Simulates the event stream of a scene sampled at `substeps` uniform steps.
pub fn simulate_events(spec: &SceneSpec, substeps: usize) -> Result<EventStream> {
    if substeps < 2 {
        return Err(Error::InvalidArgument("at least two substeps are required".into()));
    }
    let scene = Scene::new(spec.clone())?;
    let step_time = |s: usize| spec.duration * s as f64 / substeps as f64;
    let mut sim = ContrastSimulator::new(&scene.render(0.0)?, spec.contrast)?;
    let mut events = Vec::new();
    for s in 1..=substeps {
        let frame = scene.render(step_time(s))?;
        sim.advance(&frame, step_time(s - 1), step_time(s), &mut events)?;
    }
    EventStream::from_unsorted(events, spec.width as u32, spec.height as u32, 0.0, spec.duration)
}
