//! Event streams, voxel grids and the frame-like event representations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};

/// Number of temporal bins used when none is requested explicitly.
pub const DEFAULT_BINS: usize = 50;

/// Sign of a brightness change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            1 => Some(Polarity::Positive),
            -1 => Some(Polarity::Negative),
            _ => None,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    pub fn value(self) -> f64 {
        f64::from(self.sign())
    }
}

/// A single brightness-change event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Timestamp in seconds.
    pub t: f64,
    /// Pixel column.
    pub x: u16,
    /// Pixel row.
    pub y: u16,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: f64, x: u16, y: u16, p: Polarity) -> Self {
        Event { t, x, y, p }
    }
}

/// A time-ordered stream of events from a sensor of fixed resolution.
///
/// The stream covers the closed interval `[t0, t0 + duration]` and every event
/// lies inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    width: u32,
    height: u32,
    t0: f64,
    duration: f64,
}

impl EventStream {
    /// Builds a stream from events that are already sorted by time.
    pub fn new(events: Vec<Event>, width: u32, height: u32, t0: f64, duration: f64) -> Result<Self> {
        if !t0.is_finite() || !duration.is_finite() || duration < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "stream window t0={t0}, duration={duration}"
            )));
        }
        let end = t0 + duration;
        let mut prev = f64::NEG_INFINITY;
        for (i, e) in events.iter().enumerate() {
            if u32::from(e.x) >= width || u32::from(e.y) >= height {
                return Err(Error::OutOfBounds(format!(
                    "event {i} at ({}, {}) outside {width}x{height}",
                    e.x, e.y
                )));
            }
            if !e.t.is_finite() || e.t < t0 || e.t > end {
                return Err(Error::OutOfBounds(format!(
                    "event {i} at t={} outside [{t0}, {end}]",
                    e.t
                )));
            }
            if e.t < prev {
                return Err(Error::InvalidArgument(format!("event {i} is out of time order")));
            }
            prev = e.t;
        }
        Ok(EventStream {
            events,
            width,
            height,
            t0,
            duration,
        })
    }

    /// Builds a stream from events in any order; events are stably sorted by time.
    pub fn from_unsorted(
        mut events: Vec<Event>,
        width: u32,
        height: u32,
        t0: f64,
        duration: f64,
    ) -> Result<Self> {
        if events.iter().any(|e| !e.t.is_finite()) {
            return Err(Error::NonFinite("event timestamps"));
        }
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        Self::new(events, width, height, t0, duration)
    }

    /// Builds a stream whose window is the span of the (sorted) events.
    pub fn spanning(events: Vec<Event>, width: u32, height: u32) -> Result<Self> {
        let (t0, duration) = match (events.first(), events.last()) {
            (Some(a), Some(b)) => (a.t, b.t - a.t),
            _ => (0.0, 0.0),
        };
        Self::new(events, width, height, t0, duration)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.duration
    }

    pub fn polarity_sum(&self) -> i64 {
        self.events.iter().map(|e| i64::from(e.p.sign())).sum()
    }
}

/// A `bins x height x width` tensor of signed event accumulations, stored
/// row-major with the temporal bin as the slowest axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    bins: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
    t0: f64,
    duration: f64,
}

impl VoxelGrid {
    pub fn zeros(bins: usize, height: usize, width: usize) -> Self {
        VoxelGrid {
            bins,
            height,
            width,
            data: vec![0.0; bins * height * width],
            t0: 0.0,
            duration: 0.0,
        }
    }

    pub fn from_data(bins: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != bins * height * width {
            return Err(shape_err(bins * height * width, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("voxel grid"));
        }
        Ok(VoxelGrid {
            bins,
            height,
            width,
            data,
            t0: 0.0,
            duration: 0.0,
        })
    }

    pub fn with_window(mut self, t0: f64, duration: f64) -> Self {
        self.t0 = t0;
        self.duration = duration;
        self
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.bins, self.height, self.width)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    #[inline]
    pub fn index(&self, l: usize, m: usize, n: usize) -> usize {
        (l * self.height + m) * self.width + n
    }

    #[inline]
    pub fn get(&self, l: usize, m: usize, n: usize) -> f64 {
        self.data[self.index(l, m, n)]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Values along the temporal axis at pixel `(m, n)`.
    pub fn column(&self, m: usize, n: usize) -> impl Iterator<Item = f64> + '_ {
        let plane = self.height * self.width;
        let offset = m * self.width + n;
        (0..self.bins).map(move |l| self.data[l * plane + offset])
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn same_shape(&self, other: &VoxelGrid) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(shape_err(self.shape(), other.shape()));
        }
        Ok(())
    }
}

/// A grayscale image with pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl FrameImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(shape_err(height * width, pixels.len()));
        }
        if pixels.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::NonFinite("frame image"));
        }
        Ok(FrameImage {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        FrameImage {
            height,
            width,
            pixels: vec![value.clamp(0.0, 1.0); height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn same_shape(&self, other: &FrameImage) -> Result<()> {
        if (self.height, self.width) != (other.height, other.width) {
            return Err(shape_err(
                (self.height, self.width),
                (other.height, other.width),
            ));
        }
        Ok(())
    }
}

/// Normalized timestamp `(B - 1) / duration * (t - t0)`, clamped to `[0, B - 1]`.
///
/// Zero-length windows and single-bin grids map every event to bin 0.
#[inline]
pub fn normalized_time(t: f64, t0: f64, duration: f64, bins: usize) -> f64 {
    if duration <= 0.0 || bins <= 1 {
        return 0.0;
    }
    let last = (bins - 1) as f64;
    (last / duration * (t - t0)).clamp(0.0, last)
}

/// Accumulates event polarities into `bins` temporal bins with a triangular
/// (bilinear) kernel in normalized time.
pub fn voxelize(stream: &EventStream, bins: usize) -> Result<VoxelGrid> {
    if bins == 0 {
        return Err(Error::InvalidArgument("voxel grid needs at least one bin".into()));
    }
    let (h, w) = (stream.height() as usize, stream.width() as usize);
    let mut grid = VoxelGrid::zeros(bins, h, w).with_window(stream.t0(), stream.duration());
    let plane = h * w;
    for e in stream.events() {
        let ts = normalized_time(e.t, stream.t0(), stream.duration(), bins);
        let pix = usize::from(e.y) * w + usize::from(e.x);
        let lo = ts as usize; // ts >= 0
        let p = e.p.value();
        for n in lo..(lo + 2).min(bins) {
            let weight = (1.0 - libm::fabs(n as f64 - ts)).max(0.0);
            if weight > 0.0 {
                grid.data[n * plane + pix] += p * weight;
            }
        }
    }
    Ok(grid)
}

/// Splits a stream into consecutive slices of `count_per_slice` events.
///
/// Slice windows tile the parent window: the first starts at the stream start,
/// each later one starts where the previous ended (at its last event) and the
/// final slice ends at the stream end.
pub fn slice_stream(stream: &EventStream, count_per_slice: usize) -> Result<Vec<EventStream>> {
    if count_per_slice == 0 {
        return Err(Error::InvalidArgument("slice size must be positive".into()));
    }
    let chunks: Vec<&[Event]> = stream.events().chunks(count_per_slice).collect();
    let mut out = Vec::with_capacity(chunks.len());
    let mut start = stream.t0();
    for (i, chunk) in chunks.iter().enumerate() {
        let end = if i + 1 == chunks.len() {
            stream.end()
        } else {
            chunk[chunk.len() - 1].t
        };
        out.push(EventStream {
            events: chunk.to_vec(),
            width: stream.width,
            height: stream.height,
            t0: start,
            duration: (end - start).max(0.0),
        });
        start = end;
    }
    Ok(out)
}

/// Last event at every pixel, in input order.
fn last_events(stream: &EventStream) -> Vec<Option<Event>> {
    let w = stream.width() as usize;
    let mut last = vec![None; w * stream.height() as usize];
    for e in stream.events() {
        last[usize::from(e.y) * w + usize::from(e.x)] = Some(*e);
    }
    last
}

/// 1 where the most recent event at a pixel is positive, 0 where it is
/// negative and 0.5 where the pixel saw no events.
pub fn binary_event_image(stream: &EventStream) -> FrameImage {
    let pixels = last_events(stream)
        .into_iter()
        .map(|e| match e.map(|e| e.p) {
            Some(Polarity::Positive) => 1.0,
            Some(Polarity::Negative) => 0.0,
            None => 0.5,
        })
        .collect();
    FrameImage {
        height: stream.height() as usize,
        width: stream.width() as usize,
        pixels,
    }
}

/// Per-pixel event counts divided by the largest count.
pub fn event_histogram(stream: &EventStream) -> FrameImage {
    let w = stream.width() as usize;
    let mut counts = vec![0u64; w * stream.height() as usize];
    for e in stream.events() {
        counts[usize::from(e.y) * w + usize::from(e.x)] += 1;
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    let pixels = counts
        .into_iter()
        .map(|c| if max == 0 { 0.0 } else { c as f64 / max as f64 })
        .collect();
    FrameImage {
        height: stream.height() as usize,
        width: w,
        pixels,
    }
}

/// Most recent timestamp per pixel, normalized into the stream window.
///
/// Pixels without events are 0. A zero-length window maps active pixels to 1.
pub fn timestamp_image(stream: &EventStream) -> FrameImage {
    let (t0, dt) = (stream.t0(), stream.duration());
    let pixels = last_events(stream)
        .into_iter()
        .map(|e| match e {
            None => 0.0,
            Some(_) if dt <= 0.0 => 1.0,
            Some(e) => ((e.t - t0) / dt).clamp(0.0, 1.0),
        })
        .collect();
    FrameImage {
        height: stream.height() as usize,
        width: stream.width() as usize,
        pixels,
    }
}

/// Rank of each pixel's most recent timestamp among the distinct most recent
/// timestamps, divided by the number of distinct values.
pub fn sorted_timestamp_image(stream: &EventStream) -> FrameImage {
    let last = last_events(stream);
    let mut distinct: Vec<f64> = last.iter().flatten().map(|e| e.t).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let ranks = distinct.len() as f64;
    let pixels = last
        .into_iter()
        .map(|e| match e {
            None => 0.0,
            Some(e) => {
                let rank = distinct.partition_point(|v| *v < e.t) + 1;
                rank as f64 / ranks
            }
        })
        .collect();
    FrameImage {
        height: stream.height() as usize,
        width: stream.width() as usize,
        pixels,
    }
}
