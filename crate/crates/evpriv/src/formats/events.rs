//! Event streams as CSV text or `EVS1` binary.
//!
//! CSV: one `t,x,y,p` record per line; lines starting with `#` are comments.
//! A comment of the form `# evpriv width=W height=H t0=T duration=D` carries
//! the sensor size and window; without it the caller supplies the size and
//! the window spans the first to the last event.
//!
//! `EVS1`: magic, u32 W, u32 H, u64 count, then per event u64 microseconds,
//! u16 x, u16 y, i8 polarity (+1 or -1).

use std::fmt::Write as _;

use evpriv_core::events::{Event, EventStream, Polarity};

use super::{Reader, Writer};
use crate::error::{Error, Result};

pub const EVS_MAGIC: [u8; 4] = *b"EVS1";

/// How the polarity column is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolarityCoding {
    /// `1` and `-1`.
    #[default]
    Signed,
    /// `1` and `0`, with `0` meaning negative.
    Binary,
}

/// Sensor size and window found in (or supplied for) a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CsvMeta {
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub t0: Option<f64>,
    pub duration: Option<f64>,
}

fn parse_meta(line: &str, meta: &mut CsvMeta) {
    let mut words = line.trim_start_matches('#').split_whitespace();
    if words.next() != Some("evpriv") {
        return;
    }
    for kv in words {
        let Some((k, v)) = kv.split_once('=') else { continue };
        match k {
            "width" => meta.width = v.parse().ok(),
            "height" => meta.height = v.parse().ok(),
            "t0" => meta.t0 = v.parse().ok(),
            "duration" => meta.duration = v.parse().ok(),
            _ => {}
        }
    }
}

fn parse_polarity(s: &str, coding: PolarityCoding, line: usize) -> Result<Polarity> {
    let p = match (s, coding) {
        ("1" | "+1", _) => Some(Polarity::Positive),
        ("-1", PolarityCoding::Signed) | ("0", PolarityCoding::Binary) => Some(Polarity::Negative),
        _ => None,
    };
    p.ok_or_else(|| Error::format(format!("line {line}: polarity {s:?} is not valid for {coding:?} coding")))
}

/// Parses CSV events; `sensor` fills in a size missing from the file and
/// overrides one that is present.
pub fn parse_csv(text: &str, sensor: CsvMeta, coding: PolarityCoding) -> Result<EventStream> {
    let mut meta = CsvMeta::default();
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        if s.starts_with('#') {
            parse_meta(s, &mut meta);
            continue;
        }
        let f: Vec<&str> = s.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(Error::format(format!("line {line}: expected 4 fields t,x,y,p, found {}", f.len())));
        }
        let bad = |what: &str| Error::format(format!("line {line}: malformed {what} {:?}", raw));
        let t: f64 = f[0].parse().map_err(|_| bad("timestamp"))?;
        if !t.is_finite() {
            return Err(bad("timestamp"));
        }
        let x: u16 = f[1].parse().map_err(|_| bad("x coordinate"))?;
        let y: u16 = f[2].parse().map_err(|_| bad("y coordinate"))?;
        let p = parse_polarity(f[3], coding, line)?;
        events.push((line, Event::new(t, x, y, p)));
    }
    let width = sensor.width.or(meta.width).ok_or_else(|| Error::Usage("sensor width unknown".into()))?;
    let height = sensor.height.or(meta.height).ok_or_else(|| Error::Usage("sensor height unknown".into()))?;
    for (line, e) in &events {
        if u32::from(e.x) >= width || u32::from(e.y) >= height {
            return Err(Error::format(format!(
                "line {line}: ({}, {}) outside the {width}x{height} sensor",
                e.x, e.y
            )));
        }
    }
    let events: Vec<Event> = events.into_iter().map(|(_, e)| e).collect();
    let stream = match (sensor.t0.or(meta.t0), sensor.duration.or(meta.duration)) {
        (Some(t0), Some(d)) => EventStream::from_unsorted(events, width, height, t0, d),
        _ => {
            let mut events = events;
            events.sort_by(|a, b| a.t.total_cmp(&b.t));
            EventStream::spanning(events, width, height)
        }
    };
    stream.map_err(|e| Error::format(e.to_string()))
}

pub fn write_csv(stream: &EventStream, coding: PolarityCoding) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# evpriv width={} height={} t0={:?} duration={:?}",
        stream.width(),
        stream.height(),
        stream.t0(),
        stream.duration()
    );
    out.push_str("# t,x,y,p\n");
    for e in stream.events() {
        let p = match (e.p, coding) {
            (Polarity::Positive, _) => "1",
            (Polarity::Negative, PolarityCoding::Signed) => "-1",
            (Polarity::Negative, PolarityCoding::Binary) => "0",
        };
        let _ = writeln!(out, "{:?},{},{},{}", e.t, e.x, e.y, p);
    }
    out
}

/// Timestamps are rounded to whole microseconds and must be non-negative.
pub fn write_evs(stream: &EventStream) -> Result<Vec<u8>> {
    let mut w = Writer::new(&EVS_MAGIC);
    w.u32(stream.width());
    w.u32(stream.height());
    w.u64(stream.len() as u64);
    for e in stream.events() {
        let us = (e.t * 1e6).round();
        if !(0.0..=u64::MAX as f64).contains(&us) {
            return Err(Error::format(format!("timestamp {} cannot be stored as microseconds", e.t)));
        }
        w.u64(us as u64);
        w.u16(e.x);
        w.u16(e.y);
        w.i8(e.p.sign());
    }
    Ok(w.buf)
}

pub fn read_evs(bytes: &[u8]) -> Result<EventStream> {
    let mut r = Reader::new(bytes, "EVS1");
    r.expect_magic(&EVS_MAGIC)?;
    let (width, height) = (r.u32()?, r.u32()?);
    let count = r.u64()?;
    let count = usize::try_from(count).map_err(|_| Error::format("EVS1: event count too large"))?;
    r.check_room(count, 13)?;
    let mut events = Vec::with_capacity(count);
    for i in 0..count {
        let t = r.u64()? as f64 * 1e-6;
        let (x, y) = (r.u16()?, r.u16()?);
        let sign = r.i8()?;
        let p = Polarity::from_sign(sign)
            .filter(|_| sign != 0)
            .ok_or_else(|| Error::format(format!("EVS1: event {i} has polarity {sign}")))?;
        if u32::from(x) >= width || u32::from(y) >= height {
            return Err(Error::format(format!("EVS1: event {i} at ({x}, {y}) outside {width}x{height}")));
        }
        events.push(Event::new(t, x, y, p));
    }
    r.finish()?;
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    EventStream::spanning(events, width, height).map_err(|e| Error::format(e.to_string()))
}

/// Reads either format, recognizing `EVS1` by its magic.
pub fn read_events(bytes: &[u8], sensor: CsvMeta, coding: PolarityCoding) -> Result<EventStream> {
    if bytes.starts_with(&EVS_MAGIC) {
        return read_evs(bytes);
    }
    let text = std::str::from_utf8(bytes).map_err(|_| Error::format("event file is neither EVS1 nor UTF-8 CSV"))?;
    parse_csv(text, sensor, coding)
}
