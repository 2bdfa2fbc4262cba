//! Summary tables over a results directory.
//!
//! Inputs, all optional: `attacks.csv` from `attack`, `localization.csv`
//! from `localize`, and any `*.vox` grids, on which the filter properties are
//! checked. Missing inputs produce header-only tables and are listed by name.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use evpriv_core::events::VoxelGrid;
use evpriv_core::localization::AccuracyReport;
use evpriv_core::privacy::{
    accumulation_mask, max_reflection_filter, median_filter_temporal, protect, protect_with_mask, FilterParams,
    ProtectMode,
};
use evpriv_core::split::{AttackKind, AttackReport, SpliceDepth};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::read_file;
use crate::formats::voxel::read_vox;

pub const ATTACKS_FILE: &str = "attacks.csv";
pub const LOCALIZATION_FILE: &str = "localization.csv";
pub const LOCALIZATION_HEADER: &str = "split,median_t,median_r,accuracy,n";
pub const FILTERS_HEADER: &str = "variant,property,grids,passed,pass_rate";

/// One row of `localization.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationRow {
    pub split: String,
    #[serde(serialize_with = "finite_or_inf")]
    pub median_t: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub median_r: f64,
    pub accuracy: f64,
    pub n: usize,
}

impl LocalizationRow {
    pub fn new(split: &str, r: &AccuracyReport) -> Self {
        LocalizationRow { split: split.into(), median_t: r.median_t, median_r: r.median_r, accuracy: r.accuracy, n: r.n }
    }

    fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.split, self.median_t, self.median_r, self.accuracy, self.n)
    }
}

pub fn localization_csv(rows: &[LocalizationRow]) -> String {
    let mut out = format!("{LOCALIZATION_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackRow {
    pub attack: &'static str,
    pub depth: &'static str,
    pub mae: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub psnr: f64,
    pub ssim: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterRow {
    pub variant: &'static str,
    pub property: &'static str,
    pub grids: usize,
    pub passed: usize,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub attacks: Vec<AttackRow>,
    pub localization: Vec<LocalizationRow>,
    pub filters: Vec<FilterRow>,
    pub missing: Vec<String>,
}

/// JSON has no infinity; infinite values become the string `"inf"`.
pub fn finite_or_inf<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

fn field<T: std::str::FromStr>(v: &str, what: &str, file: &str, line: usize) -> Result<T> {
    v.parse().map_err(|_| Error::format(format!("{file} line {line}: bad {what} {v:?}")))
}

fn data_lines<'a>(text: &'a str, header: &str, file: &str) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => Ok(lines.map(|(i, l)| (i + 1, l))),
        _ => Err(Error::format(format!("{file}: expected header {header:?}"))),
    }
}

pub fn parse_attacks(text: &str) -> Result<Vec<AttackRow>> {
    let mut rows = Vec::new();
    for (line, l) in data_lines(text, AttackReport::CSV_HEADER, ATTACKS_FILE)? {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 6 {
            return Err(Error::format(format!("{ATTACKS_FILE} line {line}: expected 6 fields")));
        }
        let attack = AttackKind::ALL
            .iter()
            .map(|a| a.label())
            .find(|a| *a == f[0])
            .ok_or_else(|| Error::format(format!("{ATTACKS_FILE} line {line}: unknown attack {:?}", f[0])))?;
        let depth = SpliceDepth::ALL
            .iter()
            .map(|d| d.label())
            .find(|d| *d == f[1])
            .ok_or_else(|| Error::format(format!("{ATTACKS_FILE} line {line}: unknown depth {:?}", f[1])))?;
        rows.push(AttackRow {
            attack,
            depth,
            mae: field(f[2], "mae", ATTACKS_FILE, line)?,
            psnr: field(f[3], "psnr", ATTACKS_FILE, line)?,
            ssim: field(f[4], "ssim", ATTACKS_FILE, line)?,
            n: field(f[5], "n", ATTACKS_FILE, line)?,
        });
    }
    let rank = |r: &AttackRow| {
        let a = AttackKind::ALL.iter().position(|k| k.label() == r.attack);
        let d = SpliceDepth::ALL.iter().position(|k| k.label() == r.depth);
        (a, d)
    };
    rows.sort_by_key(rank);
    Ok(rows)
}

pub fn parse_localization(text: &str) -> Result<Vec<LocalizationRow>> {
    let mut rows = Vec::new();
    for (line, l) in data_lines(text, LOCALIZATION_HEADER, LOCALIZATION_FILE)? {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 5 {
            return Err(Error::format(format!("{LOCALIZATION_FILE} line {line}: expected 5 fields")));
        }
        rows.push(LocalizationRow {
            split: f[0].to_string(),
            median_t: field(f[1], "median_t", LOCALIZATION_FILE, line)?,
            median_r: field(f[2], "median_r", LOCALIZATION_FILE, line)?,
            accuracy: field(f[3], "accuracy", LOCALIZATION_FILE, line)?,
            n: field(f[4], "n", LOCALIZATION_FILE, line)?,
        });
    }
    Ok(rows)
}

type Check = fn(&VoxelGrid, FilterParams) -> bool;

fn median_within_range(e: &VoxelGrid, p: FilterParams) -> bool {
    let med = median_filter_temporal(e, p.k_t);
    (0..e.height()).all(|m| {
        (0..e.width()).all(|n| {
            let lo = e.column(m, n).fold(f64::INFINITY, f64::min);
            let hi = e.column(m, n).fold(f64::NEG_INFINITY, f64::max);
            med.column(m, n).all(|v| lo <= v && v <= hi)
        })
    })
}

fn reflection_from_slice(e: &VoxelGrid, p: FilterParams) -> bool {
    let out = max_reflection_filter(e, p.k_s);
    let plane = e.height() * e.width();
    (0..e.bins()).all(|l| {
        let mut values = e.data()[l * plane..(l + 1) * plane].to_vec();
        values.sort_by(f64::total_cmp);
        out.data()[l * plane..(l + 1) * plane]
            .iter()
            .all(|v| values.binary_search_by(|x| x.total_cmp(v)).is_ok())
    })
}

fn blend_keeps_unmasked(e: &VoxelGrid, p: FilterParams) -> bool {
    let mask = accumulation_mask(e);
    let out = protect_with_mask(e, &mask, p, ProtectMode::Dense);
    let plane = e.height() * e.width();
    (0..e.data().len()).all(|i| mask.bits()[i % plane] || out.data()[i].to_bits() == e.data()[i].to_bits())
}

fn sparse_equals_dense(e: &VoxelGrid, p: FilterParams) -> bool {
    let a = protect(e, p, ProtectMode::Sparse);
    let b = protect(e, p, ProtectMode::Dense);
    a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits())
}

const FILTER_CHECKS: [(&str, &str, Check); 4] = [
    ("median", "within_column_range", median_within_range),
    ("max_reflection", "values_from_slice", reflection_from_slice),
    ("blend", "unmasked_unchanged", blend_keeps_unmasked),
    ("sparse", "equals_dense", sparse_equals_dense),
];

pub fn filter_rows(grids: &[VoxelGrid], params: FilterParams) -> Vec<FilterRow> {
    if grids.is_empty() {
        return Vec::new();
    }
    FILTER_CHECKS
        .iter()
        .map(|&(variant, property, check)| {
            let passed = grids.iter().filter(|g| check(g, params)).count();
            FilterRow { variant, property, grids: grids.len(), passed, pass_rate: passed as f64 / grids.len() as f64 }
        })
        .collect()
}

fn vox_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "vox"))
        .collect();
    files.sort();
    Ok(files)
}

/// Builds the report from the files present in `dir`.
pub fn build_report(dir: &Path, params: FilterParams) -> Result<Report> {
    if !dir.is_dir() {
        return Err(Error::Usage(format!("results directory {} does not exist", dir.display())));
    }
    let mut missing = Vec::new();
    let mut read_text = |name: &str| -> Result<Option<String>> {
        let path = dir.join(name);
        if !path.is_file() {
            missing.push(name.to_string());
            return Ok(None);
        }
        String::from_utf8(read_file(&path)?)
            .map(Some)
            .map_err(|_| Error::format(format!("{name} is not UTF-8")))
    };
    let attacks = read_text(ATTACKS_FILE)?.map(|t| parse_attacks(&t)).transpose()?.unwrap_or_default();
    let localization = read_text(LOCALIZATION_FILE)?.map(|t| parse_localization(&t)).transpose()?.unwrap_or_default();
    let mut grids = Vec::new();
    for path in vox_files(dir)? {
        grids.push(read_vox(&read_file(&path)?).map_err(|e| Error::format(format!("{}: {e}", path.display())))?);
    }
    if grids.is_empty() {
        missing.push("*.vox".to_string());
    }
    Ok(Report { attacks, localization, filters: filter_rows(&grids, params), missing })
}

impl Report {
    pub fn attacks_csv(&self) -> String {
        let mut out = format!("{}\n", AttackReport::CSV_HEADER);
        for r in &self.attacks {
            let psnr = if r.psnr.is_infinite() { "inf".to_string() } else { r.psnr.to_string() };
            let _ = writeln!(out, "{},{},{},{},{},{}", r.attack, r.depth, r.mae, psnr, r.ssim, r.n);
        }
        out
    }

    pub fn localization_csv(&self) -> String {
        localization_csv(&self.localization)
    }

    pub fn filters_csv(&self) -> String {
        let mut out = format!("{FILTERS_HEADER}\n");
        for r in &self.filters {
            let _ = writeln!(out, "{},{},{},{},{}", r.variant, r.property, r.grids, r.passed, r.pass_rate);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
