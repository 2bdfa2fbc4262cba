//! Per-query localization and the accuracy summary.

use alloc::string::String;
use alloc::vec::Vec;

use super::descriptor::{retrieve_topk, DEFAULT_K};
use super::pnp::{pnp_ransac, RansacConfig};
use super::pose::{pose_errors, Pose, PoseError, R_THRESHOLD_DEG, T_THRESHOLD};
use super::scene::{match_and_lift, select_reference, voxel_descriptor, MatchConfig, Query, SceneMap};
use crate::error::{Error, Result};
use crate::privacy::{protect, FilterParams, ProtectMode};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizeConfig {
    /// Retrieved candidates per query.
    pub k: usize,
    /// Noise and outliers of the match oracle; its seed is ignored in favour
    /// of per-query seeds derived from `seed`.
    pub matching: MatchConfig,
    /// RANSAC settings; the seed is likewise derived per query.
    pub ransac: RansacConfig,
    /// Sensor-level protection applied to query voxels before retrieval.
    pub protect: Option<(FilterParams, ProtectMode)>,
    pub seed: u64,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        LocalizeConfig {
            k: DEFAULT_K,
            matching: MatchConfig::default(),
            ransac: RansacConfig::default(),
            protect: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub query_id: usize,
    /// Retrieved reference indices, nearest first.
    pub retrieved: Vec<usize>,
    pub reference: Option<usize>,
    pub estimate: Option<Pose>,
    pub error: PoseError,
    pub correct: bool,
    /// Why no estimate was produced.
    pub failure: Option<String>,
}

/// Localizes one query; pipeline failures yield an incorrect result rather
/// than an error.
pub fn localize_query(map: &SceneMap, query: &Query, query_id: usize, cfg: &LocalizeConfig) -> Result<QueryResult> {
    let voxel = match cfg.protect {
        Some((params, mode)) => protect(&query.voxel, params, mode),
        None => query.voxel.clone(),
    };
    let retrieved = retrieve_topk(&voxel_descriptor(&voxel), &map.descriptors(), cfg.k)?;
    let reference = select_reference(query, map, &retrieved);
    let mut result = QueryResult {
        query_id,
        retrieved,
        reference,
        estimate: None,
        error: PoseError::FAILED,
        correct: false,
        failure: None,
    };
    let id = query_id as u64;
    let matching = MatchConfig { seed: seed::derive_index(seed::derive(cfg.seed, "match"), id), ..cfg.matching };
    let ransac = RansacConfig { seed: seed::derive_index(seed::derive(cfg.seed, "ransac"), id), ..cfg.ransac };
    let solved = reference
        .ok_or(Error::Empty("candidate references"))
        .and_then(|r| match_and_lift(query, r, map, &matching))
        .and_then(|corrs| pnp_ransac(&corrs, &map.intrinsics, &ransac));
    match solved {
        Ok(sol) => {
            result.error = pose_errors(&sol.pose, &query.pose);
            result.correct = result.error.is_correct(T_THRESHOLD, R_THRESHOLD_DEG);
            result.estimate = Some(sol.pose);
        }
        Err(e) => result.failure = Some(alloc::format!("{e}")),
    }
    Ok(result)
}

/// Localizes every query in order.
pub fn localize(map: &SceneMap, queries: &[Query], cfg: &LocalizeConfig) -> Result<Vec<QueryResult>> {
    queries.iter().enumerate().map(|(i, q)| localize_query(map, q, i, cfg)).collect()
}

/// Median with the mean of the two central values for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median input"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    pub median_t: f64,
    pub median_r: f64,
    /// Fraction of queries with both errors strictly below the thresholds.
    pub accuracy: f64,
    pub n: usize,
}

pub fn accuracy_report(errors: &[PoseError]) -> Result<AccuracyReport> {
    if errors.is_empty() {
        return Err(Error::Empty("localization results"));
    }
    let t: Vec<f64> = errors.iter().map(|e| e.t_error).collect();
    let r: Vec<f64> = errors.iter().map(|e| e.r_error).collect();
    let correct = errors.iter().filter(|e| e.is_correct(T_THRESHOLD, R_THRESHOLD_DEG)).count();
    Ok(AccuracyReport {
        median_t: median(&t)?,
        median_r: median(&r)?,
        accuracy: correct as f64 / errors.len() as f64,
        n: errors.len(),
    })
}
