//! Filter-versus-reroute evaluation.
//!
//! Every ordered pair `(vehicle, request)` of distinct routes in a pool is
//! scored with DLCSS and labelled by the routing oracle. A pair the filter
//! accepts counts as a positive; the oracle's verdict is the truth.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::RoutePool;
use crate::dlcss::Score;
use crate::error::{Error, Result};
use crate::geo::route_length;
use crate::matcher::{check_threshold, score_pair};
use crate::routing::{GridGraph, OracleAssessment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub a_id: String,
    pub r_id: String,
    pub sm: Score,
    pub assessment: OracleAssessment,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub scoring_ms: f64,
    pub oracle_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_pairs: usize,
    pub threshold_m: f64,
    pub rejection_rate: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    /// TP / (TP + FP); absent when nothing was accepted.
    pub tp_rate_among_accepted: Option<f64>,
    /// TP / n_pairs.
    pub tp_rate_overall: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<StageTimings>,
}

/// A report together with the per-pair data it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub report: EvalReport,
    pub pairs: Vec<PairRecord>,
}

/// Scores and labels all ordered pairs of distinct routes, in pool order.
pub fn score_pairs(pool: &RoutePool, g: &GridGraph) -> Result<Vec<PairRecord>> {
    Ok(score_pairs_timed(pool, g)?.0)
}

fn ordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |a| (0..n).filter(move |&r| r != a).map(move |r| (a, r)))
}

fn score_pairs_timed(pool: &RoutePool, g: &GridGraph) -> Result<(Vec<PairRecord>, StageTimings)> {
    let routes = pool.routes();
    let pairs: Vec<(usize, usize)> = ordered_pairs(routes.len()).collect();

    let clock = Instant::now();
    let scores = pairs
        .par_iter()
        .map(|&(a, r)| score_pair(&routes[a], &routes[r]))
        .collect::<Result<Vec<_>>>()?;
    let scoring_ms = clock.elapsed().as_secs_f64() * 1e3;

    let clock = Instant::now();
    let ends: Vec<_> = routes
        .iter()
        .map(|r| Ok((g.snap(r.start())?, g.snap(r.end())?)))
        .collect::<Vec<Result<_>>>();
    let mut sources: Vec<usize> = ends.iter().flatten().flat_map(|&(s, e)| [s, e]).collect();
    sources.sort_unstable();
    sources.dedup();
    let tables: HashMap<usize, Vec<f64>> =
        sources.par_iter().map(|&s| (s, g.dijkstra(s).0)).collect();
    let lengths: Vec<f64> = routes.iter().map(route_length).collect();

    let assessments: Vec<OracleAssessment> = pairs
        .par_iter()
        .map(|&(a, r)| match (&ends[a], &ends[r]) {
            (Ok((a_start, a_end)), Ok((r_start, r_end))) => OracleAssessment::from_legs(
                lengths[a],
                [
                    tables[a_start][*r_start],
                    tables[r_start][*r_end],
                    tables[r_end][*a_end],
                ],
            ),
            (Err(e), _) | (_, Err(e)) => OracleAssessment::infeasible(e.to_string()),
        })
        .collect();
    let oracle_ms = clock.elapsed().as_secs_f64() * 1e3;

    let records = pairs
        .iter()
        .zip(scores)
        .zip(assessments)
        .map(|((&(a, r), sm), assessment)| PairRecord {
            a_id: routes[a].id().to_owned(),
            r_id: routes[r].id().to_owned(),
            sm,
            assessment,
        })
        .collect();
    Ok((
        records,
        StageTimings {
            scoring_ms,
            oracle_ms,
        },
    ))
}

/// Smallest threshold that accepts every oracle-compatible pair with a
/// finite score, or `None` when no such pair exists.
pub fn calibrate_from_pairs(pairs: &[PairRecord]) -> Option<f64> {
    pairs
        .iter()
        .filter(|p| p.assessment.compatible)
        .filter_map(|p| p.sm.value())
        .max_by(f64::total_cmp)
}

/// Calibrates a zero-false-negative threshold on `pool`, falling back to
/// `default_m` when no pair is compatible.
pub fn calibrate_threshold(pool: &RoutePool, g: &GridGraph, default_m: f64) -> Result<f64> {
    if pool.len() < 2 {
        return Err(Error::InvalidParameter(
            "calibration needs at least two routes".into(),
        ));
    }
    Ok(calibrate_from_pairs(&score_pairs(pool, g)?).unwrap_or(default_m))
}

/// Confusion counts for `pairs` filtered at `threshold_m`.
pub fn summarize(pairs: &[PairRecord], threshold_m: f64) -> EvalReport {
    let (mut tp, mut fp, mut tn, mut fneg) = (0, 0, 0, 0);
    for p in pairs {
        match (p.sm.is_within(threshold_m), p.assessment.compatible) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    let n = pairs.len();
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    EvalReport {
        n_pairs: n,
        threshold_m,
        rejection_rate: frac(tn + fneg),
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fneg,
        tp_rate_among_accepted: (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64),
        tp_rate_overall: frac(tp),
        runtime_ms: None,
    }
}

pub fn run_eval(pool: &RoutePool, g: &GridGraph, threshold_m: f64) -> Result<EvalRun> {
    check_threshold(threshold_m)?;
    let (pairs, timings) = score_pairs_timed(pool, g)?;
    let mut report = summarize(&pairs, threshold_m);
    report.runtime_ms = Some(timings);
    Ok(EvalRun { report, pairs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub threshold_m: f64,
    pub report: EvalReport,
}

/// K-fold evaluation: routes are dealt into folds by position; each fold's
/// within-fold pairs are filtered with a threshold calibrated only on pairs
/// between routes of the other folds.
pub fn cross_validate(
    pool: &RoutePool,
    g: &GridGraph,
    folds: usize,
    default_m: f64,
) -> Result<Vec<FoldReport>> {
    if folds < 2 || folds > pool.len() {
        return Err(Error::InvalidParameter(format!(
            "fold count {folds} must be between 2 and the pool size {}",
            pool.len()
        )));
    }
    let fold_of: HashMap<&str, usize> = pool
        .routes()
        .iter()
        .enumerate()
        .map(|(k, r)| (r.id(), k % folds))
        .collect();
    let pairs = score_pairs(pool, g)?;
    Ok((0..folds)
        .map(|fold| {
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for p in &pairs {
                match (
                    fold_of[p.a_id.as_str()] == fold,
                    fold_of[p.r_id.as_str()] == fold,
                ) {
                    (true, true) => test.push(p.clone()),
                    (false, false) => train.push(p.clone()),
                    _ => {}
                }
            }
            let threshold_m = calibrate_from_pairs(&train).unwrap_or(default_m);
            FoldReport {
                fold,
                threshold_m,
                report: summarize(&test, threshold_m),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    /// One `(sm, detour_fraction)` row per pair.
    PlotData,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "plot-data" => Ok(Self::PlotData),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format `{other}` (expected json, csv or plot-data)"
            ))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::Csv => "csv",
            Self::PlotData => "plot-data",
        })
    }
}

#[derive(Serialize)]
struct CsvSummary {
    n_pairs: usize,
    threshold_m: f64,
    rejection_rate: f64,
    true_positives: usize,
    false_positives: usize,
    true_negatives: usize,
    false_negatives: usize,
    tp_rate_among_accepted: Option<f64>,
    tp_rate_overall: f64,
}

#[derive(Serialize)]
struct PlotRow<'a> {
    a_id: &'a str,
    r_id: &'a str,
    sm: Option<f64>,
    detour_fraction: f64,
    compatible: bool,
    accepted: bool,
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse("report", "csv", format!("{other:?}")),
    }
}

pub fn emit_report<W: Write>(run: &EvalRun, format: ReportFormat, mut out: W) -> Result<()> {
    let r = &run.report;
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, r)
                .map_err(|e| Error::parse("report", "json", e.to_string()))?;
            writeln!(out)?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.serialize(CsvSummary {
                n_pairs: r.n_pairs,
                threshold_m: r.threshold_m,
                rejection_rate: r.rejection_rate,
                true_positives: r.true_positives,
                false_positives: r.false_positives,
                true_negatives: r.true_negatives,
                false_negatives: r.false_negatives,
                tp_rate_among_accepted: r.tp_rate_among_accepted,
                tp_rate_overall: r.tp_rate_overall,
            })
            .map_err(csv_err)?;
            w.flush()?;
        }
        ReportFormat::PlotData => {
            let mut w = csv::Writer::from_writer(out);
            for p in &run.pairs {
                w.serialize(PlotRow {
                    a_id: &p.a_id,
                    r_id: &p.r_id,
                    sm: p.sm.value(),
                    detour_fraction: p.assessment.detour_fraction,
                    compatible: p.assessment.compatible,
                    accepted: p.sm.is_within(r.threshold_m),
                })
                .map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
