//! Dynamic longest common subsequences between a vehicle route `A` and a
//! request route `R`.
//!
//! Matching runs in two minimization phases:
//!
//! 1. every request point `R_j` is assigned to its nearest vehicle point
//!    `A_i` ([`nearest_assignment`]);
//! 2. walking `A` in travel order, each vehicle point keeps its shortest
//!    assigned link whose request index is not behind the last chosen one
//!    ([`select_segments`]).
//!
//! The surviving links are the DLCSS line segments. [`similarity_metric`]
//! folds them into a single score: the segment sum scaled by the inverse of
//! the matched share of `A`'s length. Lower scores mean more compatible
//! routes.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geo::{self, Coordinate, Route};

/// Similarity score in meters. `NoOverlap` is worse than every finite score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Finite(f64),
    /// The matched span along `A` has zero length, so the overlap share is 0.
    NoOverlap,
}

impl Score {
    pub fn value(self) -> Option<f64> {
        match self {
            Score::Finite(v) => Some(v),
            Score::NoOverlap => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Score::Finite(_))
    }

    /// Whether a pair with this score passes a filter at `threshold_m`.
    pub fn is_within(self, threshold_m: f64) -> bool {
        matches!(self, Score::Finite(v) if v <= threshold_m)
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Score::Finite(a), Score::Finite(b)) => a.total_cmp(b),
            (Score::Finite(_), Score::NoOverlap) => Ordering::Less,
            (Score::NoOverlap, Score::Finite(_)) => Ordering::Greater,
            (Score::NoOverlap, Score::NoOverlap) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Finite(v) => write!(f, "{v}"),
            Score::NoOverlap => f.write_str("no-overlap"),
        }
    }
}

// Serialized as a number, or `null` for `NoOverlap`.
impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match Option::<f64>::deserialize(deserializer)? {
            Some(v) => Score::Finite(v),
            None => Score::NoOverlap,
        })
    }
}

/// Result of the first phase. Exactly one cell per request point is set, so
/// only the set cells are stored: `nearest[j] = (i, distance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    rows: usize,
    nearest: Vec<(usize, f64)>,
}

impl DistanceMatrix {
    /// Builds a matrix from explicit set cells, one `(row, distance)` per
    /// column.
    pub fn from_assignments(rows: usize, nearest: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(&(i, _)) = nearest.iter().find(|&&(i, _)| i >= rows) {
            return Err(Error::InvalidParameter(format!(
                "row {i} out of range for {rows} rows"
            )));
        }
        if nearest.iter().any(|&(_, d)| !d.is_finite() || d < 0.0) {
            return Err(Error::InvalidParameter(
                "cell distances must be finite and non-negative".into(),
            ));
        }
        Ok(Self { rows, nearest })
    }

    /// Number of vehicle points (`I`).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of request points (`J`).
    pub fn cols(&self) -> usize {
        self.nearest.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        match self.nearest.get(j) {
            Some(&(row, d)) if row == i => Some(d),
            _ => None,
        }
    }

    /// Set cells as `(i, j, distance)` in column order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.nearest
            .iter()
            .enumerate()
            .map(|(j, &(i, d))| (i, j, d))
    }
}

/// One DLCSS line segment linking `A[a_index]` to `R[r_index]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlcssSegment {
    pub distance_m: f64,
    pub a_index: usize,
    pub r_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlcssResult {
    pub segments: Vec<DlcssSegment>,
    /// Sum of all segment lengths.
    pub sum_segments_m: f64,
    /// Length of `A` between the first and last matched vehicle point.
    pub l_sub_a_m: f64,
    /// Total length of `A`.
    pub l_a_m: f64,
    pub sm: Score,
}

/// Phase one using the haversine distance.
pub fn nearest_assignment(a: &Route, r: &Route) -> DistanceMatrix {
    nearest_assignment_with(a, r, geo::distance)
}

/// Phase one with an arbitrary point distance. `dist` is called exactly
/// `I × J` times; ties keep the smallest vehicle index.
pub fn nearest_assignment_with<F>(a: &Route, r: &Route, mut dist: F) -> DistanceMatrix
where
    F: FnMut(Coordinate, Coordinate) -> f64,
{
    let nearest = r
        .points()
        .iter()
        .map(|&rp| {
            let mut best = (0, f64::INFINITY);
            for (i, &ap) in a.points().iter().enumerate() {
                let d = dist(ap, rp);
                if d < best.1 {
                    best = (i, d);
                }
            }
            best
        })
        .collect();
    DistanceMatrix {
        rows: a.len(),
        nearest,
    }
}

/// Phase two: temporally ordered selection of one segment per vehicle point.
///
/// `start_j` is the request cursor: row `i` only considers set cells with
/// `j >= start_j`, picks the shortest (smallest `j` on ties) and moves the
/// cursor onto it. Rows without a candidate are skipped.
pub fn select_segments(dm: &DistanceMatrix) -> Vec<DlcssSegment> {
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dm.rows];
    for (i, j, d) in dm.cells() {
        by_row[i].push((j, d));
    }

    let mut segments = Vec::new();
    let mut start_j = 0;
    for (i, cells) in by_row.iter().enumerate() {
        // Cells are in ascending `j`, so a strict `<` keeps the smallest j on ties.
        let mut best: Option<(usize, f64)> = None;
        for &(j, d) in cells.iter().filter(|&&(j, _)| j >= start_j) {
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            segments.push(DlcssSegment {
                distance_m: d,
                a_index: i,
                r_index: j,
            });
            start_j = j;
        }
    }
    segments
}

/// Scores a segment list against the vehicle route it was computed on.
pub fn similarity_metric(segments: &[DlcssSegment], a: &Route) -> Result<Score> {
    Ok(metric_parts(segments, a)?.3)
}

fn metric_parts(segments: &[DlcssSegment], a: &Route) -> Result<(f64, f64, f64, Score)> {
    let (first, last) = match (segments.first(), segments.last()) {
        (Some(f), Some(l)) => (f.a_index, l.a_index),
        _ => return Err(Error::EmptySegments),
    };
    let sum = segments.iter().fold(0.0, |acc, s| acc + s.distance_m);
    let l_sub = geo::arc_length_between(a, first, last)?;
    let l_a = geo::route_length(a);
    let sm = if l_sub > 0.0 {
        Score::Finite(l_a / l_sub * sum)
    } else {
        Score::NoOverlap
    };
    Ok((sum, l_sub, l_a, sm))
}

/// Full pipeline for one ordered pair: `a` is the vehicle, `r` the request.
pub fn compute_dlcss(a: &Route, r: &Route) -> Result<DlcssResult> {
    let dm = nearest_assignment(a, r);
    let segments = select_segments(&dm);
    let (sum_segments_m, l_sub_a_m, l_a_m, sm) = metric_parts(&segments, a)?;
    Ok(DlcssResult {
        segments,
        sum_segments_m,
        l_sub_a_m,
        l_a_m,
        sm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub overlap_fraction: f64,
    pub segment_sum_m: f64,
    pub sm: f64,
}

/// Evaluates the score formula over a grid of overlap fractions and segment
/// sums. Rows are fraction-major, in input order.
pub fn metric_sweep(overlap_fractions: &[f64], segment_sums: &[f64]) -> Result<Vec<SweepRow>> {
    if let Some(f) = overlap_fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "overlap fraction {f} is outside (0, 1]"
        )));
    }
    if let Some(s) = segment_sums.iter().find(|&&s| !s.is_finite() || s < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "segment sum {s} must be finite and non-negative"
        )));
    }
    Ok(overlap_fractions
        .iter()
        .flat_map(|&f| {
            segment_sums.iter().map(move |&s| SweepRow {
                overlap_fraction: f,
                segment_sum_m: s,
                sm: s / f,
            })
        })
        .collect())
}
