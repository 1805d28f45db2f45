//! Threshold filtering of route pools.
//!
//! Scores are directional: the vehicle route is always the `A` argument of
//! [`compute_dlcss`](crate::dlcss::compute_dlcss). Callers wanting both
//! orientations ask for them explicitly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dlcss::{compute_dlcss, Score};
use crate::error::{Error, Result};
use crate::geo::Route;

/// Default acceptance threshold in meters.
pub const DEFAULT_THRESHOLD_M: f64 = 20_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchDecision {
    pub a_id: String,
    pub r_id: String,
    pub sm: Score,
    pub threshold: f64,
    pub accepted: bool,
}

impl MatchDecision {
    pub fn new(a_id: &str, r_id: &str, sm: Score, threshold: f64) -> Self {
        Self {
            a_id: a_id.to_owned(),
            r_id: r_id.to_owned(),
            sm,
            threshold,
            accepted: sm.is_within(threshold),
        }
    }
}

pub fn score_pair(vehicle: &Route, request: &Route) -> Result<Score> {
    Ok(compute_dlcss(vehicle, request)?.sm)
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if threshold >= 0.0 && threshold.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "threshold {threshold} must be finite and non-negative"
        )))
    }
}

/// Scores every (vehicle, request) pair and decides acceptance.
///
/// Output is sorted by `(a_id, r_id)`; scoring runs on the current rayon
/// pool and does not affect the result.
pub fn filter_pool(
    vehicle_routes: &[Route],
    request_routes: &[Route],
    threshold: f64,
) -> Result<Vec<MatchDecision>> {
    check_threshold(threshold)?;
    let mut decisions = vehicle_routes
        .par_iter()
        .flat_map_iter(|a| {
            request_routes.iter().map(move |r| {
                Ok(MatchDecision::new(
                    a.id(),
                    r.id(),
                    score_pair(a, r)?,
                    threshold,
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    decisions.sort_by(|x, y| (&x.a_id, &x.r_id).cmp(&(&y.a_id, &y.r_id)));
    Ok(decisions)
}

/// The `k` vehicles with the smallest finite score for `request`, best
/// first. Ties go to the smaller vehicle id; `NoOverlap` pairs are dropped.
pub fn rank_candidates(
    request: &Route,
    vehicle_routes: &[Route],
    k: usize,
    threshold: f64,
) -> Result<Vec<MatchDecision>> {
    check_threshold(threshold)?;
    let mut scored = vehicle_routes
        .par_iter()
        .map(|a| {
            Ok(MatchDecision::new(
                a.id(),
                request.id(),
                score_pair(a, request)?,
                threshold,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.retain(|d| d.sm.is_finite());
    scored.sort_by(|x, y| x.sm.cmp(&y.sm).then_with(|| x.a_id.cmp(&y.a_id)));
    scored.truncate(k);
    Ok(scored)
}
