//! Pickup meeting points for requests that are too far off a vehicle's
//! corridor to share the ride directly.
//!
//! Each candidate replaces the request's origin: the request is rerouted
//! from the meeting point to its original destination and scored again
//! against the vehicle route. Only pickup-side points are generated.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dlcss::Score;
use crate::error::{Error, Result};
use crate::geo::{Coordinate, Route};
use crate::matcher::{check_threshold, score_pair};
use crate::routing::{shortest_route, GridGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingPoint {
    pub id: String,
    pub location: Coordinate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingMatch {
    pub meeting_point_id: String,
    pub rerouted_request: Route,
    pub sm: Score,
}

/// Produces a route between two coordinates.
pub trait RouteProvider {
    fn route(&self, origin: Coordinate, destination: Coordinate) -> Result<Route>;
}

impl<F> RouteProvider for F
where
    F: Fn(Coordinate, Coordinate) -> Result<Route>,
{
    fn route(&self, origin: Coordinate, destination: Coordinate) -> Result<Route> {
        self(origin, destination)
    }
}

impl RouteProvider for GridGraph {
    fn route(&self, origin: Coordinate, destination: Coordinate) -> Result<Route> {
        shortest_route(self, origin, destination)
    }
}

/// Straight two-point route; useful when no road network is at hand.
pub struct StraightLine;

impl RouteProvider for StraightLine {
    fn route(&self, origin: Coordinate, destination: Coordinate) -> Result<Route> {
        Route::new("straight", vec![origin, destination])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub meeting_point_id: String,
    pub sm: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFailure {
    pub meeting_point_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeetingSearch {
    /// Best candidate, if its score is within the threshold.
    pub best: Option<MeetingMatch>,
    /// Score of every candidate that could be routed, in input order.
    pub evaluated: Vec<CandidateScore>,
    /// Candidates the route provider could not serve.
    pub skipped: Vec<CandidateFailure>,
}

fn reroute<P: RouteProvider + ?Sized>(
    vehicle: &Route,
    request: &Route,
    m: &MeetingPoint,
    provider: &P,
) -> Result<(Route, Score)> {
    let routed = provider.route(m.location, request.end())?;
    let mut points = routed.points().to_vec();
    if points.last() != Some(&request.end()) {
        points.push(request.end());
    }
    let rerouted = Route::new(format!("{}@{}", request.id(), m.id), points)?;
    let sm = score_pair(vehicle, &rerouted)?;
    Ok((rerouted, sm))
}

fn pick_best(
    candidates: &[MeetingPoint],
    results: Vec<Result<(Route, Score)>>,
    threshold: f64,
) -> MeetingSearch {
    let mut search = MeetingSearch::default();
    let mut best: Option<(&MeetingPoint, Route, Score)> = None;
    for (m, res) in candidates.iter().zip(results) {
        match res {
            Ok((route, sm)) => {
                search.evaluated.push(CandidateScore {
                    meeting_point_id: m.id.clone(),
                    sm,
                });
                let better = match &best {
                    None => true,
                    Some((bm, _, bs)) => sm < *bs || (sm == *bs && m.id < bm.id),
                };
                if better {
                    best = Some((m, route, sm));
                }
            }
            Err(e) => search.skipped.push(CandidateFailure {
                meeting_point_id: m.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    search.best = best
        .filter(|(_, _, sm)| sm.is_within(threshold))
        .map(|(m, route, sm)| MeetingMatch {
            meeting_point_id: m.id.clone(),
            rerouted_request: route,
            sm,
        });
    search
}

/// Scores every candidate pickup point for `request` against `vehicle` and
/// returns the lowest-scoring one if it passes `threshold`. Ties go to the
/// smaller candidate id.
///
/// Does not look at the direct score; deciding when to search is up to the
/// caller.
pub fn evaluate_meeting_points<P: RouteProvider + ?Sized>(
    vehicle: &Route,
    request: &Route,
    candidates: &[MeetingPoint],
    provider: &P,
    threshold: f64,
) -> Result<MeetingSearch> {
    check_threshold(threshold)?;
    let results = candidates
        .iter()
        .map(|m| reroute(vehicle, request, m, provider))
        .collect();
    Ok(pick_best(candidates, results, threshold))
}

/// Parallel variant of [`evaluate_meeting_points`] for thread-safe providers.
/// Returns the same result.
pub fn evaluate_meeting_points_par<P: RouteProvider + Sync + ?Sized>(
    vehicle: &Route,
    request: &Route,
    candidates: &[MeetingPoint],
    provider: &P,
    threshold: f64,
) -> Result<MeetingSearch> {
    check_threshold(threshold)?;
    let results = candidates
        .par_iter()
        .map(|m| reroute(vehicle, request, m, provider))
        .collect();
    Ok(pick_best(candidates, results, threshold))
}

#[derive(Deserialize)]
struct CsvRow {
    id: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    label: Option<String>,
}

/// Reads meeting points from CSV with header `id,lat,lon,label`.
///
/// Errors name the offending line (the header is line 1).
pub fn read_meeting_points<R: Read>(reader: R) -> Result<Vec<MeetingPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse("meeting points", "line 1", e.to_string()))?
        .clone();
    let expected = ["id", "lat", "lon", "label"];
    if headers.len() != expected.len() || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::parse(
            "meeting points",
            "line 1",
            format!(
                "expected header `id,lat,lon,label`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut seen = HashSet::new();
    let mut points = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let fallback = k as u64 + 2;
        let (record, line) = match record {
            Ok(r) => {
                let line = r.position().map_or(fallback, |p| p.line());
                (r, format!("line {line}"))
            }
            Err(e) => {
                let line = e.position().map_or(fallback, |p| p.line());
                return Err(Error::parse(
                    "meeting points",
                    format!("line {line}"),
                    e.to_string(),
                ));
            }
        };
        let row: CsvRow = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::parse("meeting points", &line, e.to_string()))?;
        let location = Coordinate::new(row.lat, row.lon)
            .map_err(|e| Error::parse("meeting points", &line, e.to_string()))?;
        if !seen.insert(row.id.clone()) {
            return Err(Error::parse(
                "meeting points",
                &line,
                format!("duplicate id `{}`", row.id),
            ));
        }
        points.push(MeetingPoint {
            id: row.id,
            location,
            label: row.label.filter(|l| !l.is_empty()),
        });
    }
    Ok(points)
}

pub fn load_meeting_points(path: &Path) -> Result<Vec<MeetingPoint>> {
    read_meeting_points(std::fs::File::open(path)?)
}
