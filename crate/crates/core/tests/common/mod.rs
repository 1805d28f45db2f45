//! Test-only helpers: a literal transliteration of the two-phase DLCSS
//! pseudocode (dense matrix, -1 sentinel, sort-then-take-first) used as an
//! oracle for the library, and shared route fixtures.

#![allow(dead_code, clippy::needless_range_loop)]

use dlcss::geo::{distance, Coordinate};
use dlcss::Route;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RefResult {
    /// `(distance, i, j)` triples in emission order.
    pub segments: Vec<(f64, usize, usize)>,
    pub sum: f64,
    pub l_sub: f64,
    pub l_a: f64,
    /// `None` when the matched span has zero length.
    pub sm: Option<f64>,
}

pub fn reference_dlcss(a: &Route, r: &Route) -> RefResult {
    let ap = a.points();
    let rp = r.points();
    let (ni, nj) = (ap.len(), rp.len());

    let mut matrix = vec![vec![-1.0f64; nj]; ni];
    for j in 0..nj {
        let mut min_distances: Vec<(f64, usize)> = Vec::new();
        for i in 0..ni {
            min_distances.push((distance(ap[i], rp[j]), i));
        }
        min_distances.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
        let ref_i = min_distances[0].1;
        matrix[ref_i][j] = min_distances[0].0;
    }

    let mut segments = Vec::new();
    let mut start_j = 0;
    for i in 0..ni {
        let mut min_distances: Vec<(f64, usize, usize)> = Vec::new();
        for j in start_j..nj {
            if matrix[i][j] != -1.0 {
                min_distances.push((matrix[i][j], i, j));
            }
        }
        if min_distances.is_empty() {
            continue;
        }
        min_distances.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.2.cmp(&y.2)));
        start_j = min_distances[0].2;
        segments.push(min_distances[0]);
    }

    let mut sum = 0.0;
    for s in &segments {
        sum += s.0;
    }
    let first = segments[0].1;
    let last = segments[segments.len() - 1].1;
    let mut l_sub = 0.0;
    for k in first..last {
        l_sub += distance(ap[k], ap[k + 1]);
    }
    let mut l_a = 0.0;
    for k in 0..ni - 1 {
        l_a += distance(ap[k], ap[k + 1]);
    }
    let sm = if l_sub > 0.0 {
        Some(l_a / l_sub * sum)
    } else {
        None
    };
    RefResult {
        segments,
        sum,
        l_sub,
        l_a,
        sm,
    }
}

/// Random polyline with `n` points inside a ~5 km box. With `lattice`, points
/// sit on a coarse 0.002° lattice so that distance ties are common.
pub fn random_route<R: Rng>(rng: &mut R, id: &str, n: usize, lattice: bool) -> Route {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            if lattice {
                (
                    50.75 + 0.002 * rng.gen_range(0..20) as f64,
                    6.05 + 0.002 * rng.gen_range(0..20) as f64,
                )
            } else {
                (rng.gen_range(50.75..50.80), rng.gen_range(6.05..6.12))
            }
        })
        .collect();
    Route::from_lat_lon(id, &pts).unwrap()
}

pub fn coord(lat: f64, lon: f64) -> Coordinate {
    Coordinate::new(lat, lon).unwrap()
}

/// Checks the temporal ordering of a segment list, returning the number of
/// violations.
pub fn temporal_violations(segments: &[(usize, usize)]) -> usize {
    segments
        .windows(2)
        .filter(|w| !(w[1].0 > w[0].0 && w[1].1 >= w[0].1))
        .count()
}

pub const SCENARIO_NAMES: [&str; 9] = [
    "[1,1]", "[1,2]", "[1,3]", "[2,1]", "[2,2]", "[2,3]", "[3,1]", "[3,2]", "[3,3]",
];

const BASE_LAT: f64 = 50.0;
const STEP: f64 = 0.001;
/// Lateral offset (~22 m) separating a request from the vehicle's lane.
const LANE: f64 = 0.0002;

fn lon(k: usize) -> f64 {
    6.0 + STEP * k as f64
}

/// Vehicle route of the scenario family: 21 points due east.
pub fn scenario_vehicle() -> Route {
    let pts: Vec<_> = (0..=20).map(|k| (BASE_LAT, lon(k))).collect();
    Route::from_lat_lon("vehicle", &pts).unwrap()
}

fn along(from: usize, to: usize) -> Vec<(f64, f64)> {
    (from..=to).map(|k| (BASE_LAT + LANE, lon(k))).collect()
}

fn approach_from_south(k: usize) -> Vec<(f64, f64)> {
    (1..=5)
        .rev()
        .map(|s| (BASE_LAT - STEP * s as f64, lon(k)))
        .collect()
}

fn leave_to_north(k: usize) -> Vec<(f64, f64)> {
    (1..=5)
        .map(|s| (BASE_LAT + LANE + STEP * s as f64, lon(k)))
        .collect()
}

/// The nine ride-sharing scenarios. The first index describes the request's
/// destination (1 shared, 2 on the route, 3 separation point), the second
/// its origin (1 shared, 2 on the route, 3 meeting point).
pub fn scenario(name: &str) -> Route {
    let pts: Vec<(f64, f64)> = match name {
        "[1,1]" => (0..=20).map(|k| (BASE_LAT, lon(k))).collect(),
        "[1,2]" => along(8, 20),
        "[1,3]" => [approach_from_south(8), along(8, 20)].concat(),
        "[2,1]" => along(0, 13),
        "[2,2]" => along(5, 15),
        "[2,3]" => [approach_from_south(5), along(5, 15)].concat(),
        "[3,1]" => [along(0, 12), leave_to_north(12)].concat(),
        "[3,2]" => [along(5, 12), leave_to_north(12)].concat(),
        "[3,3]" => [approach_from_south(5), along(5, 12), leave_to_north(12)].concat(),
        other => panic!("unknown scenario {other}"),
    };
    Route::from_lat_lon(name, &pts).unwrap()
}

/// Same shape as the vehicle route, ~5.5 km further north.
pub fn disjoint_control() -> Route {
    let pts: Vec<_> = (0..=20).map(|k| (BASE_LAT + 0.05, lon(k))).collect();
    Route::from_lat_lon("control", &pts).unwrap()
}

pub struct MeetingFixture {
    pub grid: dlcss::routing::GridGraph,
    pub vehicle: Route,
    pub request: Route,
    pub candidates: Vec<dlcss::meeting::MeetingPoint>,
}

/// Vehicle drives due east along row 5 of an intact 20x20 grid; the request
/// comes down from the north-west to a destination on that row. Candidate
/// `corridor` sits on the vehicle's row, `midtown` part-way between the two
/// routes, `north-east` beyond the destination.
pub fn meeting_fixture() -> MeetingFixture {
    use dlcss::meeting::MeetingPoint;
    use dlcss::routing::{shortest_route, GridGraph, GridParams};

    let grid = GridGraph::generate(GridParams {
        removal_fraction: 0.0,
        ..GridParams::default()
    })
    .unwrap();
    let at = |r, c| grid.node(grid.node_index(r, c));
    let vehicle = shortest_route(&grid, at(5, 0), at(5, 15))
        .unwrap()
        .with_id("vehicle");
    let request = shortest_route(&grid, at(14, 2), at(5, 12))
        .unwrap()
        .with_id("request");
    let candidates = [
        ("corridor", 5, 3),
        ("midtown", 12, 9),
        ("north-east", 18, 14),
    ]
    .into_iter()
    .map(|(id, r, c)| MeetingPoint {
        id: id.to_owned(),
        location: at(r, c),
        label: None,
    })
    .collect();
    MeetingFixture {
        grid,
        vehicle,
        request,
        candidates,
    }
}
