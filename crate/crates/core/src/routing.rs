//! Synthetic road grid and the routing-based ground truth.
//!
//! The grid is a 4-neighbour lattice laid out from a south-west origin with
//! a fixed metric spacing. A seeded fraction of edges is removed, never
//! disconnecting the graph. Edge weights are haversine distances between the
//! endpoint nodes, so a path's weight equals the [`route_length`] of the
//! route built from its nodes.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{self, route_length, Coordinate, Route, EARTH_RADIUS_M};

/// Vehicles accept shared rides whose detour is at most this share of their
/// own route length.
pub const MAX_DETOUR_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub rows: usize,
    pub cols: usize,
    /// South-west corner.
    pub origin: Coordinate,
    pub spacing_m: f64,
    pub removal_fraction: f64,
    pub seed: u64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            rows: 20,
            cols: 20,
            origin: Coordinate::new(50.75, 6.05).expect("valid default origin"),
            spacing_m: 250.0,
            removal_fraction: 0.1,
            seed: 7,
        }
    }
}

impl GridParams {
    fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid must be at least 2x2, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.spacing_m > 0.0 && self.spacing_m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spacing {} must be positive",
                self.spacing_m
            )));
        }
        if !(0.0..1.0).contains(&self.removal_fraction) {
            return Err(Error::InvalidParameter(format!(
                "removal fraction {} is outside [0, 1)",
                self.removal_fraction
            )));
        }
        Ok(())
    }

    fn lat_step(&self) -> f64 {
        (self.spacing_m / EARTH_RADIUS_M).to_degrees()
    }

    fn lon_step(&self) -> f64 {
        self.lat_step() / self.origin.lat().to_radians().cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridGraph {
    params: GridParams,
    nodes: Vec<Coordinate>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl GridGraph {
    /// Builds the lattice and removes `removal_fraction` of its edges in a
    /// seeded order, skipping any removal that would disconnect the graph.
    pub fn generate(params: GridParams) -> Result<Self> {
        params.validate()?;
        let (rows, cols) = (params.rows, params.cols);
        let (dlat, dlon) = (params.lat_step(), params.lon_step());

        let mut nodes = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(Coordinate::new(
                    params.origin.lat() + r as f64 * dlat,
                    params.origin.lon() + c as f64 * dlon,
                )?);
            }
        }

        let mut lattice = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let u = r * cols + c;
                if c + 1 < cols {
                    lattice.push((u, u + 1));
                }
                if r + 1 < rows {
                    lattice.push((u, u + cols));
                }
            }
        }

        let target = (params.removal_fraction * lattice.len() as f64).round() as usize;
        let mut order: Vec<usize> = (0..lattice.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed));

        let mut alive = vec![true; lattice.len()];
        let mut removed = 0;
        for e in order {
            if removed == target {
                break;
            }
            alive[e] = false;
            if is_connected(
                nodes.len(),
                lattice
                    .iter()
                    .zip(&alive)
                    .filter(|(_, &a)| a)
                    .map(|(e, _)| *e),
            ) {
                removed += 1;
            } else {
                alive[e] = true;
            }
        }

        let edges = lattice
            .iter()
            .zip(&alive)
            .filter(|(_, &a)| a)
            .map(|(&(u, v), _)| Edge {
                u,
                v,
                weight_m: geo::distance(nodes[u], nodes[v]),
            })
            .collect();
        Ok(Self::assemble(params, nodes, edges))
    }

    fn assemble(params: GridParams, nodes: Vec<Coordinate>, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in &edges {
            adjacency[e.u].push((e.v, e.weight_m));
            adjacency[e.v].push((e.u, e.weight_m));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }
        Self {
            params,
            nodes,
            edges,
            adjacency,
        }
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }

    pub fn nodes(&self) -> &[Coordinate] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, row: usize, col: usize) -> usize {
        row * self.params.cols + col
    }

    pub fn node(&self, index: usize) -> Coordinate {
        self.nodes[index]
    }

    pub fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adjacency[index]
    }

    /// Nearest node to `at`. Points further than half a spacing outside the
    /// lattice are rejected.
    pub fn snap(&self, at: Coordinate) -> Result<usize> {
        let p = &self.params;
        let row = (at.lat() - p.origin.lat()) / p.lat_step();
        let col = (at.lon() - p.origin.lon()) / p.lon_step();
        let inside = |x: f64, n: usize| x >= -0.5 && x <= n as f64 - 0.5;
        if !inside(row, p.rows) || !inside(col, p.cols) {
            return Err(Error::OutsideGrid {
                lat: at.lat(),
                lon: at.lon(),
            });
        }
        let clamp = |x: f64, n: usize| (x.round().max(0.0) as usize).min(n - 1);
        let (r0, c0) = (clamp(row, p.rows), clamp(col, p.cols));

        let mut best = (usize::MAX, f64::INFINITY);
        for r in r0.saturating_sub(1)..=(r0 + 1).min(p.rows - 1) {
            for c in c0.saturating_sub(1)..=(c0 + 1).min(p.cols - 1) {
                let n = self.node_index(r, c);
                let d = geo::distance(self.nodes[n], at);
                if d < best.1 || (d == best.1 && n < best.0) {
                    best = (n, d);
                }
            }
        }
        Ok(best.0)
    }

    /// Single-source shortest path distances and predecessors.
    ///
    /// Nodes settle in `(distance, index)` order and predecessors only change
    /// on a strictly shorter distance, so equal-length alternatives resolve
    /// the same way on every run.
    pub fn dijkstra(&self, source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        self.dijkstra_until(source, None)
    }

    fn dijkstra_until(
        &self,
        source: usize,
        target: Option<usize>,
    ) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Reverse(HeapEntry(0.0, source)));

        while let Some(Reverse(HeapEntry(d, u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if Some(u) == target {
                break;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = Some(u);
                    heap.push(Reverse(HeapEntry(nd, v)));
                }
            }
        }
        (dist, pred)
    }

    /// Shortest path length between two nodes, `INFINITY` if unreachable.
    pub fn path_length(&self, from: usize, to: usize) -> f64 {
        self.dijkstra_until(from, Some(to)).0[to]
    }

    pub fn shortest_path(&self, from: usize, to: usize) -> Result<Vec<usize>> {
        if from == to {
            return Err(Error::NoRoute { from, to });
        }
        let (dist, pred) = self.dijkstra_until(from, Some(to));
        if !dist[to].is_finite() {
            return Err(Error::NoRoute { from, to });
        }
        let mut path = vec![to];
        let mut cur = to;
        while let Some(p) = pred[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Ok(path)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = GraphDocument {
            params: self.params.clone(),
            nodes: self.nodes.iter().map(|c| [c.lat(), c.lon()]).collect(),
            edges: self.edges.clone(),
        };
        serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::parse("graph", "output", e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bad = |m: String| Error::parse("graph", "document", m);
        let doc: GraphDocument = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        doc.params.validate()?;
        let expected = doc.params.rows * doc.params.cols;
        if doc.nodes.len() != expected {
            return Err(bad(format!(
                "expected {expected} nodes, found {}",
                doc.nodes.len()
            )));
        }
        let nodes = doc
            .nodes
            .iter()
            .map(|&[lat, lon]| Coordinate::new(lat, lon))
            .collect::<Result<Vec<_>>>()?;
        for (k, e) in doc.edges.iter().enumerate() {
            if e.u >= expected || e.v >= expected || e.u == e.v {
                return Err(bad(format!(
                    "edge {k} has invalid endpoints ({}, {})",
                    e.u, e.v
                )));
            }
            if !(e.weight_m >= 0.0 && e.weight_m.is_finite()) {
                return Err(bad(format!("edge {k} has invalid weight {}", e.weight_m)));
            }
        }
        if !is_connected(expected, doc.edges.iter().map(|e| (e.u, e.v))) {
            return Err(bad("graph is not connected".into()));
        }
        Ok(Self::assemble(doc.params, nodes, doc.edges))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDocument {
    params: GridParams,
    /// `[lat, lon]` per node, row-major from the origin.
    nodes: Vec<[f64; 2]>,
    edges: Vec<Edge>,
}

#[derive(PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

fn is_connected(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut adj = vec![Vec::new(); n];
    for (u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// Shortest route between the nodes nearest to `origin` and `destination`.
pub fn shortest_route(g: &GridGraph, origin: Coordinate, destination: Coordinate) -> Result<Route> {
    let from = g.snap(origin)?;
    let to = g.snap(destination)?;
    let path = g.shortest_path(from, to)?;
    Route::new(
        format!("sp-{from}-{to}"),
        path.into_iter().map(|n| g.node(n)).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAssessment {
    pub detour_m: f64,
    pub detour_fraction: f64,
    pub compatible: bool,
    /// Why the shared ride could not be routed, if it could not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl OracleAssessment {
    /// Builds a verdict from the three legs of the shared ride
    /// `A.start → R.start → R.end → A.end` and the vehicle's own length.
    pub fn from_legs(vehicle_length_m: f64, legs: [f64; 3]) -> Self {
        let shared: f64 = legs.iter().sum();
        if !shared.is_finite() {
            return Self::infeasible("a leg of the shared ride is unreachable".into());
        }
        let detour_m = (shared - vehicle_length_m).max(0.0);
        let detour_fraction = if vehicle_length_m > 0.0 {
            detour_m / vehicle_length_m
        } else if detour_m == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            detour_m,
            detour_fraction,
            compatible: detour_fraction <= MAX_DETOUR_FRACTION,
            diagnostic: None,
        }
    }

    pub fn infeasible(diagnostic: String) -> Self {
        Self {
            detour_m: f64::INFINITY,
            detour_fraction: f64::INFINITY,
            compatible: false,
            diagnostic: Some(diagnostic),
        }
    }
}

/// Detour the vehicle on `a` incurs to serve request `r` on grid `g`.
pub fn assess_shared_ride(g: &GridGraph, a: &Route, r: &Route) -> OracleAssessment {
    let snapped = [a.start(), r.start(), r.end(), a.end()]
        .into_iter()
        .map(|c| g.snap(c))
        .collect::<Result<Vec<_>>>();
    let nodes = match snapped {
        Ok(n) => n,
        Err(e) => return OracleAssessment::infeasible(e.to_string()),
    };
    let legs = [
        g.path_length(nodes[0], nodes[1]),
        g.path_length(nodes[1], nodes[2]),
        g.path_length(nodes[2], nodes[3]),
    ];
    OracleAssessment::from_legs(route_length(a), legs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intact(rows: usize, cols: usize) -> GridGraph {
        GridGraph::generate(GridParams {
            rows,
            cols,
            removal_fraction: 0.0,
            ..GridParams::default()
        })
        .unwrap()
    }

    #[test]
    fn default_grid_shape() {
        let g = GridGraph::generate(GridParams::default()).unwrap();
        assert_eq!(g.node_count(), 400);
        // 2 * 20 * 19 lattice edges, 10% removed.
        assert_eq!(g.edges().len(), 760 - 76);
        let side = geo::distance(g.node(0), g.node(g.node_index(19, 0)));
        assert!((side - 19.0 * 250.0).abs() < 1.0, "{side}");
        let step = geo::distance(g.node(0), g.node(1));
        assert!((step - 250.0).abs() < 0.5, "{step}");
    }

    #[test]
    fn generation_is_seeded() {
        let p = GridParams::default();
        assert_eq!(
            GridGraph::generate(p.clone()).unwrap(),
            GridGraph::generate(p.clone()).unwrap()
        );
        let other = GridGraph::generate(GridParams { seed: 8, ..p }).unwrap();
        assert_ne!(
            other.edges(),
            GridGraph::generate(GridParams::default()).unwrap().edges()
        );
    }

    #[test]
    fn heavy_removal_keeps_connectivity() {
        let g = GridGraph::generate(GridParams {
            rows: 6,
            cols: 6,
            removal_fraction: 0.9,
            ..GridParams::default()
        })
        .unwrap();
        // A spanning tree is all that can survive.
        assert_eq!(g.edges().len(), 35);
        assert!(g.dijkstra(0).0.iter().all(|d| d.is_finite()));
    }

    #[test]
    fn rejects_bad_params() {
        let p = GridParams::default();
        assert!(GridGraph::generate(GridParams {
            spacing_m: 0.0,
            ..p.clone()
        })
        .is_err());
        assert!(GridGraph::generate(GridParams {
            rows: 1,
            ..p.clone()
        })
        .is_err());
        assert!(GridGraph::generate(GridParams {
            removal_fraction: 1.0,
            ..p
        })
        .is_err());
    }

    #[test]
    fn snapping() {
        let g = intact(5, 5);
        let n = g.node_index(2, 3);
        assert_eq!(g.snap(g.node(n)).unwrap(), n);
        let nudged = Coordinate::new(g.node(n).lat() + 0.0003, g.node(n).lon() - 0.0003).unwrap();
        assert_eq!(g.snap(nudged).unwrap(), n);
        let outside = Coordinate::new(g.node(0).lat() - 0.01, g.node(0).lon()).unwrap();
        assert!(matches!(g.snap(outside), Err(Error::OutsideGrid { .. })));
    }

    #[test]
    fn same_node_has_no_route() {
        let g = intact(4, 4);
        let err = shortest_route(&g, g.node(5), g.node(5)).unwrap_err();
        assert!(matches!(err, Error::NoRoute { from: 5, to: 5 }));
    }

    #[test]
    fn straight_corridor_has_manhattan_length() {
        let g = intact(8, 8);
        let (from, to) = (g.node_index(3, 1), g.node_index(3, 6));
        let route = shortest_route(&g, g.node(from), g.node(to)).unwrap();
        assert_eq!(route.len(), 6);
        // Every hop in one row has the same haversine length.
        let hop = geo::distance(g.node(from), g.node(from + 1));
        assert!((route_length(&route) - 5.0 * hop).abs() < 1e-6);
        assert!(route.points().iter().all(|p| p.lat() == g.node(from).lat()));

        // Diagonal trip: 5 vertical hops plus 5 horizontal hops, taken along
        // the northern row where east-west hops are shortest.
        let l = route_length(
            &shortest_route(&g, g.node(g.node_index(1, 1)), g.node(g.node_index(6, 6))).unwrap(),
        );
        let vertical = geo::distance(g.node(g.node_index(1, 1)), g.node(g.node_index(2, 1)));
        let north_hop = geo::distance(g.node(g.node_index(6, 1)), g.node(g.node_index(6, 2)));
        assert!((l - 5.0 * (vertical + north_hop)).abs() < 1e-6, "{l}");
    }

    #[test]
    fn path_never_beats_great_circle() {
        let g = GridGraph::generate(GridParams::default()).unwrap();
        for (a, b) in [(0, 399), (17, 250), (123, 321)] {
            let route = shortest_route(&g, g.node(a), g.node(b)).unwrap();
            assert!(route_length(&route) >= geo::distance(g.node(a), g.node(b)));
            assert_eq!(route_length(&route), g.path_length(a, b));
        }
    }

    #[test]
    fn identical_demand_has_no_detour() {
        let g = GridGraph::generate(GridParams::default()).unwrap();
        let a = shortest_route(&g, g.node(21), g.node(377)).unwrap();
        let v = assess_shared_ride(&g, &a, &a);
        assert_eq!(v.detour_m, 0.0);
        assert!(v.compatible);
    }

    #[test]
    fn sub_path_demand_has_no_detour() {
        let g = intact(10, 10);
        let a = shortest_route(&g, g.node(g.node_index(0, 0)), g.node(g.node_index(9, 9))).unwrap();
        let pts = a.points();
        let r = Route::new("r", pts[3..12].to_vec()).unwrap();
        let v = assess_shared_ride(&g, &a, &r);
        assert!(v.detour_m < 1e-6, "{}", v.detour_m);
        assert!(v.compatible);
    }

    #[test]
    fn distant_perpendicular_demand_is_incompatible() {
        let g = intact(20, 20);
        let a = shortest_route(&g, g.node(g.node_index(0, 0)), g.node(g.node_index(0, 8))).unwrap();
        let r = shortest_route(
            &g,
            g.node(g.node_index(19, 15)),
            g.node(g.node_index(10, 15)),
        )
        .unwrap();
        let v = assess_shared_ride(&g, &a, &r);
        // Legs: (0,0)->(19,15) = 34 hops, 9 hops down, (10,15)->(0,8) = 17 hops; A is 8 hops.
        assert!(v.detour_fraction > 4.0, "{}", v.detour_fraction);
        assert!(!v.compatible);
    }

    #[test]
    fn from_legs_edge_cases() {
        let v = OracleAssessment::from_legs(100.0, [0.0, 90.0, 0.0]);
        assert_eq!((v.detour_m, v.compatible), (0.0, true));
        let v = OracleAssessment::from_legs(100.0, [10.0, 130.0, 10.0]);
        assert_eq!(
            (v.detour_m, v.detour_fraction, v.compatible),
            (50.0, 0.5, true)
        );
        let v = OracleAssessment::from_legs(100.0, [f64::INFINITY, 1.0, 1.0]);
        assert!(!v.compatible && v.diagnostic.is_some());
    }

    #[test]
    fn json_round_trip() {
        let g = GridGraph::generate(GridParams {
            rows: 6,
            cols: 7,
            ..GridParams::default()
        })
        .unwrap();
        let back = GridGraph::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn json_rejects_disconnected_graph() {
        let g = intact(3, 3);
        let mut doc: serde_json::Value = serde_json::from_str(&g.to_json().unwrap()).unwrap();
        doc["edges"] = serde_json::json!([{"u": 0, "v": 1, "weight_m": 1.0}]);
        assert!(GridGraph::from_json(&doc.to_string()).is_err());
        doc["edges"] = serde_json::json!([{"u": 0, "v": 99, "weight_m": 1.0}]);
        assert!(GridGraph::from_json(&doc.to_string()).is_err());
    }
}
