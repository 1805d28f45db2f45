//! Synthetic route pools and their GeoJSON interchange format.
//!
//! A pool is written as a `FeatureCollection` of `LineString` features with
//! `[lon, lat]` positions rounded to 7 decimals. Each feature carries its
//! route id in `properties.id`; pool metadata lives in the collection's
//! top-level `properties`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geo::{route_length, Coordinate, Route};
use crate::routing::{GridGraph, GridParams};

/// Shortest trip length drawn by default.
pub const DEFAULT_MIN_LENGTH_M: f64 = 1_000.0;

/// Attempts allowed per requested route before generation gives up.
const MAX_ATTEMPTS_PER_ROUTE: usize = 1_000;

const COORD_SCALE: f64 = 1e7;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutePool {
    routes: Vec<Route>,
    pub metadata: PoolMetadata,
}

impl RoutePool {
    pub fn new(routes: Vec<Route>, metadata: PoolMetadata) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &routes {
            if !seen.insert(r.id()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate route id `{}`",
                    r.id()
                )));
            }
        }
        Ok(Self { routes, metadata })
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Route> {
        self.routes.iter().find(|r| r.id() == id)
    }
}

/// Draws `n` shortest routes between uniformly random distinct nodes,
/// redrawing any route shorter than `min_length_m`.
pub fn generate_pool(g: &GridGraph, n: usize, seed: u64, min_length_m: f64) -> Result<RoutePool> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "pool size must be at least 1".into(),
        ));
    }
    if !(min_length_m >= 0.0 && min_length_m.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "minimum length {min_length_m} must be finite and non-negative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n.to_string().len().max(3);
    let mut routes = Vec::with_capacity(n);
    let mut attempts = 0;
    while routes.len() < n {
        if attempts == MAX_ATTEMPTS_PER_ROUTE * n {
            return Err(Error::Generation(format!(
                "only {} of {n} routes reached {min_length_m} m after {attempts} attempts",
                routes.len()
            )));
        }
        attempts += 1;
        let from = rng.gen_range(0..g.node_count());
        let to = rng.gen_range(0..g.node_count());
        if from == to {
            continue;
        }
        let path = g.shortest_path(from, to)?;
        let route = Route::new(
            format!("route-{:0width$}", routes.len()),
            path.into_iter().map(|k| g.node(k)).collect(),
        )?;
        if route_length(&route) >= min_length_m {
            routes.push(route);
        }
    }
    RoutePool::new(
        routes,
        PoolMetadata {
            seed: Some(seed),
            min_length_m: Some(min_length_m),
            grid: Some(g.params().clone()),
        },
    )
}

fn round7(x: f64) -> f64 {
    (x * COORD_SCALE).round() / COORD_SCALE
}

pub fn to_geojson(pool: &RoutePool) -> Value {
    let features: Vec<Value> = pool
        .routes
        .iter()
        .map(|r| {
            let coords: Vec<[f64; 2]> = r
                .points()
                .iter()
                .map(|p| [round7(p.lon()), round7(p.lat())])
                .collect();
            json!({
                "type": "Feature",
                "properties": { "id": r.id() },
                "geometry": { "type": "LineString", "coordinates": coords },
            })
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "properties": pool.metadata,
        "features": features,
    })
}

pub fn from_geojson(doc: &Value) -> Result<RoutePool> {
    let top = |m: &str| Error::parse("geojson", "collection", m);
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(top("expected a FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| top("missing `features` array"))?;
    let metadata = match doc.get("properties") {
        None | Some(Value::Null) => PoolMetadata::default(),
        Some(p) => {
            serde_json::from_value(p.clone()).map_err(|e| top(&format!("bad properties: {e}")))?
        }
    };

    let mut routes = Vec::with_capacity(features.len());
    let mut seen = HashSet::new();
    for (k, feature) in features.iter().enumerate() {
        let route = parse_feature(feature)
            .map_err(|m| Error::parse("geojson", format!("feature {k}"), m))?;
        if !seen.insert(route.id().to_owned()) {
            return Err(Error::parse(
                "geojson",
                format!("feature {k}"),
                format!("duplicate id `{}`", route.id()),
            ));
        }
        routes.push(route);
    }
    Ok(RoutePool { routes, metadata })
}

fn parse_feature(feature: &Value) -> std::result::Result<Route, String> {
    let id = match feature.pointer("/properties/id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err("`properties.id` must be a string or number".into()),
        None => return Err("missing `properties.id`".into()),
    };
    let geometry = feature.get("geometry").ok_or("missing geometry")?;
    match geometry.get("type").and_then(Value::as_str) {
        Some("LineString") => {}
        Some(other) => return Err(format!("expected LineString geometry, found {other}")),
        None => return Err("geometry without type".into()),
    }
    let coords = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or("missing coordinates")?;
    let points = coords
        .iter()
        .map(|pos| {
            let pair = pos
                .as_array()
                .filter(|a| a.len() >= 2)
                .ok_or("position must be [lon, lat]")?;
            let lon = pair[0].as_f64().ok_or("non-numeric longitude")?;
            let lat = pair[1].as_f64().ok_or("non-numeric latitude")?;
            Coordinate::new(lat, lon).map_err(|e| e.to_string())
        })
        .collect::<std::result::Result<Vec<_>, String>>()?;
    Route::new(id, points).map_err(|e| e.to_string())
}

pub fn write_geojson(pool: &RoutePool, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&to_geojson(pool))
        .map_err(|e| Error::parse("geojson", "output", e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn read_geojson(path: &Path) -> Result<RoutePool> {
    let text = fs::read_to_string(path)?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::parse("geojson", format!("line {}", e.line()), e.to_string()))?;
    from_geojson(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_grid() -> GridGraph {
        GridGraph::generate(GridParams {
            rows: 8,
            cols: 8,
            ..GridParams::default()
        })
        .unwrap()
    }

    #[test]
    fn single_route_pool() {
        let g = small_grid();
        let pool = generate_pool(&g, 1, 3, 500.0).unwrap();
        assert_eq!(pool.len(), 1);
        assert!(route_length(&pool.routes()[0]) >= 500.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let g = small_grid();
        assert_eq!(
            generate_pool(&g, 20, 11, 300.0).unwrap(),
            generate_pool(&g, 20, 11, 300.0).unwrap()
        );
        assert_ne!(
            generate_pool(&g, 20, 11, 300.0).unwrap(),
            generate_pool(&g, 20, 12, 300.0).unwrap()
        );
    }

    #[test]
    fn full_size_pool_on_default_grid() {
        let g = GridGraph::generate(GridParams::default()).unwrap();
        let pool = generate_pool(&g, 180, 7, 1_000.0).unwrap();
        assert_eq!(pool.len(), 180);
        assert!(pool.routes().iter().all(|r| route_length(r) >= 1_000.0));
    }

    #[test]
    fn unattainable_length_fails() {
        let g = small_grid();
        let err = generate_pool(&g, 2, 1, 1e7).unwrap_err();
        assert!(matches!(err, Error::Generation(_)));
        assert!(generate_pool(&g, 0, 1, 0.0).is_err());
    }

    #[test]
    fn empty_pool_serializes_to_empty_collection() {
        let pool = RoutePool::new(vec![], PoolMetadata::default()).unwrap();
        let doc = to_geojson(&pool);
        assert_eq!(doc["features"].as_array().unwrap().len(), 0);
        assert_eq!(from_geojson(&doc).unwrap(), pool);
    }

    #[test]
    fn missing_id_is_reported_with_feature_index() {
        let doc = json!({
            "type": "FeatureCollection",
            "features": [
                {"type": "Feature", "properties": {"id": "a"},
                 "geometry": {"type": "LineString", "coordinates": [[6.0, 50.0], [6.1, 50.0]]}},
                {"type": "Feature", "properties": {},
                 "geometry": {"type": "LineString", "coordinates": [[6.0, 50.0], [6.1, 50.0]]}}
            ]
        });
        let err = from_geojson(&doc).unwrap_err().to_string();
        assert!(err.contains("feature 1") && err.contains("id"), "{err}");
    }

    #[test]
    fn rejects_bad_geometry() {
        let feature = |geom: Value| {
            json!({"type": "FeatureCollection", "features": [
                {"type": "Feature", "properties": {"id": "x"}, "geometry": geom}
            ]})
        };
        let point = feature(json!({"type": "Point", "coordinates": [6.0, 50.0]}));
        assert!(from_geojson(&point)
            .unwrap_err()
            .to_string()
            .contains("LineString"));
        let short = feature(json!({"type": "LineString", "coordinates": [[6.0, 50.0]]}));
        assert!(from_geojson(&short).is_err());
        let bad = feature(json!({"type": "LineString", "coordinates": [[6.0, 95.0], [6.0, 50.0]]}));
        assert!(from_geojson(&bad).is_err());
        assert!(from_geojson(&json!({"type": "Feature"})).is_err());
    }

    #[test]
    fn malformed_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.geojson");
        fs::write(&path, "{ not json").unwrap();
        assert!(matches!(read_geojson(&path), Err(Error::Parse { .. })));
        assert!(read_geojson(&dir.path().join("missing.geojson"))
            .unwrap_err()
            .is_io());
    }

    #[test]
    fn file_round_trip_keeps_metadata() {
        let g = small_grid();
        let pool = generate_pool(&g, 5, 9, 0.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.geojson");
        write_geojson(&pool, &path).unwrap();
        let back = read_geojson(&path).unwrap();
        assert_eq!(back.metadata, pool.metadata);
        assert_eq!(back.len(), 5);
    }

    fn arb_pool() -> impl Strategy<Value = RoutePool> {
        prop::collection::vec(
            prop::collection::vec((-60.0..60.0f64, -170.0..170.0f64), 2..8),
            0..6,
        )
        .prop_map(|routes| {
            let routes = routes
                .iter()
                .enumerate()
                .map(|(k, pts)| Route::from_lat_lon(format!("r{k}"), pts).unwrap())
                .collect();
            RoutePool::new(
                routes,
                PoolMetadata {
                    seed: Some(1),
                    ..Default::default()
                },
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn round_trip_within_seven_decimals(pool in arb_pool()) {
            let doc = to_geojson(&pool);
            let back = from_geojson(&serde_json::from_str(&doc.to_string()).unwrap()).unwrap();
            prop_assert_eq!(back.len(), pool.len());
            prop_assert_eq!(&back.metadata, &pool.metadata);
            for (x, y) in back.routes().iter().zip(pool.routes()) {
                prop_assert_eq!(x.id(), y.id());
                for (p, q) in x.points().iter().zip(y.points()) {
                    prop_assert!((p.lat() - q.lat()).abs() <= 0.5e-7 + 1e-12);
                    prop_assert!((p.lon() - q.lon()).abs() <= 0.5e-7 + 1e-12);
                }
            }
            // Stable after the first cycle.
            let again = to_geojson(&back);
            prop_assert_eq!(again.to_string(), from_geojson(&again).map(|p| to_geojson(&p)).unwrap().to_string());
            prop_assert_eq!(from_geojson(&again).unwrap(), back);
        }
    }
}
