//! Geographic primitives: validated coordinates, routes and great-circle
//! lengths.
//!
//! Distances are haversine distances on a sphere of radius
//! [`EARTH_RADIUS_M`], expressed in meters. Longitudes are expected to be
//! pre-normalized to `[-180, 180]`; nothing here wraps across the
//! antimeridian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A point in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coordinate {
    lat: f64,
    lon: f64,
}

impl Coordinate {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if lat.is_finite()
            && lon.is_finite()
            && (-90.0..=90.0).contains(&lat)
            && (-180.0..=180.0).contains(&lon)
        {
            Ok(Self { lat, lon })
        } else {
            Err(Error::InvalidCoordinate { lat, lon })
        }
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

impl<'de> Deserialize<'de> for Coordinate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lat: f64,
            lon: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        Coordinate::new(raw.lat, raw.lon).map_err(serde::de::Error::custom)
    }
}

/// Haversine great-circle distance in meters.
pub fn distance(a: Coordinate, b: Coordinate) -> f64 {
    let lat_a = a.lat.to_radians();
    let lat_b = b.lat.to_radians();
    let half_dlat = ((b.lat - a.lat).to_radians() / 2.0).sin();
    let half_dlon = ((b.lon - a.lon).to_radians() / 2.0).sin();

    let h = half_dlat * half_dlat + lat_a.cos() * lat_b.cos() * half_dlon * half_dlon;
    // Rounding can push h a hair above 1 for antipodal points.
    2.0 * EARTH_RADIUS_M * h.min(1.0).sqrt().asin()
}

/// An ordered polyline with an identity. Point order is travel order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRoute")]
pub struct Route {
    id: String,
    points: Vec<Coordinate>,
}

#[derive(Deserialize)]
struct RawRoute {
    id: String,
    points: Vec<Coordinate>,
}

impl TryFrom<RawRoute> for Route {
    type Error = Error;

    fn try_from(raw: RawRoute) -> Result<Self> {
        Route::new(raw.id, raw.points)
    }
}

impl Route {
    pub fn new(id: impl Into<String>, points: Vec<Coordinate>) -> Result<Self> {
        let id = id.into();
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                id,
                count: points.len(),
            });
        }
        Ok(Self { id, points })
    }

    /// Builds a route from `(lat, lon)` pairs.
    pub fn from_lat_lon(id: impl Into<String>, points: &[(f64, f64)]) -> Result<Self> {
        let points = points
            .iter()
            .map(|&(lat, lon)| Coordinate::new(lat, lon))
            .collect::<Result<Vec<_>>>()?;
        Self::new(id, points)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn points(&self) -> &[Coordinate] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; a route holds at least two points.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> Coordinate {
        self.points[0]
    }

    pub fn end(&self) -> Coordinate {
        self.points[self.points.len() - 1]
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

/// Total polyline length of `route` in meters.
pub fn route_length(route: &Route) -> f64 {
    polyline_length(&route.points)
}

/// Polyline length from point `start` to point `end` (inclusive indices).
pub fn arc_length_between(route: &Route, start: usize, end: usize) -> Result<f64> {
    if start > end || end >= route.points.len() {
        return Err(Error::IndexOutOfRange {
            start,
            end,
            len: route.points.len(),
        });
    }
    Ok(polyline_length(&route.points[start..=end]))
}

fn polyline_length(points: &[Coordinate]) -> f64 {
    points
        .windows(2)
        .fold(0.0, |acc, w| acc + distance(w[0], w[1]))
}
