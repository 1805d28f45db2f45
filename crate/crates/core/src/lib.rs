//! Route-similarity matching for shared rides.
//!
//! [`dlcss`] computes the temporally ordered nearest-segment matching between
//! a vehicle route and a request route and condenses it into a score in
//! meters. [`matcher`] filters route pools by that score, [`meeting`] looks
//! for pickup points that rescue near misses, and [`routing`] plus
//! [`evaluation`] measure the filter against a shortest-path detour oracle on
//! a synthetic road grid.

pub mod dataset;
pub mod dlcss;
pub mod error;
pub mod evaluation;
pub mod geo;
pub mod matcher;
pub mod meeting;
pub mod routing;

pub use dlcss::{compute_dlcss, DlcssResult, DlcssSegment, Score};
pub use error::{Error, Result};
pub use geo::{Coordinate, Route};
pub use matcher::{filter_pool, MatchDecision, DEFAULT_THRESHOLD_M};
