use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate (lat {lat}, lon {lon})")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("route `{id}` has {count} point(s), at least 2 are required")]
    TooFewPoints { id: String, count: usize },

    #[error("index range {start}..={end} is invalid for a route with {len} points")]
    IndexOutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("segment list is empty")]
    EmptySegments,

    #[error("coordinate (lat {lat}, lon {lon}) lies outside the grid")]
    OutsideGrid { lat: f64, lon: f64 },

    #[error("no route from node {from} to node {to}")]
    NoRoute { from: usize, to: usize },

    #[error("pool generation failed: {0}")]
    Generation(String),

    #[error("{source_name} {location}: {message}")]
    Parse {
        source_name: String,
        location: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(
        source_name: impl Into<String>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            location: location.into(),
            message: message.into(),
        }
    }

    /// True when the failure came from the filesystem rather than from the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
