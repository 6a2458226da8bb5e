use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot decode image: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("{path}: unsupported image format (expected PNG or binary PGM)")]
    UnsupportedFormat { path: PathBuf },

    #[error("{path}: image has a zero dimension ({width}x{height})")]
    EmptyImage {
        path: PathBuf,
        width: u32,
        height: u32,
    },

    #[error("{path}: cannot encode image: {message}")]
    Encode { path: PathBuf, message: String },

    #[error("box ({x0},{y0})-({x1},{y1}) is outside a {width}x{height} raster")]
    BoxOutOfBounds {
        x0: usize,
        y0: usize,
        x1: usize,
        y1: usize,
        width: usize,
        height: usize,
    },

    #[error("image is {width}x{height}; at least 3x3 is required")]
    TooSmall { width: usize, height: usize },

    #[error("no text lines found")]
    NoTextLines,

    #[error("no content: the ink map has no black pixels")]
    NoContent,

    #[error("orientation undecidable: no text line in either orientation")]
    OrientationUndecidable,

    #[error("invalid config: {key}: {message}")]
    InvalidConfig { key: String, message: String },

    #[error("invalid page spec: {field}: {message}")]
    InvalidPageSpec { field: String, message: String },

    #[error("layout does not fit: {0}")]
    LayoutDoesNotFit(String),
}
