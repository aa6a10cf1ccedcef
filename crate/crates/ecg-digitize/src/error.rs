//! Error type shared by every pipeline stage.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {detail}")]
    Unwritable { path: PathBuf, detail: String },

    #[error("unsupported image format in {path}: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },

    #[error("unsupported bit depth in {path}: {detail}")]
    UnsupportedBitDepth { path: PathBuf, detail: String },

    #[error("corrupt image stream in {path}: {detail}")]
    CorruptStream { path: PathBuf, detail: String },

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("histogram is degenerate (fewer than two distinct values)")]
    DegenerateHistogram,

    #[error(
        "thresholding marked {percent:.0}% of the page as ink; a plotted trace is sparse, \
         so the page has no usable curve"
    )]
    InkMajority { percent: f64 },

    #[error("no colored grid detected (color index is uniform)")]
    NoGridDetected,

    #[error("too few grid lines along {axis}: found {found}, need at least {need}")]
    TooFewGridLines {
        axis: &'static str,
        found: usize,
        need: usize,
    },

    #[error("grid is not square: horizontal pitch {h_pitch:.2} px vs vertical pitch {v_pitch:.2} px")]
    NonSquareGrid { h_pitch: f64, v_pitch: f64 },

    #[error("no curves found (row projection has no maxima)")]
    NoCurves,

    #[error("empty column region of interest")]
    EmptyRoi,

    #[error("column range {start}..={end} outside image width {width}")]
    RoiOutOfRange {
        start: usize,
        end: usize,
        width: usize,
    },

    #[error("stripe contains no active pixels")]
    EmptyStripe,

    #[error("image contains no active pixels")]
    EmptyImage,

    #[error("trace has no valid columns")]
    NoValidColumns,

    #[error("trace still contains missing columns (fill gaps first)")]
    MissingValues,

    #[error("lead {lead}: signal needs {needed_mm:.1} mm from the stripe center but only {avail_mm:.1} mm is available")]
    SignalClipped {
        lead: String,
        needed_mm: f64,
        avail_mm: f64,
    },

    #[error("glyph overlaps the trace at row {row}, column {col}")]
    GlyphOverlap { row: usize, col: usize },

    #[error("invalid sheet spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("blur sigma must be non-negative, got {0}")]
    NegativeSigma(f64),

    #[error("desaturation factor must lie in [0, 1], got {0}")]
    BadDesaturation(f64),

    #[error("stripe index {index} out of range: page has {count} stripes")]
    StripeIndexOutOfRange { index: usize, count: usize },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost stage name, if this error was wrapped by the pipeline.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, source } => Some(source.stage().unwrap_or(stage)),
            _ => None,
        }
    }
}
