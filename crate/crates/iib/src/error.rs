use crate::image::Rect;

/// Errors produced by descriptor construction, matching, selection and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("extra channel `{name}` is {got_width}x{got_height}, expected {want_width}x{want_height}")]
    ChannelDimensionMismatch {
        name: String,
        got_width: usize,
        got_height: usize,
        want_width: usize,
        want_height: usize,
    },

    #[error("image dimensions {width}x{height} are invalid (both must be >= 1)")]
    EmptyImage { width: usize, height: usize },

    #[error("rect {rect:?} out of bounds for {width}x{height} channel")]
    RectOutOfBounds {
        rect: Rect,
        width: usize,
        height: usize,
    },

    #[error("radius {radius} too small for granularity {granularity}; minimum is {min}")]
    RadiusTooSmall {
        radius: f64,
        granularity: u8,
        min: f64,
    },

    #[error("granularity {0} outside supported range 1..=8")]
    InvalidGranularity(u8),

    #[error("descriptor config has no channels")]
    NoChannels,

    #[error("channel id {0} does not name a channel")]
    InvalidChannelId(u8),

    #[error("channel {0:?} not present in the channel stack")]
    MissingChannel(crate::image::ChannelKind),

    #[error(
        "keypoint ({x}, {y}) radius {radius} has a region of support outside the {width}x{height} image"
    )]
    KeypointOutOfBounds {
        x: f64,
        y: f64,
        radius: f64,
        width: usize,
        height: usize,
    },

    #[error("descriptor fingerprints differ: {a} vs {b}")]
    FingerprintMismatch { a: String, b: String },

    #[error("matching threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),

    #[error("homography is singular (|det| = {det:e})")]
    SingularHomography { det: f64 },

    #[error("projected point maps to infinity (homogeneous w = 0)")]
    PointAtInfinity,

    #[error("reprojection tolerance {0} must be >= 0")]
    InvalidEpsilon(f64),

    #[error("training set has {got} positive pairs, need at least {min}")]
    TooFewPositives { got: usize, min: usize },

    #[error("training set must contain both labels")]
    SingleClassTraining,

    #[error("target size {target} bits not divisible by {quad_bits} bits per quadruple")]
    TargetNotQuadAligned { target: usize, quad_bits: usize },

    #[error("target size {target} bits exceeds full descriptor size {full}")]
    TargetTooLarge { target: usize, full: usize },

    #[error("photometric parameters invalid: gain {gain}, gamma {gamma} (both must be > 0)")]
    InvalidPhotometric { gain: f64, gamma: f64 },

    #[error("{path}: {message}")]
    Format { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    ImageDecode {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn format(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
