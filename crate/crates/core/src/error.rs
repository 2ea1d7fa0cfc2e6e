use std::path::PathBuf;

/// Errors produced anywhere in the feature pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("empty audio")]
    EmptyAudio,
    #[error("unsupported sampling rate {0} Hz")]
    UnsupportedRate(u32),
    #[error("invalid label file: {0}")]
    InvalidLabels(String),
    #[error("sampling rates differ: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("noise signal has zero power")]
    SilentNoise,
    #[error("signal too short: need {needed} samples, have {actual}")]
    TooShort { needed: usize, actual: usize },
    #[error("window length {0} too small (minimum 4)")]
    WindowTooSmall(usize),
    #[error("segment at {epoch} with length {len} exceeds signal end {end}")]
    SegmentOutOfBounds { epoch: usize, len: usize, end: usize },
    #[error("singular autocorrelation (silent or constant frame)")]
    SingularAutocorrelation,
    #[error("fewer than three formant peaks found ({0})")]
    TooFewPeaks(usize),
    #[error("peak and valley coincide at {0} Hz")]
    CoincidentPeakValley(f64),
    #[error("zero spectral magnitude at peak bin {0}")]
    ZeroPeak(usize),
    #[error("feature dimension {0} is constant")]
    ConstantDimension(usize),
    #[error("not enough rows: need {needed}, have {actual}")]
    NotEnoughRows { needed: usize, actual: usize },
    #[error("need at least two epochs, have {0}")]
    TooFewEpochs(usize),
    #[error("class {0} is missing or has fewer than two samples")]
    MissingClass(String),
    #[error("standard deviation {sigma} below floor {floor} (class {class}, dimension {dim})")]
    DegenerateVariance {
        class: String,
        dim: usize,
        sigma: f64,
        floor: f64,
    },
    #[error("standard deviation {0} below floor")]
    SigmaBelowFloor(f64),
    #[error("average KLD values must be positive, got {0}")]
    NonPositiveKld(f64),
    #[error("invalid synthesis spec: {0}")]
    InvalidSynthSpec(String),
    #[error("no non-sonorant data")]
    NoNonSonorant,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
