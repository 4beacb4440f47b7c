use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter t = {t} outside range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("derivative of order {order} requested at breakpoint t = {t} without a side")]
    BreakpointSide { t: f64, order: usize },

    #[error("expression parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid function spec: {0}")]
    InvalidFunction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid-backed function does not cover the point ({re}, {im})")]
    GridCoverage { re: f64, im: f64 },

    #[error("point is not strictly inside the circle (|z - c| / r = {ratio})")]
    NotInterior { ratio: f64 },

    #[error("point is covered by fewer than two discs ({count})")]
    FewerThanTwoDiscs { count: usize },

    #[error("z in closed end disc D̄_{which} (|z - c| - r = {margin})")]
    InEndDisc { which: &'static str, margin: f64 },

    #[error("interval endpoint near t = {t} could not be refined (residual {residual})")]
    EndpointRefinement { t: f64, residual: f64 },

    #[error("discriminant |c'|^2 - r'^2 = {value} is not positive at t = {t}")]
    Discriminant { t: f64, value: f64 },

    #[error("t = {t} is a singular point of the critical curve (|p'| = {speed})")]
    SingularPoint { t: f64, speed: f64 },

    #[error("degenerate tangency at t = {t}: {msg}")]
    DegenerateTangency { t: f64, msg: String },

    #[error("point lies within {distance} of the curve")]
    OnCurve { distance: f64 },

    #[error("winding sum deviates from an integer by {deviation}")]
    WindingNotInteger { deviation: f64 },

    #[error("extendibility defect {defect} exceeds threshold {threshold} at t = {t}")]
    Extendibility { t: f64, defect: f64, threshold: f64 },

    #[error("no usable interior samples on the loop")]
    NoInteriorSamples,

    #[error("contour crosses the critical set: {0}")]
    CrossesCriticalSet(String),

    #[error("ambiguous loop matching between z = {from} and z = {to} at minimum step")]
    AmbiguousMatching { from: String, to: String },

    #[error("no valid separating line: {0}")]
    NoSeparatingLine(String),

    #[error("loop classes: {0}")]
    NoOddClass(String),

    #[error("z = {0} is not a station of the trace")]
    NotAStation(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
