use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain accepted by an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular 1/V coefficient: |V({x})| = {value:e} is below v_min = {v_min:e}")]
    SingularCoefficient { x: f64, value: f64, v_min: f64 },

    #[error("no support on plane x = {plane} (column {column})")]
    NoSupportOnPlane { plane: f64, column: usize },

    #[error("no arrivals at this time: t = {time} (row {row})")]
    NoArrivals { time: f64, row: usize },

    #[error("zero norm: {0}")]
    ZeroNorm(String),

    #[error("step rejected: spectral radius {radius} of the update exceeds the bound {bound}")]
    StepRejected { radius: f64, bound: f64 },

    #[error("time window [{lo}, {hi}] too small: tail mass {tail:e} exceeds 1e-3; try [{suggested_lo}, {suggested_hi}]")]
    WindowTooSmall {
        lo: f64,
        hi: f64,
        tail: f64,
        suggested_lo: f64,
        suggested_hi: f64,
    },

    #[error("support truncation lost {lost:e} of the norm (hard limit 1e-3)")]
    TruncationLoss { lost: f64 },

    #[error("jacobian p_x/m vanishes at {count} node(s) carrying amplitude")]
    JacobianVanishes { count: usize },

    #[error("index {index} out of range for {len} slices")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Wraps `self` with the name of the scenario stage that produced it.
    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
