use thiserror::Error;

/// Unified error type for all library operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph spec: {reason}")]
    InvalidGraphSpec { reason: String },

    #[error("regular graph construction failed after {attempts} pairing restarts")]
    RegularConstructionFailed { attempts: usize },

    #[error("edge list parse error at line {line}: {reason}")]
    EdgeListParse { line: usize, reason: String },

    #[error("{name} must lie in [0, 1], got {value}")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },

    #[error("effective-influence assumption violated: {reason}")]
    IneffectiveInfluence { reason: String },

    #[error("invalid sample-size distribution: {reason}")]
    InvalidKDistribution { reason: String },

    #[error("sample size k must be at least 1")]
    SampleSizeZero,

    #[error("exact enumeration supports sample sizes up to {cap}, distribution has k={max_k}")]
    SampleEnumerationTooLarge { max_k: u32, cap: u32 },

    #[error("invalid horizon: {reason}")]
    InvalidHorizon { reason: String },

    #[error("invalid schedule: {reason}")]
    InvalidSchedule { reason: String },

    #[error("window start {t_start} outside [1, {max_start}]")]
    WindowStartOutOfRange { t_start: u32, max_start: u32 },

    #[error("schedule enumeration would exceed {cap} subsets")]
    EnumerationTooLarge { cap: u64 },

    #[error("exact state distribution supports at most {cap} nodes, got {nodes}")]
    StateSpaceTooLarge { nodes: usize, cap: usize },

    #[error("hub window ordering violated: {reason}")]
    HubWindowOrdering { reason: String },

    #[error("integration step {dt} exceeds the maximum of {max} slots")]
    StepTooLarge { dt: f64, max: f64 },

    #[error("invalid trial config: {reason}")]
    InvalidTrialConfig { reason: String },

    #[error("conditioned hub trials require a hub-and-spoke topology")]
    NotHubSpoke,

    #[error("opinion vector: {reason}")]
    InvalidOpinionVector { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
