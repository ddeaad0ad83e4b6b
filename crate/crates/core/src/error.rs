use thiserror::Error;

pub type Result<T> = std::result::Result<T, DesignError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid regressor specification: {0}")]
    InvalidRegressors(String),

    #[error("regressor matrix has numerical rank {rank} < {p} columns")]
    RankDeficient { rank: usize, p: usize },

    #[error("regressor table has {found} rows but the design space has {expected} points")]
    TableRowMismatch { expected: usize, found: usize },

    #[error("invalid design weights: {0}")]
    InvalidWeights(String),

    #[error("design support spans rank {rank} < {p}; criteria are undefined")]
    InadmissibleDesign { rank: usize, p: usize },

    #[error("moment matrix R is numerically singular (condition number {condition:.3e}) for {design}")]
    SingularMoments { condition: f64, design: String },

    #[error("mixing parameter nu = {0} is outside [0, 1]")]
    NuOutOfRange(f64),

    #[error("invalid loss scale: {0}")]
    InvalidScale(String),

    #[error("contaminant psi0 violates its constraints: {0}")]
    InvalidContaminant(String),

    #[error("no admissible contaminant: N = {n} <= p = {p}")]
    NoContaminantSpace { n: usize, p: usize },

    #[error("infeasible bound: {0}")]
    InfeasibleBound(String),

    #[error("target {target} outside the attainable CMB range [{low}, {high}]")]
    TargetOutOfRange { target: f64, low: f64, high: f64 },

    #[error("invalid run size: {0}")]
    InvalidRunSize(String),

    #[error("rounding failed: {0}")]
    Rounding(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid optimizer settings: {0}")]
    InvalidOptions(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for DesignError {
    fn from(e: std::io::Error) -> Self {
        DesignError::Io(e.to_string())
    }
}

impl From<csv::Error> for DesignError {
    fn from(e: csv::Error) -> Self {
        DesignError::Io(e.to_string())
    }
}
