use thiserror::Error;

/// Errors raised while loading inputs, building models, or running simulations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed case file: {0}")]
    CaseFormat(#[from] serde_json::Error),

    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },

    #[error("{kind} {id}: references unknown bus {bus}")]
    DanglingReference {
        kind: &'static str,
        id: u32,
        bus: u32,
    },

    #[error("{kind} {id}: references unknown {target} {missing}")]
    UnknownId {
        kind: &'static str,
        id: u32,
        target: &'static str,
        missing: u32,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },

    #[error("{context}, line {line}: {message}")]
    Table {
        context: String,
        line: u64,
        message: String,
    },

    #[error("raster: {0}")]
    Raster(String),

    #[error("line path is empty")]
    EmptyPath,

    #[error("horizon mismatch: expected {expected} hours, got {found}")]
    HorizonMismatch { expected: usize, found: usize },

    #[error("risk vector has {found} entries, network has {expected} lines")]
    RiskMismatch { expected: usize, found: usize },

    #[error("demand profile covers {found} buses, network has {expected}")]
    DemandMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative shed {value} at bus index {bus}")]
    NegativeShed { bus: usize, value: f64 },

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("model is infeasible")]
    Infeasible,

    #[error("day {day}: {source}")]
    Day {
        day: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("beta {beta}: {source}")]
    Sweep {
        beta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CaseFormat(_) => "case_format",
            Error::DuplicateId { .. } => "duplicate_id",
            Error::DanglingReference { .. } => "dangling_reference",
            Error::UnknownId { .. } => "unknown_id",
            Error::InvalidNetwork(_) => "invalid_network",
            Error::Csv { .. } => "csv",
            Error::Table { .. } => "table",
            Error::Raster(_) => "raster",
            Error::EmptyPath => "empty_path",
            Error::HorizonMismatch { .. } => "horizon_mismatch",
            Error::RiskMismatch { .. } => "risk_mismatch",
            Error::DemandMismatch { .. } => "demand_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NegativeShed { .. } => "negative_shed",
            Error::Solver(_) => "solver",
            Error::Infeasible => "infeasible",
            Error::Day { source, .. } | Error::Sweep { source, .. } => source.kind(),
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn on_day(self, day: usize) -> Self {
        Error::Day {
            day,
            source: Box::new(self),
        }
    }
}
