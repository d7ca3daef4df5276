use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("causal graph contains a cycle through {0:?}")]
    Cycle(Vec<String>),
    #[error("node {node:?} references unknown parent {parent:?}")]
    UnknownNode { node: String, parent: String },
    #[error("missing structural constants: {0:?}")]
    MissingConstant(Vec<String>),
    #[error("no input draws")]
    EmptyInput,
    #[error("table has zero total mass")]
    ZeroMass,
    #[error("negative mass {mass} in row {row}")]
    NegativeMass { row: usize, mass: f64 },
    #[error("support point {0} has zero mass")]
    ZeroRow(usize),
    #[error("group {0:?} has zero mass")]
    GroupMassZero(String),
    #[error("frontier sweep needs exactly two groups, found {0}")]
    MultiGroupUnsupported(usize),
    #[error("matrix is not row-stochastic: {0}")]
    NonStochastic(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Stable variant name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Cycle(_) => "cycle",
            Error::UnknownNode { .. } => "unknown_node",
            Error::MissingConstant(_) => "missing_constant",
            Error::EmptyInput => "empty_input",
            Error::ZeroMass => "zero_mass",
            Error::NegativeMass { .. } => "negative_mass",
            Error::ZeroRow(_) => "zero_row",
            Error::GroupMassZero(_) => "group_mass_zero",
            Error::MultiGroupUnsupported(_) => "multi_group_unsupported",
            Error::NonStochastic(_) => "non_stochastic",
            Error::Domain(_) => "domain",
            Error::HypothesisViolation(_) => "hypothesis_violation",
            Error::IterationLimit(_) => "iteration_limit",
            Error::Invalid(_) => "invalid",
        }
    }
}
