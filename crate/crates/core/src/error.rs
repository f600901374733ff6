use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("undeclared symbol `{0}`")]
    Name(String),
    #[error("parse error at {line}:{col}: {msg} (expected one of: {})", expected.join(", "))]
    Parse {
        line: usize,
        col: usize,
        msg: String,
        expected: Vec<String>,
    },
    #[error("equation is not in solved form `u_beta = R`: {0}")]
    SolvedForm(String),
    #[error("cyclic substitution: {0}")]
    SubstitutionCycle(String),
    #[error("polynomial has no derivative of an unknown")]
    Degenerate,
    #[error("inconsistent system, nonzero base-field remainder: {0}")]
    InconsistentSystem(String),
    #[error("rank error: {0}")]
    Rank(String),
    #[error("nonzero remainder for determining polynomial {index}: {remainder}")]
    NonzeroRemainder { index: usize, remainder: String },
    #[error("IS product of the classical chain vanishes")]
    IsVanishes,
    #[error("inclusion violated: {0}")]
    InclusionViolation(String),
    #[error("unbound unknown `{0}`")]
    Binding(String),
    #[error("expression has a non-invertible denominator")]
    NotPolynomial,
    #[error("division by zero")]
    DivisionByZero,
    #[error("unimplemented branch: {0}")]
    Unimplemented(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable kind used in error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Name(_) => "NameError",
            Error::Parse { .. } => "SyntaxError",
            Error::SolvedForm(_) => "SolvedFormError",
            Error::SubstitutionCycle(_) => "SubstitutionCycleError",
            Error::Degenerate => "DegenerateError",
            Error::InconsistentSystem(_) => "InconsistentSystemError",
            Error::Rank(_) => "RankError",
            Error::NonzeroRemainder { .. } => "NonzeroRemainderError",
            Error::IsVanishes => "ISVanishesError",
            Error::InclusionViolation(_) => "InclusionViolationError",
            Error::Binding(_) => "BindingError",
            Error::NotPolynomial => "NotPolynomialError",
            Error::DivisionByZero => "DivisionByZeroError",
            Error::Unimplemented(_) => "UnimplementedBranch",
            Error::Usage(_) => "UsageError",
            Error::Io(_) => "IoError",
        }
    }
}
