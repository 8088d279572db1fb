use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("monomial index error: {0}")]
    Index(String),

    #[error("arity mismatch: expected {expected} variables, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate cubic term: a*tau0 = 3*beta (a = {a}, beta = {beta})")]
    DegenerateCubicTerm { a: f64, beta: f64 },

    #[error("spectral degeneracy: |P(i*omega)| = {margin:e} at omega = {omega} (below {threshold:e})")]
    SpectralDegeneracy { margin: f64, omega: f64, threshold: f64 },

    #[error("adjoint normalization failed: {0}")]
    Normalization(String),

    #[error("homological split failed at degree {degree}: residual {residual:e}")]
    Split { degree: usize, residual: f64 },

    #[error("center manifold solve failed at degree {degree}: residual {residual:e} (theta degree {theta_degree})")]
    CmResidual {
        degree: usize,
        theta_degree: usize,
        residual: f64,
    },

    #[error("theta polynomial degree {degree} exceeds cap {cap}")]
    ThetaDegreeOverflow { degree: usize, cap: usize },

    #[error("lemma precondition violated: {0}")]
    LemmaPrecondition(String),

    #[error("order {degree} feedback term has off-W residual {residual:e}")]
    LambdaResidual { degree: usize, residual: f64 },

    #[error("postcondition failed: {0}")]
    Postcondition(String),

    #[error("solution blew up at t = {t} (|z| = {norm:e})")]
    Blowup { t: f64, norm: f64 },

    #[error("quadrature error: {0}")]
    Quadrature(String),

    #[error("spectral mismatch: {0}")]
    SpectralMismatch(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
