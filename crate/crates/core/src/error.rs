use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature degree {requested} unsupported (maximum {max})")]
    UnsupportedDegree { requested: usize, max: usize },

    #[error("boundary facet {facet} at {centroid:?} is not assigned to exactly one of Dirichlet/Neumann")]
    AmbiguousBoundary { facet: usize, centroid: [f64; 3] },

    #[error("boundary facet {0} has no tag")]
    MissingBoundaryTag(usize),

    #[error("element {element} out of range (mesh has {n_elements})")]
    ElementOutOfRange { element: usize, n_elements: usize },

    #[error("local projection system singular on element {element} (condition estimate {condition:e})")]
    SingularLocalSystem { element: usize, condition: f64 },

    #[error("singular factorization: zero pivot at row {row}")]
    SingularMatrix { row: usize },

    #[error("iterative solver did not converge after {iterations} iterations (residual history tail {history:?})")]
    NotConverged { iterations: usize, history: Vec<f64> },

    #[error("system of size {n} exceeds the configured cap of {cap} unknowns")]
    TooLarge { n: usize, cap: usize },

    #[error("weight function unavailable: {0}")]
    WeightUnavailable(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
