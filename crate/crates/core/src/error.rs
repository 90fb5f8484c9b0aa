use thiserror::Error;

/// Errors raised by mesh construction, assembly, the mode solver and the
/// analysis passes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid-geometry: {0}")]
    InvalidGeometry(String),

    #[error("port-destroyed: slot removes port {port_id} feed edge")]
    PortDestroyed { port_id: u32 },

    #[error("port-unrealizable: {0}")]
    PortUnrealizable(String),

    #[error("empty-mesh: {0}")]
    EmptyMesh(String),

    #[error("unsolvable-mesh: {0}")]
    UnsolvableMesh(String),

    #[error("invalid-input: {0}")]
    InvalidInput(String),

    #[error("invalid-port: {0}")]
    InvalidPort(String),

    #[error("solver-failure: {reason} (condition estimate {condition:.3e})")]
    SolverFailure { reason: String, condition: f64 },

    #[error("indefinite-R: {0}")]
    IndefiniteR(String),

    #[error("undefined-normalization: {0}")]
    UndefinedNormalization(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with a short description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with all context layers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors that come from bad user input or configuration, as
    /// opposed to numerical breakdown.
    pub fn is_usage(&self) -> bool {
        !matches!(
            self.root(),
            Error::SolverFailure { .. } | Error::IndefiniteR(_) | Error::UndefinedNormalization(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Extension for attaching context to results.
pub trait ResultExt<T> {
    fn context(self, context: impl Into<String>) -> Result<T>;
    fn with_context<F: FnOnce() -> String>(self, f: F) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, context: impl Into<String>) -> Result<T> {
        self.map_err(|e| e.context(context))
    }

    fn with_context<F: FnOnce() -> String>(self, f: F) -> Result<T> {
        self.map_err(|e| e.context(f()))
    }
}
