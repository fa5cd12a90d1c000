use std::fmt;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ingestion error at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("sampler failed at iteration {iteration} in block {block}: {source}")]
    Sampler {
        iteration: usize,
        block: Block,
        #[source]
        source: Box<Error>,
    },

    #[error("run aborted at iteration {iteration}")]
    Aborted { iteration: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Short machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidInput(_) => "invalid_input",
            Error::Numerical(_) => "numerical",
            Error::Ingestion { .. } => "ingestion",
            Error::Sampler { .. } => "sampler",
            Error::Aborted { .. } => "aborted",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Blocks of one Gibbs sweep, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Memberships,
    Workspace,
    PolyaGamma,
    Lambda,
    Epsilon,
    Weights,
    Alpha,
    Atoms,
    Regression,
    Spatial,
    Psi,
}

impl Block {
    pub const SWEEP: [Block; 11] = [
        Block::Memberships,
        Block::Workspace,
        Block::PolyaGamma,
        Block::Lambda,
        Block::Epsilon,
        Block::Weights,
        Block::Alpha,
        Block::Atoms,
        Block::Regression,
        Block::Spatial,
        Block::Psi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::Memberships => "memberships",
            Block::Workspace => "workspace",
            Block::PolyaGamma => "polya_gamma",
            Block::Lambda => "lambda",
            Block::Epsilon => "epsilon",
            Block::Weights => "weights",
            Block::Alpha => "alpha",
            Block::Atoms => "atoms",
            Block::Regression => "regression",
            Block::Spatial => "spatial",
            Block::Psi => "psi",
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
