use crate::factorgraph::VariableId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("rank deficient: pivot of column {column} below tolerance")]
    RankDeficient { column: usize },

    #[error("update row touches column {column}, before first involved column {j}")]
    InvolvedBeforeJ { column: usize, j: usize },

    #[error("factor references unknown variable {0}")]
    UnknownVariable(VariableId),

    #[error("new order is not a permutation of the current order")]
    NotAPermutation,

    #[error("malformed factor: {0}")]
    InvalidFactor(String),

    #[error("invalid update: {0}")]
    InvalidUpdate(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("edge references missing vertex {0}")]
    MissingVertex(u32),

    #[error("information matrix on line {line} is not positive definite")]
    NonPsdInformation { line: usize },

    #[error("candidate path is empty")]
    EmptyPath,

    #[error("no candidates to plan over")]
    NoCandidates,

    #[error("hypothesis tree exceeded {cap} nodes")]
    BranchExplosion { cap: usize },

    #[error("goal {0:?} is unreachable")]
    GoalUnreachable((i32, i32)),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
