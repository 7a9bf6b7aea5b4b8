use thiserror::Error;

pub type Result<T> = std::result::Result<T, SpinError>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpinError {
    #[error("vertex {0} out of range (vertex count {1})")]
    InvalidVertex(usize, usize),
    #[error("edge index {0} out of range (edge count {1})")]
    InvalidEdge(usize, usize),
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("undefined ratio: z0 = 0")]
    UndefinedRatio,
    #[error("pole of the Mobius map at r = -beta")]
    Pole,
    #[error("parameters outside the required region: {0}")]
    Region(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("all configurations have weight zero")]
    ZeroWeight,
    #[error("internal check failed: {0}")]
    Check(String),
}

impl SpinError {
    /// CLI exit status: 3 for size caps, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            SpinError::SizeCap(_) => 3,
            _ => 2,
        }
    }
}
