use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension must be in 1..={max}, got {got}")]
    BadDimension { got: usize, max: usize },

    #[error("dimension mismatch: expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} must be at least {min}, got {got}")]
    TooSmall { what: &'static str, min: u64, got: u64 },

    #[error("{what} must be at most {max}, got {got}")]
    TooLarge { what: &'static str, max: u64, got: u64 },

    #[error("{0} is not a power of two")]
    NotPowerOfTwo(u64),

    #[error("enumeration of {cells} cells exceeds the budget of {budget}")]
    BudgetExceeded { cells: u128, budget: u128 },

    #[error("block {block} lies outside the grid {extents}")]
    OutsideGrid { block: String, extents: String },

    #[error("block belongs to region {actual}, expected {expected}")]
    WrongRegion {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("invalid recursion parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
