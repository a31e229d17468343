use alloc::string::String;

use thiserror::Error;

use crate::dataset::{GridId, UserId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {value} for user {user} in grid {grid} lies outside [0, {bound}]")]
    ValueOutOfRange {
        user: UserId,
        grid: GridId,
        value: f64,
        bound: f64,
    },
    #[error("dataset has no records")]
    EmptyDataset,
    #[error("count for user {user} in grid {grid} must be positive")]
    NonPositiveCount { user: UserId, grid: GridId },
    #[error("user {user} appears twice in grid {grid}")]
    DuplicateEntry { user: UserId, grid: GridId },
    #[error("unknown grid {0}")]
    UnknownGrid(GridId),
    #[error("grid has no samples")]
    EmptyGrid,
    #[error("array capacity must be at least 1 (got {0})")]
    InvalidCapacity(u64),
    #[error("contribution counts sum to zero")]
    ZeroTotal,
    #[error("retained counts sum to zero")]
    ZeroRetained,
    #[error("invalid clip plan: {0}")]
    InvalidPlan(String),
    #[error("brute-force enumeration over {total} samples exceeds the limit of {limit}")]
    TooLarge { total: u64, limit: u64 },
    #[error("Laplace scale must be positive (got {0})")]
    NonPositiveScale(f64),
    #[error("no values to estimate a quantile from")]
    EmptyValues,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dataset occupancy does not match the clip plan")]
    OccupancyMismatch,
}
