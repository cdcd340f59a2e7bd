//! Dense simplex parallel-space maps, coverage oracles and recursive volume analysis.

pub mod analysis;
pub mod cli;
pub mod dispatch;
pub mod error;
pub mod map2;
pub mod map3;
pub mod oracle;
pub mod simplex;

pub use error::{Error, Result};
pub use oracle::{check_cover, CheckOptions, CoverStrategy, CoverageReport};
pub use simplex::{Coord, SimplexSpec};
