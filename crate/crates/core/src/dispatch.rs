//! Simulated block-grid launches.
//!
//! Every strategy is swept block by block as a kernel launch would be, with
//! per-shard counters merged by addition. With `ρ = 1` a block is one cell.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map2::{cover_simplex2, is_power_of_two, pad_above};
use crate::map3::{cover_simplex3, pad_simplex3, RecursiveCover};
use crate::oracle::{check_cover, BoundingBox, CheckOptions, CoverStrategy, ENUMERATION_BUDGET};
use crate::simplex::{check_dim, simplex_volume, BlockShape};

/// Static integer operation counts of one map evaluation.
pub mod ops {
    /// `m - 1` additions and one comparison per block.
    pub const fn bb(m: usize) -> u32 {
        m as u32
    }
    /// clz, sub, two shifts for `b` and `q`, shift for `qb`, two adds, one
    /// shift for `2qb`.
    pub const MAP2: u32 = 8;
    /// Slab test, level and copy (clz, sub, shifts), local coordinates,
    /// inside test, then either three adds or three reflections and adds.
    pub const MAP3_FLAT: u32 = 20;
    /// Placement lookup (compare per level), local decode (div, mod), three
    /// offset adds, simplex filter (two adds and a compare).
    pub const MAP3_REC: u32 = 10;
}

/// Strategies with a dense block-to-cell map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappedStrategy {
    Map2,
    Map3Flat,
    Map3Rec,
}

impl MappedStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            MappedStrategy::Map2 => "map2",
            MappedStrategy::Map3Flat => "map3-flat",
            MappedStrategy::Map3Rec => "map3-rec",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MappedStrategy::Map2 => 2,
            MappedStrategy::Map3Flat | MappedStrategy::Map3Rec => 3,
        }
    }

    fn op_count(&self) -> u32 {
        match self {
            MappedStrategy::Map2 => ops::MAP2,
            MappedStrategy::Map3Flat => ops::MAP3_FLAT,
            MappedStrategy::Map3Rec => ops::MAP3_REC,
        }
    }

    /// Cover of the side-`side` block simplex, padded when `side + 1` is
    /// not a power of two.
    fn build(&self, side: u64) -> Result<Box<dyn CoverStrategy>> {
        let exact = is_power_of_two(side + 1);
        Ok(match self {
            MappedStrategy::Map2 if exact => Box::new(cover_simplex2(side)?),
            MappedStrategy::Map2 => Box::new(pad_above(side)?),
            MappedStrategy::Map3Flat if exact => Box::new(cover_simplex3(side)?),
            MappedStrategy::Map3Flat => Box::new(pad_simplex3(side)?),
            MappedStrategy::Map3Rec => Box::new(RecursiveCover::new(side)?),
        })
    }
}

impl fmt::Display for MappedStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MappedStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "map2" => Ok(MappedStrategy::Map2),
            "map3-flat" | "map3_flat" => Ok(MappedStrategy::Map3Flat),
            "map3-rec" | "map3_rec" => Ok(MappedStrategy::Map3Rec),
            _ => Err(Error::InvalidParams(format!("unknown mapped strategy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchStats {
    pub strategy: String,
    pub m: usize,
    pub n: u64,
    pub rho: u64,
    pub launched: u64,
    pub useful: u64,
    pub wasted: u64,
    pub efficiency: f64,
    pub map_op_count: u32,
    /// Threads of useful blocks that land on no simplex cell.
    pub idle_threads: u128,
    pub improvement_vs_bb: f64,
}

fn block_side(n: u64, shape: BlockShape) -> Result<u64> {
    if n == 0 {
        return Err(Error::TooSmall { what: "n", min: 1, got: 0 });
    }
    Ok(n.div_ceil(shape.rho))
}

fn checked_pow(base: u64, m: usize) -> Result<u64> {
    let cells = (base as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if cells > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { cells, budget: ENUMERATION_BUDGET });
    }
    Ok(cells as u64)
}

fn idle(useful: u64, shape: BlockShape, m: usize, n: u64) -> Result<u128> {
    let cells: u128 = simplex_volume(m, n)?.try_into().expect("budget-bounded volume");
    Ok(useful as u128 * shape.threads(m) - cells)
}

#[allow(clippy::too_many_arguments)]
fn stats(
    strategy: &str,
    m: usize,
    n: u64,
    shape: BlockShape,
    launched: u64,
    useful: u64,
    map_op_count: u32,
    bb_launched: u64,
) -> Result<DispatchStats> {
    Ok(DispatchStats {
        strategy: strategy.to_string(),
        m,
        n,
        rho: shape.rho,
        launched,
        useful,
        wasted: launched - useful,
        efficiency: useful as f64 / launched as f64,
        map_op_count,
        idle_threads: idle(useful, shape, m, n)?,
        improvement_vs_bb: bb_launched as f64 / launched as f64,
    })
}

/// Bounding-box launch of `⌈n/ρ⌉^m` blocks; a block is useful when its
/// first thread `ρ·i` lies in the side-`n` simplex.
pub fn simulate_bb(m: usize, n: u64, shape: BlockShape, shards: usize) -> Result<DispatchStats> {
    check_dim(m)?;
    if m < 2 {
        return Err(Error::BadDimension { got: m, max: crate::simplex::MAX_DIM });
    }
    let side = block_side(n, shape)?;
    let launched = checked_pow(side, m)?;
    let bb = BoundingBox::new(m, side)?;
    let shards = shards.max(1) as u64;
    let chunk = launched.div_ceil(shards);
    let useful: u64 = (0..shards)
        .into_par_iter()
        .map(|s| {
            let lo = (s * chunk).min(launched);
            let hi = (lo + chunk).min(launched);
            (lo..hi).filter(|&i| shape.rho as u128 * bb.block_at(i).l1() < n as u128).count() as u64
        })
        .sum();
    stats("bb", m, n, shape, launched, useful, ops::bb(m), launched)
}

/// Launch of a mapped strategy over the side-`⌈n/ρ⌉` block simplex. Useful
/// blocks are those the oracle confirms as distinct simplex cells.
pub fn simulate_mapped(strategy: MappedStrategy, n: u64, shape: BlockShape, shards: usize) -> Result<DispatchStats> {
    let m = strategy.dim();
    let side = block_side(n, shape)?;
    let cover = strategy.build(side)?;
    let report = check_cover(cover.as_ref(), CheckOptions::with_shards(shards.max(1)))?;
    let bb_launched = checked_pow(side, m)?;
    stats(strategy.name(), m, n, shape, report.launched, report.useful(), strategy.op_count(), bb_launched)
}
