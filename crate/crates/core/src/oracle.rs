//! Ground truth for the maps: exhaustive enumeration of simplex cells and a
//! coverage checker that bins every block image against it.
//!
//! Cells are identified by their lexicographic rank, so hit bins are dense
//! bitmaps of exactly `V(Δ)` bits. Sharded sweeps produce partial bins that
//! merge associatively, which makes the report independent of shard count.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::simplex::{binomial_u128, check_dim, simplex_volume, Coord, MAX_DIM};

/// Largest `n^m` box the oracle will enumerate.
pub const ENUMERATION_BUDGET: u128 = 1 << 32;

/// Samples kept per defect class.
pub const MAX_SAMPLES: usize = 32;

/// Dense bins are used up to this many target cells.
const DENSE_LIMIT: u64 = 1 << 27;

/// Anything that launches a linear range of blocks and maps each one to a
/// simplex cell (or discards it).
pub trait CoverStrategy: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// Side of the target simplex.
    fn side(&self) -> u64;
    fn launched(&self) -> u64;
    /// `None` means the block is filtered out or unused.
    fn image(&self, index: u64) -> Option<Coord>;
}

fn check_budget(m: usize, n: u64) -> Result<()> {
    check_dim(m)?;
    let cells = (n as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if cells > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { cells, budget: ENUMERATION_BUDGET });
    }
    Ok(())
}

/// Cells of the side-`n` simplex in lexicographic order (first axis slowest).
pub fn enumerate_simplex(m: usize, n: u64) -> Result<SimplexCells> {
    check_budget(m, n)?;
    Ok(SimplexCells { m, bound: n, next: (n > 0).then_some([0; MAX_DIM]) })
}

pub struct SimplexCells {
    m: usize,
    bound: u64,
    next: Option<[u64; MAX_DIM]>,
}

impl Iterator for SimplexCells {
    type Item = Coord;

    fn next(&mut self) -> Option<Coord> {
        let cur = self.next?;
        let out = Coord::new(&cur[..self.m]).expect("dimension checked");
        let mut prefix = [0u64; MAX_DIM];
        let mut acc = 0;
        for i in 0..self.m {
            acc += cur[i];
            prefix[i] = acc;
        }
        self.next = (0..self.m).rev().find(|&i| prefix[i] + 1 < self.bound).map(|i| {
            let mut succ = cur;
            succ[i] += 1;
            succ[i + 1..self.m].iter_mut().for_each(|c| *c = 0);
            succ
        });
        Some(out)
    }
}

/// Position of `cell` in [`enumerate_simplex`] order. `cell` must lie in
/// the side-`n` simplex.
pub fn rank(cell: &Coord, n: u64) -> u64 {
    let m = cell.dim();
    let mut budget = n - 1;
    let mut r: u128 = 0;
    for (i, &x) in cell.components().iter().enumerate() {
        let k = (m - i) as u64;
        // cells with this prefix and a smaller i-th coordinate
        r += binomial_u128(budget + k, k).unwrap() - binomial_u128(budget - x + k, k).unwrap();
        budget -= x;
    }
    r as u64
}

/// Inverse of [`rank`].
pub fn unrank(mut r: u64, m: usize, n: u64) -> Coord {
    let mut comps = [0u64; MAX_DIM];
    let mut budget = n - 1;
    for (i, slot) in comps.iter_mut().enumerate().take(m) {
        let k = (m - i - 1) as u64;
        let mut x = 0;
        loop {
            let block = binomial_u128(budget - x + k, k).unwrap() as u64;
            if r < block {
                break;
            }
            r -= block;
            x += 1;
        }
        *slot = x;
        budget -= x;
    }
    Coord::new(&comps[..m]).expect("dimension checked")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BinMode {
    #[default]
    Auto,
    Dense,
    Sorted,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub shards: usize,
    pub mode: BinMode,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { shards: rayon::current_num_threads(), mode: BinMode::Auto }
    }
}

impl CheckOptions {
    pub fn with_shards(shards: usize) -> Self {
        Self { shards, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Defects {
    pub count: u64,
    pub samples: Vec<Coord>,
}

impl Serialize for Coord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.components())
    }
}

impl Serialize for Defects {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Defects", 2)?;
        st.serialize_field("count", &self.count)?;
        st.serialize_field("samples", &self.samples)?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub strategy: String,
    pub m: usize,
    pub n: u64,
    pub launched: u64,
    pub target_count: u64,
    pub mapped_count: u64,
    pub missing: Defects,
    pub duplicates: Defects,
    pub outside: Defects,
    pub pass: bool,
}

impl CoverageReport {
    /// Distinct target cells reached.
    pub fn useful(&self) -> u64 {
        self.target_count - self.missing.count
    }
}

enum Hits {
    Dense { hit: Vec<u64>, multi: Vec<u64> },
    Sorted(Vec<u64>),
}

struct Bins {
    hits: Hits,
    in_range: u64,
    mapped: u64,
    outside: u64,
    outside_samples: BTreeSet<Coord>,
}

impl Bins {
    fn new(dense: bool, target: u64) -> Self {
        let words = target.div_ceil(64) as usize;
        let hits = if dense {
            Hits::Dense { hit: vec![0; words], multi: vec![0; words] }
        } else {
            Hits::Sorted(Vec::new())
        };
        Self { hits, in_range: 0, mapped: 0, outside: 0, outside_samples: BTreeSet::new() }
    }

    fn note_outside(&mut self, c: Coord) {
        self.outside += 1;
        if self.outside_samples.len() < MAX_SAMPLES {
            self.outside_samples.insert(c);
        } else if c < *self.outside_samples.last().unwrap() && self.outside_samples.insert(c) {
            self.outside_samples.pop_last();
        }
    }

    fn record(&mut self, r: u64) {
        self.in_range += 1;
        match &mut self.hits {
            Hits::Dense { hit, multi } => {
                let (w, bit) = ((r >> 6) as usize, 1u64 << (r & 63));
                if hit[w] & bit != 0 {
                    multi[w] |= bit;
                } else {
                    hit[w] |= bit;
                }
            }
            Hits::Sorted(v) => v.push(r),
        }
    }

    fn merge(mut self, other: Bins) -> Bins {
        match (&mut self.hits, other.hits) {
            (Hits::Dense { hit, multi }, Hits::Dense { hit: h2, multi: m2 }) => {
                for i in 0..hit.len() {
                    multi[i] |= m2[i] | (hit[i] & h2[i]);
                    hit[i] |= h2[i];
                }
            }
            (Hits::Sorted(a), Hits::Sorted(b)) => {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    if a[i] <= b[j] {
                        out.push(a[i]);
                        i += 1;
                    } else {
                        out.push(b[j]);
                        j += 1;
                    }
                }
                out.extend_from_slice(&a[i..]);
                out.extend_from_slice(&b[j..]);
                *a = out;
            }
            _ => unreachable!("shards share one bin mode"),
        }
        self.in_range += other.in_range;
        self.mapped += other.mapped;
        self.outside += other.outside;
        for c in other.outside_samples {
            self.outside_samples.insert(c);
        }
        while self.outside_samples.len() > MAX_SAMPLES {
            self.outside_samples.pop_last();
        }
        self
    }
}

fn sweep(strategy: &dyn CoverStrategy, range: std::ops::Range<u64>, dense: bool, target: u64) -> Bins {
    let (m, n) = (strategy.dim(), strategy.side());
    let mut bins = Bins::new(dense, target);
    for idx in range {
        let Some(c) = strategy.image(idx) else { continue };
        bins.mapped += 1;
        if c.dim() == m && c.l1() < n as u128 {
            bins.record(rank(&c, n));
        } else {
            bins.note_outside(c);
        }
    }
    if let Hits::Sorted(v) = &mut bins.hits {
        v.sort_unstable();
    }
    bins
}

/// Apply `strategy` to every launched block and compare the images with
/// the cell set of its target simplex.
pub fn check_cover(strategy: &dyn CoverStrategy, opts: CheckOptions) -> Result<CoverageReport> {
    let (m, n) = (strategy.dim(), strategy.side());
    check_budget(m, n)?;
    let target = simplex_volume(m, n)?.to_u64().expect("within budget");
    let dense = match opts.mode {
        BinMode::Dense => true,
        BinMode::Sorted => false,
        BinMode::Auto => target <= DENSE_LIMIT,
    };
    let launched = strategy.launched();
    let shards = opts.shards.max(1) as u64;
    let chunk = launched.div_ceil(shards).max(1);
    let parts: Vec<Bins> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let lo = (s * chunk).min(launched);
            let hi = ((s + 1) * chunk).min(launched);
            sweep(strategy, lo..hi, dense, target)
        })
        .collect();
    let bins = parts.into_iter().reduce(Bins::merge).expect("at least one shard");

    let mut missing = Defects::default();
    let mut duplicates = Defects::default();
    let distinct = match &bins.hits {
        Hits::Dense { hit, multi } => {
            let distinct: u64 = hit.iter().map(|w| w.count_ones() as u64).sum();
            for r in 0..target {
                let (w, bit) = ((r >> 6) as usize, 1u64 << (r & 63));
                if hit[w] & bit == 0 && missing.samples.len() < MAX_SAMPLES {
                    missing.samples.push(unrank(r, m, n));
                }
                if multi[w] & bit != 0 && duplicates.samples.len() < MAX_SAMPLES {
                    duplicates.samples.push(unrank(r, m, n));
                }
                if missing.samples.len() == MAX_SAMPLES && duplicates.samples.len() == MAX_SAMPLES {
                    break;
                }
            }
            distinct
        }
        Hits::Sorted(ranks) => {
            let mut distinct = 0;
            let mut expect = 0;
            let mut i = 0;
            while i < ranks.len() {
                let r = ranks[i];
                let mut j = i + 1;
                while j < ranks.len() && ranks[j] == r {
                    j += 1;
                }
                while expect < r {
                    if missing.samples.len() < MAX_SAMPLES {
                        missing.samples.push(unrank(expect, m, n));
                    }
                    expect += 1;
                }
                if j - i > 1 && duplicates.samples.len() < MAX_SAMPLES {
                    duplicates.samples.push(unrank(r, m, n));
                }
                distinct += 1;
                expect = r + 1;
                i = j;
            }
            while expect < target && missing.samples.len() < MAX_SAMPLES {
                missing.samples.push(unrank(expect, m, n));
                expect += 1;
            }
            distinct
        }
    };
    missing.count = target - distinct;
    duplicates.count = bins.in_range - distinct;
    let outside = Defects { count: bins.outside, samples: bins.outside_samples.into_iter().collect() };
    let pass = missing.count == 0 && duplicates.count == 0 && outside.count == 0 && bins.mapped == target;
    Ok(CoverageReport {
        strategy: strategy.name().to_string(),
        m,
        n,
        launched,
        target_count: target,
        mapped_count: bins.mapped,
        missing,
        duplicates,
        outside,
        pass,
    })
}

/// The baseline: an `n^m` box mapped by identity, with out-of-domain
/// blocks filtered.
#[derive(Debug, Clone, Copy)]
pub struct BoundingBox {
    m: usize,
    n: u64,
}

impl BoundingBox {
    pub fn new(m: usize, n: u64) -> Result<Self> {
        check_budget(m, n)?;
        if n == 0 {
            return Err(Error::TooSmall { what: "side", min: 1, got: 0 });
        }
        Ok(Self { m, n })
    }

    #[inline]
    pub fn block_at(&self, mut index: u64) -> Coord {
        let mut comps = [0u64; MAX_DIM];
        for c in comps[..self.m].iter_mut().rev() {
            *c = index % self.n;
            index /= self.n;
        }
        Coord::new(&comps[..self.m]).expect("dimension checked")
    }
}

impl CoverStrategy for BoundingBox {
    fn name(&self) -> &str {
        "bb"
    }
    fn dim(&self) -> usize {
        self.m
    }
    fn side(&self) -> u64 {
        self.n
    }
    fn launched(&self) -> u64 {
        self.n.pow(self.m as u32)
    }
    fn image(&self, index: u64) -> Option<Coord> {
        let c = self.block_at(index);
        (c.l1() < self.n as u128).then_some(c)
    }
}
