//! Constant-time block-space map onto 2-simplices.
//!
//! A grid of `(N/2) x (N-1)` blocks (rows start at 1) is mapped onto the
//! strict lower triangle `{(x, y) : 0 <= x < y <= N-1}`. Row `y` belongs to
//! recursion level `floor(log2 y)`, whose squares have side `b = 2^level`;
//! the copy index `q = x / b` selects the square along the diagonal.
//!
//! Strict-triangle images are read as simplex cells through
//! `(x, y) -> (x, N-1-y)`, which turns `x < y` into `x + y' <= N-2`, the
//! side-`(N-1)` simplex. Equivalently, `(x, y - 1)` is a cell of the
//! diagonal-inclusive triangle of side `N-1`.

use crate::error::{Error, Result};
use crate::oracle::CoverStrategy;
use crate::simplex::Coord;

/// `floor(log2 y)` from the leading-zero count.
#[inline]
pub fn floor_log2(y: u64) -> Result<u32> {
    if y == 0 {
        return Err(Error::TooSmall { what: "log2 argument", min: 1, got: 0 });
    }
    Ok(floor_log2_nonzero(y))
}

#[inline(always)]
pub(crate) fn floor_log2_nonzero(y: u64) -> u32 {
    (u64::BITS - 1) - y.leading_zeros()
}

/// Largest power of two not above `y`.
#[inline]
pub fn pow2_floor(y: u64) -> Result<u64> {
    floor_log2(y).map(|l| 1u64 << l)
}

#[inline(always)]
pub(crate) fn pow2_floor_nonzero(y: u64) -> u64 {
    1u64 << floor_log2_nonzero(y)
}

/// Smallest power of two not below `n` (`n >= 1`).
pub fn pow2_ceil(n: u64) -> u64 {
    n.max(1).next_power_of_two()
}

pub fn is_power_of_two(n: u64) -> bool {
    n.is_power_of_two()
}

/// A block of the 2D grid. Row 0 does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Block2 {
    pub x: u64,
    pub y: u64,
}

impl Block2 {
    pub const fn new(x: u64, y: u64) -> Self {
        Self { x, y }
    }
}

/// The power-of-two grid for the 2-simplex map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid2 {
    n: u64,
}

impl Grid2 {
    /// Extent `N` of the strict triangle this grid maps onto.
    pub fn extent(&self) -> u64 {
        self.n
    }

    pub fn width(&self) -> u64 {
        self.n / 2
    }

    /// Rows span `1..=height`.
    pub fn height(&self) -> u64 {
        self.n - 1
    }

    pub fn block_count(&self) -> u64 {
        self.width() * self.height()
    }

    pub fn contains(&self, w: Block2) -> bool {
        w.x < self.width() && (1..=self.height()).contains(&w.y)
    }

    /// Row-major block order, row 1 first.
    #[inline]
    pub fn block_at(&self, index: u64) -> Block2 {
        let w = self.width();
        Block2 { x: index % w, y: 1 + index / w }
    }

    pub fn blocks(&self) -> impl Iterator<Item = Block2> + '_ {
        (0..self.block_count()).map(move |i| self.block_at(i))
    }
}

/// Largest extent whose block count fits in `u64`.
pub const MAX_EXTENT2: u64 = 1 << 32;

/// The grid whose image under [`lambda2`] is the strict lower triangle of
/// an `N x N` matrix.
pub fn grid2_for(n: u64) -> Result<Grid2> {
    if n < 2 {
        return Err(Error::TooSmall { what: "grid extent", min: 2, got: n });
    }
    if n > MAX_EXTENT2 {
        return Err(Error::TooLarge { what: "grid extent", max: MAX_EXTENT2, got: n });
    }
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(Grid2 { n })
}

/// Level/copy decomposition of a block: `(b, q)`.
#[inline(always)]
pub(crate) fn level_and_copy(w: Block2) -> (u64, u64) {
    let b = pow2_floor_nonzero(w.y);
    (b, w.x >> b.trailing_zeros())
}

/// `λ(ω) = (w_x + q·b, w_y + 2q·b)`. Fixed operation count; requires `w.y >= 1`.
#[inline(always)]
pub fn lambda2(w: Block2) -> Coord {
    debug_assert!(w.y >= 1, "row 0 is not part of the grid");
    let (b, q) = level_and_copy(w);
    let qb = q * b;
    Coord::xy(w.x + qb, w.y + 2 * qb)
}

/// Strict-triangle point on `points` lattice points to a simplex cell of
/// side `points - 1`.
#[inline(always)]
pub fn strict_to_cell(x: u64, y: u64, points: u64) -> Coord {
    Coord::xy(x, points - 1 - y)
}

/// Map onto the diagonal-inclusive triangle of side `n`, `n + 1 = 2^k`.
#[derive(Debug, Clone, Copy)]
pub struct Cover2 {
    grid: Grid2,
}

/// Cover of the side-`n` 2-simplex by a single power-of-two grid.
pub fn cover_simplex2(n: u64) -> Result<Cover2> {
    let points = n.checked_add(1).ok_or(Error::NotPowerOfTwo(u64::MAX))?;
    Ok(Cover2 { grid: grid2_for(points)? })
}

impl Cover2 {
    pub fn grid(&self) -> Grid2 {
        self.grid
    }

    pub fn side(&self) -> u64 {
        self.grid.n - 1
    }

    /// Image `(x, y)` as the diagonal-inclusive cell `(x, y - 1)`.
    pub fn diagonal_cell(&self, w: Block2) -> Coord {
        let p = lambda2(w);
        Coord::xy(p.get(0), p.get(1) - 1)
    }

    /// Image as a cell of the side-`n` simplex.
    #[inline]
    pub fn simplex_cell(&self, w: Block2) -> Coord {
        let p = lambda2(w);
        strict_to_cell(p.get(0), p.get(1), self.grid.n)
    }
}

impl CoverStrategy for Cover2 {
    fn name(&self) -> &str {
        "map2"
    }
    fn dim(&self) -> usize {
        2
    }
    fn side(&self) -> u64 {
        self.side()
    }
    fn launched(&self) -> u64 {
        self.grid.block_count()
    }
    fn image(&self, index: u64) -> Option<Coord> {
        Some(self.simplex_cell(self.grid.block_at(index)))
    }
}

/// "From above": one grid of extent `2^ceil(log2(n + 1))` plus a filter.
#[derive(Debug, Clone, Copy)]
pub struct PadAbove {
    n: u64,
    grid: Grid2,
}

pub fn pad_above(n: u64) -> Result<PadAbove> {
    if n == 0 {
        return Err(Error::TooSmall { what: "side", min: 1, got: 0 });
    }
    Ok(PadAbove { n, grid: grid2_for(pow2_ceil(n + 1))? })
}

impl PadAbove {
    pub fn grid(&self) -> Grid2 {
        self.grid
    }

    /// Padded extent `N'`.
    pub fn padded_extent(&self) -> u64 {
        self.grid.n
    }

    /// The filter: keeps cells of the side-`n` simplex.
    #[inline]
    pub fn keep(&self, cell: &Coord) -> bool {
        cell.l1() < self.n as u128
    }

    pub fn map(&self, w: Block2) -> Option<Coord> {
        let p = lambda2(w);
        let cell = strict_to_cell(p.get(0), p.get(1), self.grid.n);
        self.keep(&cell).then_some(cell)
    }

    /// Upper bound on filtered-out blocks: `V(S_N') - V(Δ_n)`.
    pub fn extra_blocks(&self) -> u64 {
        self.grid.block_count() - self.n * (self.n + 1) / 2
    }
}

impl CoverStrategy for PadAbove {
    fn name(&self) -> &str {
        "map2-pad"
    }
    fn dim(&self) -> usize {
        2
    }
    fn side(&self) -> u64 {
        self.n
    }
    fn launched(&self) -> u64 {
        self.grid.block_count()
    }
    fn image(&self, index: u64) -> Option<Coord> {
        self.map(self.grid.block_at(index))
    }
}

/// One piece of a "from below" decomposition. Offsets are in strict-triangle
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece2 {
    /// Power-of-two triangle mapped by [`lambda2`], shifted along the diagonal.
    Triangle { grid: Grid2, offset: Coord },
    /// Rectangle mapped by identity.
    Rect { width: u64, height: u64, offset: Coord },
}

impl Piece2 {
    pub fn block_count(&self) -> u64 {
        match *self {
            Piece2::Triangle { grid, .. } => grid.block_count(),
            Piece2::Rect { width, height, .. } => width * height,
        }
    }

    pub fn offset(&self) -> Coord {
        match *self {
            Piece2::Triangle { offset, .. } | Piece2::Rect { offset, .. } => offset,
        }
    }

    /// Strict-triangle image of the `index`-th block of this piece.
    #[inline]
    pub fn image(&self, index: u64) -> Coord {
        match *self {
            Piece2::Triangle { grid, offset } => lambda2(grid.block_at(index)).translate(&offset),
            Piece2::Rect { width, offset, .. } => Coord::xy(index % width, index / width).translate(&offset),
        }
    }
}

/// "From below": greedy decomposition of the side-`n` triangle into
/// power-of-two triangles and identity-mapped rectangles, no surplus.
#[derive(Debug, Clone)]
pub struct BelowDecomposition {
    n: u64,
    pieces: Vec<Piece2>,
    starts: Vec<u64>,
}

pub fn decompose_below(n: u64) -> Result<BelowDecomposition> {
    if n == 0 {
        return Err(Error::TooSmall { what: "side", min: 1, got: 0 });
    }
    // strict triangle on the points [0, n]
    let points = n + 1;
    let mut pieces = Vec::new();
    let mut start = 0;
    while points - start >= 2 {
        let rest = points - start;
        let p = pow2_floor_nonzero(rest);
        pieces.push(Piece2::Triangle { grid: Grid2 { n: p }, offset: Coord::xy(start, start) });
        if rest > p {
            pieces.push(Piece2::Rect { width: p, height: rest - p, offset: Coord::xy(start, start + p) });
        }
        start += p;
    }
    let mut starts = Vec::with_capacity(pieces.len());
    let mut acc = 0;
    for piece in &pieces {
        starts.push(acc);
        acc += piece.block_count();
    }
    Ok(BelowDecomposition { n, pieces, starts })
}

impl BelowDecomposition {
    pub fn pieces(&self) -> &[Piece2] {
        &self.pieces
    }

    pub fn block_count(&self) -> u64 {
        self.pieces.iter().map(Piece2::block_count).sum()
    }

    pub fn simplex_cell(&self, index: u64) -> Coord {
        let k = self.starts.partition_point(|&s| s <= index) - 1;
        let p = self.pieces[k].image(index - self.starts[k]);
        strict_to_cell(p.get(0), p.get(1), self.n + 1)
    }
}

impl CoverStrategy for BelowDecomposition {
    fn name(&self) -> &str {
        "map2-below"
    }
    fn dim(&self) -> usize {
        2
    }
    fn side(&self) -> u64 {
        self.n
    }
    fn launched(&self) -> u64 {
        self.block_count()
    }
    fn image(&self, index: u64) -> Option<Coord> {
        Some(self.simplex_cell(index))
    }
}
