//! Block-space maps onto 3-simplices.
//!
//! Two strategies live here:
//!
//! * the arity-3 recursion: a cube of side `N/2` at the corner plus three
//!   recursive copies translated by `N/2` along each axis. It is materialized
//!   as a list of cube placements. The cubes cover the side-`(N-1)`
//!   tetrahedron but overshoot it by a Sierpinski-like residue that tends to
//!   1/5 of its volume.
//! * the two-branch map: one half-size cube plus two recursive copies, whose
//!   volume `(N^3 - N)/6` matches the side-`(N-1)` tetrahedron exactly. The
//!   cubes are packed into a single `(N/2, N/2, 3N/4)` grid and mapped in
//!   constant time.
//!
//! # Two-branch layout
//!
//! Raw images live in `T_N = {(x, y, z) : x < y <= N-1, z < y - x}`, whose
//! `xy` shadow is the strict triangle of the 2D map. Every level-`b` square
//! of that triangle carries a fiber of exactly `b^3` cells, so one cube of
//! side `b` fills it: the part of the cube under the sloped facet
//! `z = y - x` is translated ("inside"), and the part above it is point
//! reflected into the gap over the other half of the square
//! ("diagonal or outside").
//!
//! The grid holds the main cube in `z < N/2` and all smaller levels in the
//! slab `N/2 <= z < 3N/4`, where row `y` selects level `b = 2^floor(log2 y)`
//! exactly as in the 2D map. Slab blocks with `y = 0` or `z - N/2 >= b` are
//! unused. Raw images are read as simplex cells via `(x, N-1-y, z)`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow};

use crate::error::{Error, Result};
use crate::map2::pow2_floor_nonzero;
use crate::oracle::CoverStrategy;
use crate::simplex::Coord;

/// Largest extent whose cell counts fit in `u64`.
pub const MAX_EXTENT3: u64 = 1 << 21;

/// Largest extent listed cube by cube; the list grows as `3^log2 N`.
pub const MAX_PLACEMENT_EXTENT: u64 = 1 << 12;

fn check_pow2(n: u64, min: u64) -> Result<u32> {
    if n < min {
        return Err(Error::TooSmall { what: "grid extent", min, got: n });
    }
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros())
}

/// One cube of the arity-3 recursion. Its blocks map by `ω + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub offset: Coord,
    pub extent: u64,
    pub level: u32,
}

impl Placement {
    pub fn volume(&self) -> u64 {
        self.extent.pow(3)
    }

    #[inline]
    pub fn block_image(&self, local: u64) -> Coord {
        let e = self.extent;
        let (x, y, z) = (local % e, (local / e) % e, local / (e * e));
        Coord::xyz(x, y, z).translate(&self.offset)
    }
}

/// All cube placements of the arity-3 recursion for extent `N`.
pub fn recursive_placements(n: u64) -> Result<Vec<Placement>> {
    check_pow2(n, 2)?;
    if n > MAX_PLACEMENT_EXTENT {
        return Err(Error::TooLarge { what: "placement extent", max: MAX_PLACEMENT_EXTENT, got: n });
    }
    let mut out = Vec::new();
    let mut stack = vec![(Coord::xyz(0, 0, 0), n, 0u32)];
    while let Some((origin, size, level)) = stack.pop() {
        if size < 2 {
            continue;
        }
        let h = size / 2;
        out.push(Placement { offset: origin, extent: h, level });
        // reversed so the x branch is expanded first
        for shift in [Coord::xyz(0, 0, h), Coord::xyz(0, h, 0), Coord::xyz(h, 0, 0)] {
            stack.push((origin.translate(&shift), h, level + 1));
        }
    }
    Ok(out)
}

/// `V = (N/2)^3 + 3 V(N/2)`, `V(1) = 0`. Checked against
/// `(N^3 - 3^log2 N) / 5`.
pub fn volume_s3_arity3(n: u64) -> Result<BigUint> {
    let k = check_pow2(n, 1)?;
    let mut v = BigUint::from(0u32);
    for i in 1..=k {
        let side = BigUint::from(1u64 << (i - 1));
        v = side.pow(3u32) + v * 3u32;
    }
    let closed = (BigUint::from(n).pow(3u32) - BigUint::from(3u32).pow(k)) / 5u32;
    assert_eq!(v, closed, "arity-3 recurrence and closed form disagree at N={n}");
    Ok(v)
}

/// The closed form with the power term left outside the division:
/// `N^3/5 - 3^log2 N`. Kept to show it disagrees with the recurrence.
pub fn arity3_uncorrected_form(n: u64) -> Result<BigRational> {
    let k = check_pow2(n, 1)?;
    let cube = BigRational::from_integer(BigUint::from(n).pow(3u32).into());
    Ok(cube / BigRational::from_integer(5.into()) - BigRational::from_integer(BigUint::from(3u32).pow(k).into()))
}

/// Map calls of the arity-3 recursion: `sum_{i=1..log2 N} 3^i`.
pub fn call_count_arity3(n: u64) -> Result<BigUint> {
    let k = check_pow2(n, 1)?;
    Ok((BigUint::from(3u32).pow(k + 1) - 3u32) / 2u32)
}

/// `V = (N/2)^3 + 2 V(N/2)`, `V(1) = 0`; equals `(N^3 - N) / 6`.
pub fn volume_s3_arity2(n: u64) -> Result<BigUint> {
    let k = check_pow2(n, 1)?;
    let mut v = BigUint::from(0u32);
    for i in 1..=k {
        let side = BigUint::from(1u64 << (i - 1));
        v = side.pow(3u32) + v * 2u32;
    }
    Ok(v)
}

/// A block of the 3D grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Block3 {
    pub x: u64,
    pub y: u64,
    pub z: u64,
}

impl Block3 {
    pub const fn new(x: u64, y: u64, z: u64) -> Self {
        Self { x, y, z }
    }
}

/// The packed grid of the two-branch map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid3 {
    n: u64,
}

impl Grid3 {
    pub fn extent(&self) -> u64 {
        self.n
    }

    /// `(N/2, N/2, Z)` with `Z = 3N/4` for `N >= 4` and `Z(2) = 1`.
    pub fn extents(&self) -> (u64, u64, u64) {
        let h = self.n / 2;
        (h, h, h + self.n / 4)
    }

    pub fn block_count(&self) -> u64 {
        let (a, b, c) = self.extents();
        a * b * c
    }

    pub fn contains(&self, w: Block3) -> bool {
        let (a, b, c) = self.extents();
        w.x < a && w.y < b && w.z < c
    }

    #[inline]
    pub fn block_at(&self, index: u64) -> Block3 {
        let (a, b, _) = self.extents();
        Block3 { x: index % a, y: (index / a) % b, z: index / (a * b) }
    }

    /// Cells the grid maps: `(N^3 - N) / 6`.
    pub fn mapped_count(&self) -> u64 {
        (self.n.pow(3) - self.n) / 6
    }

    pub fn unused_count(&self) -> u64 {
        self.block_count() - self.mapped_count()
    }
}

pub fn grid3_for(n: u64) -> Result<Grid3> {
    check_pow2(n, 2)?;
    if n > MAX_EXTENT3 {
        return Err(Error::TooLarge { what: "grid extent", max: MAX_EXTENT3, got: n });
    }
    Ok(Grid3 { n })
}

/// Which branch of the two-branch map handles a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region3 {
    /// Main cube, translated by `h`.
    MainCube,
    /// Smaller-level cube, translated part.
    Inside,
    /// Reflected part of any cube, main one included.
    DiagonalOrOutside,
    /// Filler of the integral z-extent.
    Unused,
}

impl Region3 {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region3::MainCube => "main_cube",
            Region3::Inside => "inside",
            Region3::DiagonalOrOutside => "diagonal_or_outside",
            Region3::Unused => "unused",
        }
    }
}

/// Cube side `b`, copy `q` and cube-local coordinates of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Local {
    b: u64,
    q: u64,
    u: u64,
    v: u64,
    w: u64,
}

impl Local {
    #[inline(always)]
    fn of(w: Block3, n: u64) -> Option<Local> {
        let h = n / 2;
        if w.z < h {
            return Some(Local { b: h, q: 0, u: w.x, v: w.y, w: w.z });
        }
        let dz = w.z - h;
        if w.y == 0 {
            return None;
        }
        let b = pow2_floor_nonzero(w.y);
        if dz >= b {
            return None;
        }
        let q = w.x >> b.trailing_zeros();
        Some(Local { b, q, u: w.x - q * b, v: w.y - b, w: dz })
    }

    /// Under the sloped facet of the level square.
    #[inline(always)]
    fn is_inside(&self) -> bool {
        self.w + self.u < self.b + self.v
    }
}

fn check_block(w: Block3, n: u64) -> Result<Grid3> {
    let g = grid3_for(n)?;
    if !g.contains(w) {
        let (a, b, c) = g.extents();
        return Err(Error::OutsideGrid {
            block: format!("({}, {}, {})", w.x, w.y, w.z),
            extents: format!("{a} x {b} x {c}"),
        });
    }
    Ok(g)
}

#[inline(always)]
fn classify_unchecked(w: Block3, n: u64) -> Region3 {
    match Local::of(w, n) {
        None => Region3::Unused,
        Some(l) if !l.is_inside() => Region3::DiagonalOrOutside,
        Some(_) if w.z < n / 2 => Region3::MainCube,
        Some(_) => Region3::Inside,
    }
}

pub fn classify3(w: Block3, n: u64) -> Result<Region3> {
    check_block(w, n)?;
    Ok(classify_unchecked(w, n))
}

/// `h(ω) = ω + (0, N/2, 0)` for main-cube blocks.
pub fn h_map(w: Block3, n: u64) -> Result<Coord> {
    check_block(w, n)?;
    match classify_unchecked(w, n) {
        Region3::MainCube => Ok(Coord::xyz(w.x, w.y + n / 2, w.z)),
        other => Err(Error::WrongRegion { expected: "main_cube", actual: other.as_str() }),
    }
}

/// Point reflection of a cube-local coordinate; an involution.
#[inline(always)]
pub fn reflect_local(b: u64, (u, v, w): (u64, u64, u64)) -> (u64, u64, u64) {
    (b - 1 - u, b - 1 - v, 2 * b - 1 - w)
}

/// Result of [`lambda3`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mapped {
    Cell(Coord),
    Discard,
}

#[inline(always)]
fn lambda_unchecked(w: Block3, n: u64) -> Option<Coord> {
    let l = Local::of(w, n)?;
    let (b, q) = (l.b, l.q);
    Some(if l.is_inside() {
        // (w_x + qb, w_y + 2qb, w_z - N/2) in the slab; h(ω) for the main cube
        let o = 2 * q * b;
        Coord::xyz(o + l.u, o + b + l.v, l.w)
    } else {
        let (u, v, z) = reflect_local(b, (l.u, l.v, l.w));
        let o = 2 * q * b;
        Coord::xyz(o + u, o + b + v, z)
    })
}

/// Constant-time map for non-main-cube blocks.
pub fn lambda3(w: Block3, n: u64) -> Result<Mapped> {
    check_block(w, n)?;
    match classify_unchecked(w, n) {
        Region3::MainCube => Err(Error::WrongRegion { expected: "inside, diagonal_or_outside or unused", actual: "main_cube" }),
        Region3::Unused => Ok(Mapped::Discard),
        _ => Ok(Mapped::Cell(lambda_unchecked(w, n).expect("mapped region"))),
    }
}

/// Full two-branch map: `h` or `λ` as the region requires.
pub fn map3_flat(w: Block3, n: u64) -> Result<Mapped> {
    check_block(w, n)?;
    Ok(lambda_unchecked(w, n).map_or(Mapped::Discard, Mapped::Cell))
}

/// Raw image to a cell of the side-`(N-1)` simplex.
#[inline(always)]
pub fn raw_to_cell(p: &Coord, n: u64) -> Coord {
    Coord::xyz(p.get(0), n - 1 - p.get(1), p.get(2))
}

/// Two-branch cover of the side-`n` tetrahedron. When `n + 1` is not a
/// power of two the next power is used and the surplus filtered.
#[derive(Debug, Clone, Copy)]
pub struct Cover3 {
    grid: Grid3,
    side: u64,
}

/// Exact cover, `n + 1 = 2^k`.
pub fn cover_simplex3(n: u64) -> Result<Cover3> {
    let points = n.checked_add(1).ok_or(Error::NotPowerOfTwo(u64::MAX))?;
    Ok(Cover3 { grid: grid3_for(points)?, side: n })
}

/// Padded cover for any side `n >= 1`.
pub fn pad_simplex3(n: u64) -> Result<Cover3> {
    if n == 0 {
        return Err(Error::TooSmall { what: "side", min: 1, got: 0 });
    }
    Ok(Cover3 { grid: grid3_for((n + 1).next_power_of_two())?, side: n })
}

impl Cover3 {
    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn classify(&self, w: Block3) -> Region3 {
        classify_unchecked(w, self.grid.n)
    }

    #[inline]
    pub fn simplex_cell(&self, w: Block3) -> Option<Coord> {
        let cell = raw_to_cell(&lambda_unchecked(w, self.grid.n)?, self.grid.n);
        (cell.l1() < self.side as u128).then_some(cell)
    }
}

impl CoverStrategy for Cover3 {
    fn name(&self) -> &str {
        "map3-flat"
    }
    fn dim(&self) -> usize {
        3
    }
    fn side(&self) -> u64 {
        self.side
    }
    fn launched(&self) -> u64 {
        self.grid.block_count()
    }
    fn image(&self, index: u64) -> Option<Coord> {
        self.simplex_cell(self.grid.block_at(index))
    }
}

/// The arity-3 placements launched as one block range, cells outside the
/// side-`n` tetrahedron filtered.
#[derive(Debug, Clone)]
pub struct RecursiveCover {
    extent: u64,
    side: u64,
    placements: Vec<Placement>,
    starts: Vec<u64>,
}

impl RecursiveCover {
    /// Covers side `N - 1` with `N = 2^ceil(log2(n + 1))`.
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::TooSmall { what: "side", min: 1, got: 0 });
        }
        let extent = (n + 1).next_power_of_two();
        let placements = recursive_placements(extent)?;
        let mut starts = Vec::with_capacity(placements.len());
        let mut acc = 0;
        for p in &placements {
            starts.push(acc);
            acc += p.volume();
        }
        Ok(Self { extent, side: n, placements, starts })
    }

    pub fn extent(&self) -> u64 {
        self.extent
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    /// Map calls needed to visit every placement.
    pub fn call_count(&self) -> BigUint {
        call_count_arity3(self.extent).expect("power of two")
    }
}

impl CoverStrategy for RecursiveCover {
    fn name(&self) -> &str {
        "map3-rec"
    }
    fn dim(&self) -> usize {
        3
    }
    fn side(&self) -> u64 {
        self.side
    }
    fn launched(&self) -> u64 {
        self.placements.iter().map(Placement::volume).sum()
    }
    fn image(&self, index: u64) -> Option<Coord> {
        let k = self.starts.partition_point(|&s| s <= index) - 1;
        let c = self.placements[k].block_image(index - self.starts[k]);
        (c.l1() < self.side as u128).then_some(c)
    }
}

/// `V(Π) / V(S) - 1` for the packed grid, exact.
pub fn flat_surplus(n: u64) -> Result<BigRational> {
    let g = grid3_for(n)?;
    Ok(BigRational::new(g.block_count().into(), g.mapped_count().into()) - BigRational::one())
}
