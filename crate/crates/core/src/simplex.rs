//! Discrete orthogonal simplices: lattice coordinates, exact volumes and the
//! bounding-box baseline.
//!
//! A side-`n` simplex in `m` dimensions is the set of cells of the `n^m`
//! lattice box whose coordinates sum to at most `n - 1`. Its cell count is
//! the simplicial polytopic number `C(n + m - 1, m)`.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest dimension handled by the analysis code.
pub const MAX_DIM: usize = 8;

/// A point of the `m`-dimensional nonnegative integer lattice.
///
/// Stored inline so that coverage sweeps never allocate per block.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    dim: u8,
    comps: [u64; MAX_DIM],
}

impl Coord {
    pub fn new(components: &[u64]) -> Result<Self> {
        let m = components.len();
        if m == 0 || m > MAX_DIM {
            return Err(Error::BadDimension { got: m, max: MAX_DIM });
        }
        let mut comps = [0; MAX_DIM];
        comps[..m].copy_from_slice(components);
        Ok(Self { dim: m as u8, comps })
    }

    pub fn origin(m: usize) -> Result<Self> {
        check_dim(m)?;
        Ok(Self { dim: m as u8, comps: [0; MAX_DIM] })
    }

    #[inline]
    pub const fn xy(x: u64, y: u64) -> Self {
        let mut comps = [0; MAX_DIM];
        comps[0] = x;
        comps[1] = y;
        Self { dim: 2, comps }
    }

    #[inline]
    pub const fn xyz(x: u64, y: u64, z: u64) -> Self {
        let mut comps = [0; MAX_DIM];
        comps[0] = x;
        comps[1] = y;
        comps[2] = z;
        Self { dim: 3, comps }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn components(&self) -> &[u64] {
        &self.comps[..self.dim as usize]
    }

    #[inline]
    pub fn get(&self, axis: usize) -> u64 {
        self.components()[axis]
    }

    /// Manhattan norm, i.e. the distance to the orthogonal corner.
    #[inline]
    pub fn l1(&self) -> u128 {
        self.components().iter().map(|&c| c as u128).sum()
    }

    /// Componentwise translation. Panics on dimension mismatch.
    pub fn translate(&self, by: &Coord) -> Coord {
        assert_eq!(self.dim, by.dim, "translate: dimension mismatch");
        let mut out = *self;
        for (a, b) in out.comps.iter_mut().zip(by.comps.iter()) {
            *a += b;
        }
        out
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Target simplex: dimension and side length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimplexSpec {
    pub m: usize,
    pub n: u64,
}

impl SimplexSpec {
    pub fn new(m: usize, n: u64) -> Result<Self> {
        check_dim(m)?;
        Ok(Self { m, n })
    }

    pub fn volume(&self) -> BigUint {
        binomial(self.n + self.m as u64 - 1, self.m as u64)
    }

    pub fn contains(&self, x: &Coord) -> Result<bool> {
        simplex_contains(self, x)
    }
}

/// A parallel grid: positive block counts per axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthotopeSpec {
    extents: Vec<u64>,
}

impl OrthotopeSpec {
    pub fn new(extents: Vec<u64>) -> Result<Self> {
        check_dim(extents.len())?;
        if let Some(&e) = extents.iter().find(|&&e| e == 0) {
            return Err(Error::TooSmall { what: "orthotope extent", min: 1, got: e });
        }
        Ok(Self { extents })
    }

    pub fn extents(&self) -> &[u64] {
        &self.extents
    }

    pub fn volume(&self) -> BigUint {
        self.extents.iter().fold(BigUint::one(), |acc, &e| acc * e)
    }
}

/// Threads per block along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockShape {
    pub rho: u64,
}

impl BlockShape {
    pub fn new(rho: u64) -> Result<Self> {
        if rho == 0 {
            return Err(Error::TooSmall { what: "rho", min: 1, got: 0 });
        }
        Ok(Self { rho })
    }

    pub fn threads(&self, m: usize) -> u128 {
        (self.rho as u128).pow(m as u32)
    }
}

impl Default for BlockShape {
    fn default() -> Self {
        Self { rho: 1 }
    }
}

pub(crate) fn check_dim(m: usize) -> Result<()> {
    if m == 0 || m > MAX_DIM {
        Err(Error::BadDimension { got: m, max: MAX_DIM })
    } else {
        Ok(())
    }
}

/// `C(n, k)` as an arbitrary-precision integer.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, k)` in 128 bits, `None` on overflow.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(n as u128 - i)? / (i + 1);
    }
    Some(acc)
}

pub fn factorial(m: u64) -> BigUint {
    (1..=m).fold(BigUint::one(), |acc, i| acc * i)
}

/// Number of cells of the side-`n` simplex in `m` dimensions.
pub fn simplex_volume(m: usize, n: u64) -> Result<BigUint> {
    check_dim(m)?;
    if n == 0 {
        return Ok(BigUint::zero());
    }
    Ok(binomial(n + m as u64 - 1, m as u64))
}

/// Membership test: every component nonnegative (by type) and the
/// component sum at most `n - 1`.
pub fn simplex_contains(spec: &SimplexSpec, x: &Coord) -> Result<bool> {
    if x.dim() != spec.m {
        return Err(Error::DimensionMismatch { expected: spec.m, got: x.dim() });
    }
    Ok(spec.n > 0 && x.l1() < spec.n as u128)
}

/// Volume of `n` stacked `(m-1)`-simplices of sides `1..=n`.
pub fn stacked_volume(m: usize, n: u64) -> Result<BigUint> {
    check_dim(m)?;
    if m < 2 {
        return Err(Error::TooSmall { what: "stacked dimension", min: 2, got: m as u64 });
    }
    let mut acc = BigUint::zero();
    for i in 1..=n {
        acc += simplex_volume(m - 1, i)?;
    }
    Ok(acc)
}

/// Extra volume of the `n^m` bounding box relative to the simplex.
pub fn bb_waste(m: usize, n: u64) -> Result<BigRational> {
    check_dim(m)?;
    if n == 0 {
        return Err(Error::TooSmall { what: "side", min: 1, got: 0 });
    }
    let boxed = BigUint::from(n).pow(m as u32);
    let vol = simplex_volume(m, n)?;
    Ok(BigRational::new(boxed.into(), vol.into()) - BigRational::one())
}

/// Limit of [`bb_waste`] as `n` grows: `m! - 1`.
pub fn bb_waste_limit(m: usize) -> Result<BigUint> {
    check_dim(m)?;
    Ok(factorial(m as u64) - 1u32)
}
