//! Recursive orthotope sets for general `m`.
//!
//! A set `S_n^m` is one cube of side `r·n` plus `β` recursive copies scaled
//! by `r`, so `V(n) = (r n)^m + β V(r n)` with `V(1) = 0`. For `r = 1/p`
//! with integer `p` and `n = p^k` this is evaluated exactly and checked
//! against `(n^m - β^k) / (p^m - β)`. Other reductions (for instance the
//! irrational `r*` solving `1/r^m - β = m!`) get a continuous closed-form
//! value and a discretized lattice value with cube sides rounded to the
//! nearest integer at every level.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::simplex::{check_dim, factorial, simplex_volume};

/// Upper bound for the `n0` scan.
pub const N0_SCAN_LIMIT: u64 = 1 << 20;

/// Reduction factor `r`, exact when rational.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduction {
    Exact(BigRational),
    Real(f64),
}

impl Reduction {
    pub fn ratio(p: i64, q: i64) -> Self {
        Reduction::Exact(BigRational::new(p.into(), q.into()))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Reduction::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Reduction::Real(r) => *r,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Reduction::Exact(_))
    }

    /// `p` when `r = 1/p` exactly.
    pub fn inverse_integer(&self) -> Option<u64> {
        match self {
            Reduction::Exact(r) if r.numer().is_one() => r.denom().to_u64(),
            _ => None,
        }
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reduction::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Reduction::Real(r) => f.write_str(&fmt_real(*r)),
        }
    }
}

/// Reduction factor and arity of a recursive orthotope set.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionParams {
    pub r: Reduction,
    pub beta: u32,
}

impl RecursionParams {
    pub fn new(r: Reduction, beta: u32) -> Result<Self> {
        let ok = match &r {
            Reduction::Exact(q) => q.is_positive() && q < &BigRational::one(),
            Reduction::Real(x) => x.is_finite() && *x > 0.0 && *x < 1.0,
        };
        if !ok {
            return Err(Error::InvalidParams(format!("r = {r} must lie in (0, 1)")));
        }
        if beta < 2 {
            return Err(Error::InvalidParams(format!("beta = {beta} must be at least 2")));
        }
        Ok(Self { r, beta })
    }

    /// `r = 1/2`, `β = 2`: the 2- and 3-simplex constructions.
    pub fn halving() -> Self {
        Self { r: Reduction::ratio(1, 2), beta: 2 }
    }
}

/// `V(S_n^m)` in every form that applies.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveVolume {
    /// Set on the exact path only.
    pub exact: Option<BigUint>,
    /// Lattice volume with rounded cube sides; equals `exact` when present.
    pub discretized: BigUint,
    /// Closed form over the reals.
    pub continuous: f64,
    pub depth: u32,
}

/// `n = p^k`?
fn exact_depth(p: u64, n: u64) -> Option<u32> {
    let mut k = 0;
    let mut v = 1u64;
    while v < n {
        v = v.checked_mul(p)?;
        k += 1;
    }
    (v == n).then_some(k)
}

pub fn vs_general(m: usize, n: u64, params: &RecursionParams) -> Result<RecursiveVolume> {
    check_dim(m)?;
    if n == 0 {
        return Err(Error::TooSmall { what: "side", min: 1, got: 0 });
    }
    let beta = params.beta;
    if let Some((p, k)) = params.r.inverse_integer().and_then(|p| exact_depth(p, n).map(|k| (p, k))) {
        let mut v = BigUint::zero();
        for i in 0..k {
            let side = BigUint::from(p).pow(i);
            v = side.pow(m as u32) + v * beta;
        }
        let nm = BigInt::from(n).pow(m as u32);
        let denom = BigInt::from(p).pow(m as u32) - BigInt::from(beta);
        let closed = if denom.is_zero() {
            // β r^m = 1: every level contributes (r n)^m
            nm * BigInt::from(k) / BigInt::from(p).pow(m as u32)
        } else {
            let num = &nm - BigInt::from(beta).pow(k);
            assert!((&num % &denom).is_zero(), "closed form not integral");
            num / denom
        };
        assert_eq!(BigInt::from(v.clone()), closed, "recurrence and closed form disagree");
        let continuous = v.to_f64().unwrap_or(f64::INFINITY);
        return Ok(RecursiveVolume { exact: Some(v.clone()), discretized: v, continuous, depth: k });
    }

    let r = params.r.to_f64();
    let inv = 1.0 / r;
    let levels = (n as f64).ln() / inv.ln();
    let depth = (levels - 1e-9).ceil().max(0.0) as u32;
    let inv_rm = inv.powi(m as i32);
    let denom = inv_rm - beta as f64;
    let nm = (n as f64).powi(m as i32);
    let continuous = if denom.abs() <= 1e-12 * inv_rm {
        nm * r.powi(m as i32) * levels
    } else {
        (nm - (beta as f64).powf(levels)) / denom
    };
    let mut side = n as f64;
    let mut v = BigUint::zero();
    let mut weight = BigUint::one();
    for _ in 0..depth {
        side = (r * side).round().max(1.0);
        v += &weight * BigUint::from(side as u64).pow(m as u32);
        weight *= beta;
    }
    Ok(RecursiveVolume { exact: None, discretized: v, continuous, depth })
}

/// Asymptotic extra volume of `S_n^m` over the simplex.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaLimit {
    Exact(BigRational),
    Real(f64),
    /// `1/r^m <= β`: the set outgrows any polynomial multiple.
    Divergent,
}

impl AlphaLimit {
    pub fn to_f64(&self) -> f64 {
        match self {
            AlphaLimit::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            AlphaLimit::Real(x) => *x,
            AlphaLimit::Divergent => f64::INFINITY,
        }
    }
}

/// `m! / (1/r^m - β) - 1`.
pub fn alpha_limit(m: usize, params: &RecursionParams) -> Result<AlphaLimit> {
    check_dim(m)?;
    let fact = factorial(m as u64);
    Ok(match &params.r {
        Reduction::Exact(r) => {
            let inv_rm = r.recip().pow(m as i32);
            let denom = inv_rm - BigRational::from_integer(params.beta.into());
            if !denom.is_positive() {
                AlphaLimit::Divergent
            } else {
                AlphaLimit::Exact(BigRational::from_integer(fact.into()) / denom - BigRational::one())
            }
        }
        Reduction::Real(r) => {
            let denom = r.recip().powi(m as i32) - params.beta as f64;
            if denom <= 0.0 {
                AlphaLimit::Divergent
            } else {
                let ratio = fact.to_f64().unwrap() / denom;
                let alpha = ratio - 1.0;
                // cancellation noise when r solves the constraint
                AlphaLimit::Real(if alpha.abs() <= 1e-12 * ratio { 0.0 } else { alpha })
            }
        }
    })
}

/// Solution of `1/r^m - β = m!`: `r = (m! + β)^(-1/m)`, exact when
/// `m! + β` is a perfect `m`-th power.
pub fn r_star(m: usize, beta: u32) -> Result<Reduction> {
    check_dim(m)?;
    if m < 2 || beta < 2 {
        return Err(Error::InvalidParams(format!("r* needs m >= 2 and beta >= 2, got m = {m}, beta = {beta}")));
    }
    let target = factorial(m as u64) + beta;
    let root = target.nth_root(m as u32);
    if root.clone().pow(m as u32) == target {
        return Ok(Reduction::Exact(BigRational::new(BigInt::one(), root.into())));
    }
    Ok(Reduction::Real(target.to_f64().unwrap().powf(-1.0 / m as f64)))
}

/// Relative residual of `1/r^m - β = m!`.
pub fn constraint_residual(m: usize, beta: u32, r: &Reduction) -> f64 {
    let fact = factorial(m as u64);
    match r {
        Reduction::Exact(q) => {
            let lhs = q.recip().pow(m as i32) - BigRational::from_integer(beta.into());
            let diff = lhs - BigRational::from_integer(fact.clone().into());
            (diff / BigRational::from_integer(fact.into())).abs().to_f64().unwrap()
        }
        Reduction::Real(x) => {
            let f = fact.to_f64().unwrap();
            ((x.recip().powi(m as i32) - beta as f64 - f) / f).abs()
        }
    }
}

/// Problem sizes the recursion divides cleanly: powers of `1/r` (rounded
/// when `1/r` is not an integer), from the first one above 1 up to `n_max`.
pub fn compatible_sizes(params: &RecursionParams, n_max: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    if let Some(p) = params.r.inverse_integer() {
        let mut v = p;
        while v <= n_max {
            out.push(v);
            match v.checked_mul(p) {
                Some(next) => v = next,
                None => break,
            }
        }
        return out;
    }
    let inv = 1.0 / params.r.to_f64();
    let mut k = 1;
    loop {
        let v = inv.powi(k).round();
        if v > n_max as f64 {
            break;
        }
        let v = v as u64;
        if v >= 2 && out.last() != Some(&v) {
            out.push(v);
        }
        k += 1;
    }
    out
}

/// One point of a coverage scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSample {
    pub n: u64,
    pub v_recursive: BigUint,
    /// `V(Δ_{n-1})`.
    pub v_simplex: BigUint,
}

impl CoverageSample {
    pub fn covered(&self) -> bool {
        self.v_recursive >= self.v_simplex
    }

    pub fn ratio(&self) -> f64 {
        ratio_f64(&self.v_recursive, &self.v_simplex)
    }
}

fn ratio_f64(a: &BigUint, b: &BigUint) -> f64 {
    if b.is_zero() {
        return f64::INFINITY;
    }
    BigRational::new(a.clone().into(), b.clone().into()).to_f64().unwrap_or(f64::NAN)
}

pub fn coverage_scan(m: usize, params: &RecursionParams, n_max: u64) -> Result<Vec<CoverageSample>> {
    if n_max > N0_SCAN_LIMIT {
        return Err(Error::InvalidParams(format!("n_max = {n_max} exceeds {N0_SCAN_LIMIT}")));
    }
    compatible_sizes(params, n_max)
        .into_iter()
        .map(|n| {
            Ok(CoverageSample { n, v_recursive: vs_general(m, n, params)?.discretized, v_simplex: simplex_volume(m, n - 1)? })
        })
        .collect()
}

/// Smallest scanned size with `V(S_n) >= V(Δ_{n-1})`.
pub fn find_n0(m: usize, params: &RecursionParams, n_max: u64) -> Result<Option<u64>> {
    Ok(coverage_scan(m, params, n_max)?.iter().find(|s| s.covered()).map(|s| s.n))
}

/// Smallest scanned size from which every larger scanned size is covered.
/// Differs from [`find_n0`] when rounded cube sides make the ratio
/// oscillate around 1.
pub fn find_stable_n0(m: usize, params: &RecursionParams, n_max: u64) -> Result<Option<u64>> {
    let scan = coverage_scan(m, params, n_max)?;
    let mut n0 = None;
    for s in scan.iter().rev() {
        if !s.covered() {
            break;
        }
        n0 = Some(s.n);
    }
    Ok(n0)
}

/// One β of a parameter search, `r` pinned to `r*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamRow {
    pub m: usize,
    pub beta: u32,
    pub r_star: Reduction,
    pub n0: Option<u64>,
    pub stable_n0: Option<u64>,
    pub alpha_at_ref: f64,
    pub alpha_limit: f64,
    /// `β^(log_{1/r} n_ref)`.
    pub subtracted_term: f64,
}

pub fn search_params(m: usize, betas: std::ops::RangeInclusive<u32>, n_ref: u64) -> Result<Vec<ParamRow>> {
    search_params_with_limit(m, betas, n_ref, N0_SCAN_LIMIT)
}

pub fn search_params_with_limit(
    m: usize,
    betas: std::ops::RangeInclusive<u32>,
    n_ref: u64,
    n_max: u64,
) -> Result<Vec<ParamRow>> {
    check_dim(m)?;
    if *betas.start() < 2 || *betas.end() > 64 || betas.is_empty() {
        return Err(Error::InvalidParams(format!("beta range {betas:?} must lie within [2, 64]")));
    }
    if n_ref < 2 {
        return Err(Error::TooSmall { what: "n_ref", min: 2, got: n_ref });
    }
    let mut rows = Vec::new();
    for beta in betas {
        let r = r_star(m, beta)?;
        let params = RecursionParams::new(r.clone(), beta)?;
        let v = vs_general(m, n_ref, &params)?;
        let alpha_at_ref = ratio_f64(&v.discretized, &simplex_volume(m, n_ref - 1)?) - 1.0;
        let levels = (n_ref as f64).ln() / (1.0 / r.to_f64()).ln();
        let subtracted_term = match v.exact {
            Some(_) => (beta as f64).powi(v.depth as i32),
            None => (beta as f64).powf(levels),
        };
        rows.push(ParamRow {
            m,
            beta,
            r_star: r,
            n0: find_n0(m, &params, n_max)?,
            stable_n0: find_stable_n0(m, &params, n_max)?,
            alpha_at_ref,
            alpha_limit: alpha_limit(m, &params)?.to_f64(),
            subtracted_term,
        });
    }
    rows.sort_by(|a, b| {
        a.alpha_at_ref
            .total_cmp(&b.alpha_at_ref)
            .then_with(|| match (a.n0, b.n0) {
                (Some(x), Some(y)) => x.cmp(&y),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            })
            .then(a.beta.cmp(&b.beta))
    });
    Ok(rows)
}

/// Does `n0` never grow as `β` grows? Rows without `n0` count as larger
/// than any finite value.
pub fn n0_nonincreasing_in_beta(rows: &[ParamRow]) -> bool {
    let mut by_beta: Vec<_> = rows.iter().map(|r| (r.beta, r.n0.unwrap_or(u64::MAX))).collect();
    by_beta.sort_unstable();
    by_beta.windows(2).all(|w| w[1].1 <= w[0].1)
}

/// Real number with 12 significant digits, stable across runs.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mant, exp) = s.split_once('e').expect("scientific");
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{exp}")
    }
}
