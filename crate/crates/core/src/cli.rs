//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage or
//! configuration errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::analysis::{
    alpha_limit, compatible_sizes, fmt_real, n0_nonincreasing_in_beta, search_params_with_limit, vs_general, AlphaLimit,
    RecursionParams, Reduction, N0_SCAN_LIMIT,
};
use crate::dispatch::{simulate_bb, simulate_mapped, DispatchStats, MappedStrategy};
use crate::error::{Error, Result};
use crate::map2::{cover_simplex2, decompose_below, grid2_for, lambda2, pad_above, Block2};
use crate::map3::{classify3, cover_simplex3, grid3_for, map3_flat, Block3, Mapped, RecursiveCover};
use crate::oracle::{check_cover, BoundingBox, CheckOptions, CoverStrategy, CoverageReport};
use crate::simplex::{simplex_volume, BlockShape};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Parser)]
#[command(name = "simplex-map", version, about = "Dense block maps onto discrete orthogonal simplices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a cover exhaustively against the simplex cell set.
    Verify(VerifyArgs),
    /// Map one block to its data-space coordinate.
    Map(MapArgs),
    /// Recursive orthotope volumes against the simplex.
    Analyze(AnalyzeArgs),
    /// Sweep the arity with r pinned to r*.
    Search(SearchArgs),
    /// Simulated block-grid launch statistics.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyStrategy {
    Map2,
    Map2Pad,
    Map2Below,
    Map3Flat,
    Map3Rec,
    Bb,
}

impl VerifyStrategy {
    /// Sizes are grid extents `N = 2^k` rather than simplex sides.
    fn power_sized(self) -> bool {
        matches!(self, VerifyStrategy::Map2 | VerifyStrategy::Map3Flat | VerifyStrategy::Map3Rec)
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub strategy: VerifyStrategy,
    /// Grid extent N (power of two) for map2, map3-flat and map3-rec;
    /// simplex side for map2-pad, map2-below and bb.
    #[arg(long, required_unless_present = "n_max", conflicts_with = "n_max")]
    pub n: Option<u64>,
    /// Check every size up to this bound: powers of two from 2 (4 for
    /// map3-flat), or every side from 1.
    #[arg(long)]
    pub n_max: Option<u64>,
    /// Dimension for bb.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long)]
    pub shards: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapStrategy {
    Map2,
    Map3Flat,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long, value_enum)]
    pub strategy: MapStrategy,
    /// Grid extent N, a power of two.
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub y: u64,
    #[arg(long)]
    pub z: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, required_unless_present = "n_max", conflicts_with = "n_max")]
    pub n: Option<u64>,
    /// Every recursion-compatible size up to this bound.
    #[arg(long)]
    pub n_max: Option<u64>,
    /// Reduction factor as `p/q` (exact) or a decimal (approximate).
    #[arg(long)]
    pub r: String,
    #[arg(long)]
    pub beta: u32,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub beta_min: u32,
    #[arg(long)]
    pub beta_max: u32,
    #[arg(long)]
    pub n_ref: u64,
    /// Upper bound of the n0 scan.
    #[arg(long, default_value_t = N0_SCAN_LIMIT)]
    pub n_max: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimulateStrategy {
    Bb,
    Map2,
    Map3Flat,
    Map3Rec,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub strategy: SimulateStrategy,
    /// Dimension; fixed by the strategy except for bb.
    #[arg(long)]
    pub m: Option<usize>,
    /// Simplex side in cells.
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub rho: u64,
    #[arg(long)]
    pub shards: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Failure of a command before any output.
#[derive(Debug)]
enum CmdError {
    Usage(String),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Usage(e.to_string())
    }
}

/// Output of a command in every format.
struct Rendered {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    json: Value,
    /// Extra table-only line.
    note: Option<String>,
    /// Bare text replacing the table.
    plain: Option<String>,
    status: u8,
}

impl Rendered {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = self.header.join(",");
                s.push('\n');
                for row in &self.rows {
                    s.push_str(&row.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Table => {
                if let Some(p) = &self.plain {
                    return format!("{p}\n");
                }
                let mut s = table(&self.header, &self.rows);
                if let Some(note) = &self.note {
                    s.push_str(note);
                    s.push('\n');
                }
                s
            }
        }
    }
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = line(header.to_vec());
    for row in rows {
        s.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    s
}

/// Floats in JSON carry the same 12 significant digits as the text forms.
fn json_real(x: f64) -> Value {
    match fmt_real(x).parse::<f64>() {
        Ok(v) if v.is_finite() => json!(v),
        _ => json!(fmt_real(x)),
    }
}

fn json_big(x: &BigUint) -> Value {
    match x.to_u64() {
        Some(v) => json!(v),
        None => json!(x.to_string()),
    }
}

fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    if b.is_zero() {
        return f64::INFINITY;
    }
    BigRational::new(BigInt::from(a.clone()), BigInt::from(b.clone())).to_f64().unwrap_or(f64::NAN)
}

fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn fmt_alpha_limit(a: &AlphaLimit) -> String {
    match a {
        AlphaLimit::Exact(q) => fmt_rational(q),
        AlphaLimit::Real(x) => fmt_real(*x),
        AlphaLimit::Divergent => "inf".into(),
    }
}

fn fmt_reduction(r: &Reduction) -> String {
    match r {
        Reduction::Exact(q) => fmt_rational(q),
        Reduction::Real(x) => fmt_real(*x),
    }
}

/// `p/q` is exact; a decimal becomes an approximate real.
pub fn parse_reduction(s: &str) -> Result<Reduction> {
    let bad = || Error::InvalidParams(format!("cannot parse r = '{s}'"));
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Reduction::Exact(BigRational::new(p, q)));
    }
    let x: f64 = s.parse().map_err(|_| bad())?;
    if !x.is_finite() {
        return Err(bad());
    }
    Ok(Reduction::Real(x))
}

fn shard_opts(shards: Option<usize>) -> Result<CheckOptions> {
    match shards {
        Some(0) => Err(Error::TooSmall { what: "shards", min: 1, got: 0 }),
        Some(s) => Ok(CheckOptions::with_shards(s)),
        None => Ok(CheckOptions::default()),
    }
}

fn verify_strategy(s: VerifyStrategy, n: u64, m: usize) -> Result<Box<dyn CoverStrategy>> {
    if s.power_sized() && (n < 2 || !n.is_power_of_two()) {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(match s {
        VerifyStrategy::Map2 => Box::new(cover_simplex2(n - 1)?),
        VerifyStrategy::Map3Flat => Box::new(cover_simplex3(n - 1)?),
        VerifyStrategy::Map3Rec => Box::new(RecursiveCover::new(n - 1)?),
        VerifyStrategy::Map2Pad => Box::new(pad_above(n)?),
        VerifyStrategy::Map2Below => Box::new(decompose_below(n)?),
        VerifyStrategy::Bb => Box::new(BoundingBox::new(m, n)?),
    })
}

fn verify_sizes(a: &VerifyArgs) -> std::result::Result<Vec<u64>, CmdError> {
    if let Some(n) = a.n {
        return Ok(vec![n]);
    }
    let n_max = a.n_max.expect("clap requires n or n-max");
    let sizes: Vec<u64> = if a.strategy.power_sized() {
        let start = if a.strategy == VerifyStrategy::Map3Flat { 4 } else { 2 };
        std::iter::successors(Some(start), |&v: &u64| v.checked_mul(2)).take_while(|&v| v <= n_max).collect()
    } else {
        (1..=n_max).collect()
    };
    if sizes.is_empty() {
        return Err(CmdError::Usage(format!("no sizes up to n-max = {n_max}")));
    }
    Ok(sizes)
}

fn verify_json(r: &CoverageReport, n: u64) -> Value {
    json!({
        "strategy": r.strategy,
        "n": n,
        "launched": r.launched,
        "mapped": r.mapped_count,
        "missing": r.missing.count,
        "duplicates": r.duplicates.count,
        "outside": r.outside.count,
        "pass": r.pass,
    })
}

fn cmd_verify(a: &VerifyArgs) -> std::result::Result<Rendered, CmdError> {
    let opts = shard_opts(a.shards)?;
    let mut reports = Vec::new();
    for n in verify_sizes(a)? {
        let strategy = verify_strategy(a.strategy, n, a.m)?;
        reports.push((n, check_cover(strategy.as_ref(), opts)?));
    }
    let all_pass = reports.iter().all(|(_, r)| r.pass);
    let rows = reports
        .iter()
        .map(|(n, r)| {
            vec![
                r.strategy.clone(),
                n.to_string(),
                r.launched.to_string(),
                r.mapped_count.to_string(),
                r.missing.count.to_string(),
                r.duplicates.count.to_string(),
                r.outside.count.to_string(),
                r.pass.to_string(),
            ]
        })
        .collect();
    let json = if let [(n, r)] = reports.as_slice() {
        let mut obj = verify_json(r, *n);
        obj.as_object_mut().expect("object").insert("schema_version".into(), json!(SCHEMA_VERSION));
        obj
    } else {
        json!({
            "schema_version": SCHEMA_VERSION,
            "reports": reports.iter().map(|(n, r)| verify_json(r, *n)).collect::<Vec<_>>(),
        })
    };
    let failures: Vec<String> = reports
        .iter()
        .filter(|(_, r)| !r.pass)
        .map(|(n, r)| {
            let first = |d: &crate::oracle::Defects| d.samples.first().map(|c| c.to_string()).unwrap_or_default();
            format!(
                "FAIL n={n}: first missing {} first duplicate {} first outside {}",
                first(&r.missing),
                first(&r.duplicates),
                first(&r.outside)
            )
        })
        .collect();
    Ok(Rendered {
        header: vec!["strategy", "n", "launched", "mapped", "missing", "duplicates", "outside", "pass"],
        rows,
        json,
        note: (!failures.is_empty()).then(|| failures.join("\n")),
        plain: None,
        status: if all_pass { EXIT_OK } else { EXIT_FAILURE },
    })
}

fn cmd_map(a: &MapArgs) -> std::result::Result<Rendered, CmdError> {
    let (block, image, region): (Vec<u64>, Option<Vec<u64>>, Option<&str>) = match a.strategy {
        MapStrategy::Map2 => {
            if a.z.is_some() {
                return Err(CmdError::Usage("map2 blocks have no z coordinate".into()));
            }
            let grid = grid2_for(a.n)?;
            let w = Block2::new(a.x, a.y);
            if !grid.contains(w) {
                return Err(CmdError::Usage(format!(
                    "block ({}, {}) lies outside the {}x{} grid with rows 1..={}",
                    a.x,
                    a.y,
                    grid.width(),
                    grid.height(),
                    grid.height()
                )));
            }
            (vec![a.x, a.y], Some(lambda2(w).components().to_vec()), None)
        }
        MapStrategy::Map3Flat => {
            let z = a.z.ok_or_else(|| CmdError::Usage("map3-flat needs --z".into()))?;
            grid3_for(a.n)?;
            let w = Block3::new(a.x, a.y, z);
            let image = match map3_flat(w, a.n)? {
                Mapped::Cell(c) => Some(c.components().to_vec()),
                Mapped::Discard => None,
            };
            (vec![a.x, a.y, z], image, Some(classify3(w, a.n)?.as_str()))
        }
    };
    let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    let text = image.as_deref().map_or_else(|| "discard".to_string(), join);
    let strategy = match a.strategy {
        MapStrategy::Map2 => "map2",
        MapStrategy::Map3Flat => "map3-flat",
    };
    let mut json = json!({
        "schema_version": SCHEMA_VERSION,
        "strategy": strategy,
        "n": a.n,
        "block": block,
        "image": image,
    });
    if let Some(region) = region {
        json.as_object_mut().expect("object").insert("region".into(), json!(region));
    }
    Ok(Rendered {
        header: vec!["strategy", "n", "block", "image"],
        rows: vec![vec![strategy.into(), a.n.to_string(), join(&block), text.clone()]],
        json,
        note: None,
        plain: Some(text),
        status: EXIT_OK,
    })
}

fn cmd_analyze(a: &AnalyzeArgs) -> std::result::Result<Rendered, CmdError> {
    let r = parse_reduction(&a.r)?;
    let params = RecursionParams::new(r, a.beta)?;
    let sizes = match (a.n, a.n_max) {
        (Some(n), _) => vec![n],
        (None, Some(n_max)) => compatible_sizes(&params, n_max),
        (None, None) => unreachable!("clap requires n or n-max"),
    };
    if sizes.is_empty() {
        return Err(CmdError::Usage("no recursion-compatible sizes in range".into()));
    }
    let limit = alpha_limit(a.m, &params)?;
    let r_text = fmt_reduction(&params.r);
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for n in sizes {
        if n < 2 {
            return Err(CmdError::Usage(format!("n must be at least 2, got {n}")));
        }
        let v = vs_general(a.m, n, &params)?;
        let simplex = simplex_volume(a.m, n - 1)?;
        let alpha = ratio(&v.discretized, &simplex) - 1.0;
        rows.push(vec![
            a.m.to_string(),
            n.to_string(),
            r_text.clone(),
            a.beta.to_string(),
            simplex.to_string(),
            v.discretized.to_string(),
            fmt_real(alpha),
            fmt_alpha_limit(&limit),
        ]);
        json_rows.push(json!({
            "m": a.m,
            "n": n,
            "v_simplex": json_big(&simplex),
            "v_recursive": json_big(&v.discretized),
            "v_recursive_exact": v.exact.is_some(),
            "v_continuous": json_real(v.continuous),
            "depth": v.depth,
            "alpha": json_real(alpha),
        }));
    }
    let json = json!({
        "schema_version": SCHEMA_VERSION,
        "r": r_text,
        "r_approximate": !params.r.is_exact(),
        "beta": a.beta,
        "alpha_limit": fmt_alpha_limit(&limit),
        "rows": json_rows,
    });
    Ok(Rendered {
        header: vec!["m", "n", "r", "beta", "v_simplex", "v_recursive", "alpha", "alpha_limit"],
        rows,
        json,
        note: None,
        plain: None,
        status: EXIT_OK,
    })
}

fn cmd_search(a: &SearchArgs) -> std::result::Result<Rendered, CmdError> {
    if a.beta_min > a.beta_max {
        return Err(CmdError::Usage(format!("beta-min {} exceeds beta-max {}", a.beta_min, a.beta_max)));
    }
    let rows = search_params_with_limit(a.m, a.beta_min..=a.beta_max, a.n_ref, a.n_max)?;
    let monotone = n0_nonincreasing_in_beta(&rows);
    let n0_text = |n0: Option<u64>| n0.map_or_else(|| "none".to_string(), |v| v.to_string());
    let text_rows = rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                r.beta.to_string(),
                fmt_reduction(&r.r_star),
                n0_text(r.n0),
                fmt_real(r.alpha_at_ref),
                fmt_real(r.alpha_limit),
                fmt_real(r.subtracted_term),
            ]
        })
        .collect();
    let json = json!({
        "schema_version": SCHEMA_VERSION,
        "n_ref": a.n_ref,
        "n_max": a.n_max,
        "n0_nonincreasing_in_beta": monotone,
        "rows": rows.iter().map(|r| json!({
            "m": r.m,
            "beta": r.beta,
            "r_star": fmt_reduction(&r.r_star),
            "r_star_exact": r.r_star.is_exact(),
            "n0": r.n0,
            "stable_n0": r.stable_n0,
            "alpha_at_ref": json_real(r.alpha_at_ref),
            "alpha_limit": json_real(r.alpha_limit),
            "subtracted_term": json_real(r.subtracted_term),
        })).collect::<Vec<_>>(),
    });
    Ok(Rendered {
        header: vec!["m", "beta", "r_star", "n0", "alpha_at_ref", "alpha_limit", "subtracted_term"],
        rows: text_rows,
        json,
        note: Some(format!("n0 non-increasing in beta: {}", if monotone { "yes" } else { "no" })),
        plain: None,
        status: EXIT_OK,
    })
}

fn cmd_simulate(a: &SimulateArgs) -> std::result::Result<Rendered, CmdError> {
    let shape = BlockShape::new(a.rho)?;
    let shards = shard_opts(a.shards)?.shards;
    let stats: DispatchStats = match a.strategy {
        SimulateStrategy::Bb => simulate_bb(a.m.unwrap_or(2), a.n, shape, shards)?,
        other => {
            let strategy = match other {
                SimulateStrategy::Map2 => MappedStrategy::Map2,
                SimulateStrategy::Map3Flat => MappedStrategy::Map3Flat,
                _ => MappedStrategy::Map3Rec,
            };
            if let Some(m) = a.m.filter(|&m| m != strategy.dim()) {
                return Err(CmdError::Usage(format!("{strategy} works in dimension {}, got m = {m}", strategy.dim())));
            }
            simulate_mapped(strategy, a.n, shape, shards)?
        }
    };
    let json = json!({
        "schema_version": SCHEMA_VERSION,
        "strategy": stats.strategy,
        "m": stats.m,
        "n": stats.n,
        "rho": stats.rho,
        "launched": stats.launched,
        "useful": stats.useful,
        "wasted": stats.wasted,
        "efficiency": json_real(stats.efficiency),
        "map_op_count": stats.map_op_count,
        "idle_threads": stats.idle_threads.to_string(),
        "improvement_vs_bb": json_real(stats.improvement_vs_bb),
    });
    let row = vec![
        stats.strategy.clone(),
        stats.m.to_string(),
        stats.n.to_string(),
        stats.rho.to_string(),
        stats.launched.to_string(),
        stats.useful.to_string(),
        stats.wasted.to_string(),
        fmt_real(stats.efficiency),
    ];
    Ok(Rendered {
        header: vec!["strategy", "m", "n", "rho", "launched", "useful", "wasted", "efficiency"],
        rows: vec![row],
        json,
        note: Some(format!(
            "map ops {}, idle threads {}, improvement over bb {}",
            stats.map_op_count,
            stats.idle_threads,
            fmt_real(stats.improvement_vs_bb)
        )),
        plain: None,
        status: EXIT_OK,
    })
}

fn output_args(c: &Command) -> &OutputArgs {
    match c {
        Command::Verify(a) => &a.out,
        Command::Map(a) => &a.out,
        Command::Analyze(a) => &a.out,
        Command::Search(a) => &a.out,
        Command::Simulate(a) => &a.out,
    }
}

/// Parse `args` (program name first) and run, writing to the given streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Map(a) => cmd_map(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Search(a) => cmd_search(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    let rendered = match result {
        Ok(r) => r,
        Err(CmdError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let opts = output_args(&cli.command);
    let text = rendered.render(opts.format);
    let written = match &opts.output {
        Some(path) => fs::write(path, text.as_bytes()).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| format!("cannot write output: {e}")),
    };
    if let Err(msg) = written {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_USAGE;
    }
    rendered.status
}

/// Run against the process arguments and standard streams.
pub fn run() -> u8 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
