//! Command-line front end: `solve`, `sample` and `verify`.
//!
//! Every command writes into an output directory that ends up holding its
//! artifacts plus exactly one `manifest.json`. All randomness is assigned to
//! per-replica streams before work is spread over the thread pool, so the
//! artifacts do not depend on `--threads`.

use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{run_suite, Suite, SuiteConfig, SuiteReport};
use crate::error::Error;
use crate::sampling::{
    lattice_side, mesh_time, read_boundary_csv, sample_brownian_boundary, write_boundary_csv,
    HeatChainParams, Purpose, RngStream,
};
use crate::solver::{
    conservation_report, read_forcing_csv, solve_with, write_field_binary, write_field_csv,
    BoundaryFunctions, CellRule, DiscreteField, ForcingGrid, Preset, SolveOptions,
};
use crate::BoundaryPair;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Seed used when neither `--seed` nor `CONEWAVE_SEED` is given.
pub const DEFAULT_SEED: u64 = 11;

/// Fields with `N + L` at least this large default to the binary format.
const BINARY_THRESHOLD: u32 = 9;

pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const INVALID_ARGS: i32 = 2;
    pub const IO: i32 = 3;
    pub const VALIDATION: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "conewave", version, about = "Discrete wave maps into spheres")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the lattice recursion for a preset or a boundary file.
    Solve(SolveArgs),
    /// Sample Brownian boundaries and solve them.
    Sample(SampleArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Auto,
    Csv,
    Binary,
}

impl FieldFormat {
    fn resolve(self, exponent: u32) -> FieldFormat {
        match self {
            FieldFormat::Auto if exponent >= BINARY_THRESHOLD => FieldFormat::Binary,
            FieldFormat::Auto => FieldFormat::Csv,
            f => f,
        }
    }

    fn extension(self) -> &'static str {
        match self {
            FieldFormat::Binary => "bin",
            _ => "csv",
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Named boundary data: constant, circle-sin, great-circle-precession.
    #[arg(long, conflicts_with = "boundary", required_unless_present = "boundary")]
    pub preset: Option<String>,
    /// Boundary pair CSV (`side,index,x0,...`).
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    /// Forcing grid CSV (`m,n,f0,...`).
    #[arg(long)]
    pub forcing: Option<PathBuf>,
    /// Sphere dimension for presets.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 6)]
    pub mesh_exp: u32,
    #[arg(long, default_value_t = 0)]
    pub window_exp: u32,
    /// Project every cell back onto the sphere.
    #[arg(long)]
    pub renormalize: bool,
    #[arg(long, value_enum, default_value_t = FieldFormat::Auto)]
    pub format: FieldFormat,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 6)]
    pub mesh_exp: u32,
    #[arg(long, default_value_t = 0)]
    pub window_exp: u32,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    #[arg(long, env = "CONEWAVE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write boundary pairs only, without solving.
    #[arg(long)]
    pub boundaries_only: bool,
    #[arg(long, value_enum, default_value_t = FieldFormat::Auto)]
    pub format: FieldFormat,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Corruption {
    IdentityStep,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite name or `all`.
    pub suite: String,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub mesh_exp: Option<u32>,
    #[arg(long)]
    pub window_exp: Option<u32>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long, env = "CONEWAVE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Replace the reflection rule in the chain-invariance suite.
    #[arg(long, value_enum)]
    pub corrupt: Option<Corruption>,
    /// Start sampled boundaries at a fixed point in the translation suite.
    #[arg(long)]
    pub fixed_junction: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub command: String,
    pub params: Value,
    pub tool_version: String,
    pub duration_secs: f64,
    pub outputs: Vec<OutputEntry>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::INVALID_ARGS } else { exit::OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => exit::IO,
        Error::Validation(_) | Error::Format(_) => exit::VALIDATION,
        Error::InvalidArgument(_)
        | Error::DegenerateAxis(_)
        | Error::Domain(_)
        | Error::UnsupportedDimension(_)
        | Error::DimensionMismatch { .. } => exit::INVALID_ARGS,
    }
}

fn execute(cli: Cli) -> crate::Result<i32> {
    let common = match &cli.command {
        Command::Solve(a) => &a.common,
        Command::Sample(a) => &a.common,
        Command::Verify(a) => &a.common,
    };
    let threads = common.threads.unwrap_or(0);
    if common.threads == Some(0) {
        return Err(Error::invalid("--threads must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Verify(a) => cmd_verify(a),
    })
}

/// Collects artifacts and writes the manifest last.
struct OutputDir {
    root: PathBuf,
    entries: Vec<OutputEntry>,
    started: Instant,
}

impl OutputDir {
    fn create(root: &Path) -> crate::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
            started: Instant::now(),
        })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> crate::Result<()> {
        let mut f = BufWriter::new(fs::File::create(self.root.join(name))?);
        f.write_all(bytes)?;
        f.flush()?;
        self.entries.push(OutputEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    fn put_json(&mut self, name: &str, value: &impl Serialize) -> crate::Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        self.put(name, s.as_bytes())
    }

    fn finish(self, command: &str, params: Value) -> crate::Result<()> {
        let manifest = RunManifest {
            manifest_version: MANIFEST_VERSION,
            command: command.to_string(),
            params,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs: self.started.elapsed().as_secs_f64(),
            outputs: self.entries,
        };
        let s = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(self.root.join(MANIFEST_FILE), s + "\n")?;
        Ok(())
    }
}

fn field_bytes(field: &DiscreteField, format: FieldFormat) -> crate::Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        FieldFormat::Binary => write_field_binary(field, &mut buf)?,
        _ => write_field_csv(field, &mut buf)?,
    }
    Ok(buf)
}

fn open(path: &Path) -> crate::Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn cmd_solve(a: &SolveArgs) -> crate::Result<i32> {
    let (boundary, exponent, source) = match (&a.preset, &a.boundary) {
        (Some(name), None) => {
            let preset = Preset::from_name(name, a.d)?;
            let side = lattice_side(a.mesh_exp, a.window_exp)?;
            let h = mesh_time(a.mesh_exp);
            let pair = BoundaryPair::from_fns(
                side,
                side,
                |k| preset.plus(k as f64 * h),
                |k| preset.minus(k as f64 * h),
            )?;
            (pair, a.mesh_exp + a.window_exp, json!({ "preset": preset.name() }))
        }
        (None, Some(path)) => {
            let pair = read_boundary_csv(open(path)?)?;
            let side = pair.m().max(pair.n()).max(1);
            let exponent = usize::BITS - 1 - side.leading_zeros();
            (pair, exponent, json!({ "boundary_file": path.display().to_string() }))
        }
        _ => return Err(Error::invalid("give exactly one of --preset and --boundary")),
    };
    let forcing: Option<ForcingGrid> = a.forcing.as_deref().map(|p| read_forcing_csv(open(p)?)).transpose()?;
    let opts = SolveOptions {
        renormalize: a.renormalize,
        ..SolveOptions::default()
    };
    let field = solve_with(&boundary, forcing.as_ref(), &opts)?;
    let format = a.format.resolve(exponent);

    let mut out = OutputDir::create(&a.common.out)?;
    out.put(&format!("field.{}", format.extension()), &field_bytes(&field, format)?)?;
    let conservation = conservation_report(&field);
    let mut report = json!({
        "conservation": conservation,
        "max_deviation": conservation.max_deviation(),
        "max_norm_drift": field.max_norm_drift(),
    });
    if let Some(f) = &forcing {
        report["forcing_l1"] = json!(f.l1_norm());
        report["forcing_linf"] = json!(f.linf_norm());
    }
    out.put_json("conservation.json", &report)?;

    let mut params = json!({
        "d": boundary.dim(),
        "lattice_m": boundary.m(),
        "lattice_n": boundary.n(),
        "renormalize": a.renormalize,
        "forcing_file": a.forcing.as_ref().map(|p| p.display().to_string()),
        "format": format,
    });
    if a.preset.is_some() {
        params["mesh_exp"] = json!(a.mesh_exp);
        params["window_exp"] = json!(a.window_exp);
    }
    merge(&mut params, source);
    out.finish("solve", params)?;
    Ok(exit::OK)
}

fn cmd_sample(a: &SampleArgs) -> crate::Result<i32> {
    let side = lattice_side(a.mesh_exp, a.window_exp)?;
    let chain = HeatChainParams::for_dimension(mesh_time(a.mesh_exp), a.d)?;
    let format = a.format.resolve(a.mesh_exp + a.window_exp);
    let opts = SolveOptions::default();

    let artifacts: Vec<(Vec<u8>, Option<Vec<u8>>)> = (0..a.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::replica(a.seed, Purpose::Boundary, r as u64);
            let pair = sample_brownian_boundary(a.mesh_exp, a.window_exp, a.d, &mut rng)?;
            let mut b = Vec::new();
            write_boundary_csv(&pair, &mut b)?;
            let f = if a.boundaries_only {
                None
            } else {
                Some(field_bytes(&solve_with(&pair, None, &opts)?, format)?)
            };
            Ok((b, f))
        })
        .collect::<crate::Result<_>>()?;

    let mut out = OutputDir::create(&a.common.out)?;
    for (r, (b, f)) in artifacts.iter().enumerate() {
        out.put(&format!("boundary_{r:04}.csv"), b)?;
        if let Some(f) = f {
            out.put(&format!("field_{r:04}.{}", format.extension()), f)?;
        }
    }
    let stream_ids: Vec<u64> = (0..a.replicas as u64).map(|r| a.seed ^ r).collect();
    let params = json!({
        "d": a.d,
        "mesh_exp": a.mesh_exp,
        "window_exp": a.window_exp,
        "lattice_side": side,
        "t": chain.t,
        "replicas": a.replicas,
        "seed": a.seed,
        "stream_ids": stream_ids,
        "sampler": chain.method,
        "substeps": chain.substeps,
        "renormalize": false,
        "boundaries_only": a.boundaries_only,
        "format": format,
    });
    out.finish("sample", params)?;
    Ok(exit::OK)
}

fn cmd_verify(a: &VerifyArgs) -> crate::Result<i32> {
    let suites: Vec<Suite> = if a.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::from_name(&a.suite)?]
    };
    let cfg = SuiteConfig {
        seed: a.seed,
        d: a.d,
        mesh_exp: a.mesh_exp,
        window_exp: a.window_exp,
        replicas: a.replicas,
        corrupt: a.corrupt.map(|Corruption::IdentityStep| CellRule::IdentityStep),
        fixed_junction: a.fixed_junction,
    };
    let mut out = OutputDir::create(&a.common.out)?;
    let mut reports: Vec<SuiteReport> = Vec::new();
    for s in suites {
        let report = run_suite(s, &cfg)?;
        for (name, contents) in &report.tables {
            out.put(&format!("{}_{name}", s.name()), contents.as_bytes())?;
        }
        let status = if report.passed { "PASS" } else { "FAIL" };
        eprintln!("{status} {}", s.name());
        for c in report.failed_checks() {
            eprintln!("  failed {}: {:e} (threshold {:?})", c.name, c.value, c.threshold);
        }
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed);
    out.put_json(
        "report.json",
        &json!({ "passed": passed, "seed": a.seed, "reports": reports }),
    )?;
    let params = json!({
        "suite": a.suite,
        "seed": a.seed,
        "d": a.d,
        "mesh_exp": a.mesh_exp,
        "window_exp": a.window_exp,
        "replicas": a.replicas,
        "corrupt": cfg.corrupt,
        "fixed_junction": a.fixed_junction,
    });
    out.finish("verify", params)?;
    Ok(if passed { exit::OK } else { exit::CHECK_FAILED })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}
