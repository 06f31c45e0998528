//! Command-line front end.
//!
//! Exit codes: 0 success, 1 `compare` found a difference above tolerance,
//! 2 argument errors, 3 I/O or format errors, 4 computation errors
//! (including a benchmark agreement failure or a fixpoint run that did not
//! converge). Diagnostics go to the error stream as a single line; result
//! summaries go to the output stream.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GeodistError;
use crate::grid::{ScalarGrid, TransformParams, INF_SENTINEL};
use crate::io::{parse_fgd1, parse_pgm, slice_depth, write_grid_fgd1, write_pgm_preview, FGD1_MAGIC};
use crate::transforms::{
    self, Engine, Fixpoint, GsfParams, Solver,
};

pub const THREADS_ENV: &str = "GEODIST_THREADS";

/// Engines must agree this closely in the benchmark.
pub const BENCH_AGREEMENT_TOL: f32 = 1e-3;

pub const DEFAULT_BENCH_SEED: u64 = 0x5EED_6E0D;

#[derive(Debug, Parser)]
#[command(name = "geodist", version, about = "Geodesic and Euclidean distance transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a transform from an image and a seed/mask grid.
    Compute(ComputeArgs),
    /// Time the serial engine against the parallel engine.
    Benchmark(BenchArgs),
    /// Compare two FGD1 grids.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Geodesic,
    Euclidean,
    Generalized,
    Signed,
    Gsf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Serial,
    Parallel,
    Oracle,
}

#[derive(Debug, clap::Args)]
struct ComputeArgs {
    /// Intensity grid (FGD1 or binary PGM).
    #[arg(long)]
    input: PathBuf,
    /// Seed or mask grid with the same shape as the input.
    #[arg(long)]
    seeds: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Soft-mask scale for generalised distances and morphology.
    #[arg(long = "v", default_value_t = INF_SENTINEL as f64)]
    nu: f64,
    /// Morphology margin (gsf only).
    #[arg(long)]
    theta: Option<f32>,
    #[arg(long, default_value_t = TransformParams::DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long, value_enum, default_value_t = EngineArg::Parallel)]
    engine: EngineArg,
    #[arg(long)]
    threads: Option<usize>,
    /// Iterate to convergence (at most 100 rounds) instead of --iterations.
    #[arg(long)]
    fixpoint: bool,
    /// Output grid (FGD1).
    #[arg(long)]
    output: PathBuf,
    /// Optional 8-bit PGM preview.
    #[arg(long)]
    preview: Option<PathBuf>,
    /// Depth slice to preview for 3D results (default: middle slice).
    #[arg(long)]
    slice: Option<usize>,
}

#[derive(Debug, clap::Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256])]
    sizes: Vec<usize>,
    #[arg(long = "threads-list", value_delimiter = ',', default_values_t = [1usize, 2, 4])]
    threads_list: Vec<usize>,
    #[arg(long, default_value_t = TransformParams::DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = DEFAULT_BENCH_SEED)]
    seed: u64,
    /// Destination CSV; standard output when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    tol: f32,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Compute(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Compute(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Compute(m) => m,
        }
    }
}

impl From<GeodistError> for CliError {
    fn from(e: GeodistError) -> Self {
        match e {
            GeodistError::ShapeMismatch { .. } | GeodistError::SpacingMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Compute(e.to_string()),
        }
    }
}

/// Runs the CLI with the process environment.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let env = std::env::var(THREADS_ENV).ok();
    run_with_env(args, env.as_deref(), out, err)
}

/// Runs the CLI with an explicit `GEODIST_THREADS` value.
pub fn run_with_env<I, T>(
    args: I,
    threads_env: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "{line}");
            return 2;
        }
    };
    let result = match cli.command {
        Command::Compute(args) => cmd_compute(&args, threads_env, out),
        Command::Benchmark(args) => cmd_benchmark(&args, out),
        Command::Compare(args) => cmd_compare(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<usize, CliError> {
    let threads = match (flag, env) {
        (Some(t), _) => t,
        (None, Some(v)) => v.trim().parse().map_err(|_| {
            CliError::Usage(format!("{THREADS_ENV}={v:?} is not a positive integer"))
        })?,
        (None, None) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if threads == 0 {
        return Err(CliError::Usage("thread count must be at least 1".into()));
    }
    Ok(threads)
}

/// Loads an FGD1 or binary PGM file, chosen by its leading bytes.
pub fn load_grid(path: &Path) -> Result<ScalarGrid, String> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let parsed = if bytes.starts_with(&FGD1_MAGIC) {
        parse_fgd1(&bytes)
    } else {
        parse_pgm(&bytes)
    };
    parsed.map_err(|e| format!("{}: {e}", path.display()))
}

fn save(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<usize, crate::io::FormatError>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut sink = BufWriter::new(file);
    write(&mut sink).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    sink.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn shape_label(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

fn cmd_compute(args: &ComputeArgs, threads_env: Option<&str>, out: &mut dyn Write) -> Result<i32, CliError> {
    let threads = resolve_threads(args.threads, threads_env)?;
    let params = TransformParams::new(args.lambda, args.nu, args.iterations)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let theta = match (args.mode, args.theta) {
        (Mode::Gsf, None) => return Err(CliError::Usage("--theta is required for --mode gsf".into())),
        (_, Some(t)) if !(t >= 0.0) => {
            return Err(CliError::Usage(format!("--theta must be >= 0, got {t}")))
        }
        (_, t) => t.unwrap_or(0.0),
    };
    let image = load_grid(&args.input).map_err(CliError::Io)?;
    let seeds = load_grid(&args.seeds).map_err(CliError::Io)?;
    if image.dims() != seeds.dims() {
        return Err(CliError::Usage(format!(
            "shape mismatch: input {} vs seeds {}",
            shape_label(image.dims()),
            shape_label(seeds.dims())
        )));
    }
    if image.spacing() != seeds.spacing() {
        return Err(CliError::Usage(format!(
            "shape mismatch: input spacing {:?} vs seeds spacing {:?}",
            image.spacing(),
            seeds.spacing()
        )));
    }
    let engine = match args.engine {
        EngineArg::Serial => Engine::Serial,
        EngineArg::Parallel => Engine::Parallel,
        EngineArg::Oracle => Engine::Oracle,
    };
    let solver = Solver {
        engine,
        workers: if engine == Engine::Parallel { threads } else { 1 },
        fixpoint: args.fixpoint.then(Fixpoint::default),
    };

    let start = Instant::now();
    let (grid, rounds, converged) = match args.mode {
        Mode::Geodesic => {
            let r = transforms::geodesic_distance(&image, &seeds, &params, &solver)?;
            (r.grid, r.rounds, r.converged)
        }
        Mode::Euclidean => {
            let r = transforms::euclidean_distance(&seeds, params.iterations, &solver)?;
            (r.grid, r.rounds, r.converged)
        }
        Mode::Generalized => {
            let r = transforms::generalized_geodesic(&image, &seeds, &params, &solver)?;
            (r.grid, r.rounds, r.converged)
        }
        Mode::Signed => {
            let r = transforms::signed_geodesic(&image, &seeds, &params, &solver)?;
            (r.grid, r.rounds, r.converged)
        }
        Mode::Gsf => {
            let g = transforms::gsf(&image, &seeds, &GsfParams { transform: params, theta }, &solver)?;
            let rounds = g.dilation.rounds + g.erosion.rounds;
            let converged = g.dilation.converged && g.erosion.converged;
            (g.mask, rounds, converged)
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    save(&args.output, |w| write_grid_fgd1(&grid, w))?;
    if let Some(path) = &args.preview {
        let plane = if grid.ndim() == 3 {
            let z = args.slice.unwrap_or(grid.dims()[0] / 2);
            slice_depth(&grid, z).ok_or_else(|| {
                CliError::Usage(format!("--slice {z} is outside depth {}", grid.dims()[0]))
            })?
        } else {
            grid.clone()
        };
        save(path, |w| write_pgm_preview(&plane, w))?;
    }
    let mode = args.mode.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default();
    let engine_name = args.engine.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default();
    let _ = writeln!(
        out,
        "mode={mode} size={} engine={engine_name} threads={} wall_ms={wall_ms:.3} rounds={rounds}",
        shape_label(grid.dims()),
        solver.workers,
    );
    if !converged {
        return Err(CliError::Compute(format!(
            "no fixpoint within {} rounds; output written anyway",
            Fixpoint::default().max_rounds
        )));
    }
    Ok(0)
}

fn cell_diff(x: f32, y: f32) -> f32 {
    match (x >= INF_SENTINEL, y >= INF_SENTINEL) {
        (true, true) => 0.0,
        (false, false) => (x - y).abs(),
        _ => f32::INFINITY,
    }
}

/// Largest absolute difference between two grids of equal shape, with its
/// flat index and the count of differing cells. A sentinel against a finite
/// value counts as an infinite difference.
pub fn max_abs_diff(a: &ScalarGrid, b: &ScalarGrid) -> (f32, usize, usize) {
    let mut worst = (0.0f32, 0usize);
    let mut differing = 0;
    for (i, (&x, &y)) in a.data().iter().zip(b.data()).enumerate() {
        let d = cell_diff(x, y);
        if d > 0.0 {
            differing += 1;
        }
        if d > worst.0 {
            worst = (d, i);
        }
    }
    (worst.0, worst.1, differing)
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if !(args.tol >= 0.0) {
        return Err(CliError::Usage(format!("--tol must be >= 0, got {}", args.tol)));
    }
    let a = load_grid(&args.a).map_err(CliError::Io)?;
    let b = load_grid(&args.b).map_err(CliError::Io)?;
    if a.dims() != b.dims() {
        return Err(CliError::Usage(format!(
            "shape mismatch: {} vs {}",
            shape_label(a.dims()),
            shape_label(b.dims())
        )));
    }
    let (max_diff, at, differing) = max_abs_diff(&a, &b);
    let above = a
        .data()
        .iter()
        .zip(b.data())
        .filter(|(&x, &y)| cell_diff(x, y) > args.tol)
        .count();
    let _ = writeln!(
        out,
        "max_abs_diff={max_diff} at={:?} differing={differing} above_tol={above} tol={}",
        a.coord_of(at),
        args.tol
    );
    if a.spacing() != b.spacing() {
        let _ = writeln!(out, "note: spacing differs {:?} vs {:?}", a.spacing(), b.spacing());
    }
    Ok(if max_diff <= args.tol { 0 } else { 1 })
}

/// Benchmark settings, mirroring the `benchmark` subcommand flags.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub ndim: usize,
    pub sizes: Vec<usize>,
    pub threads: Vec<usize>,
    pub iterations: usize,
    pub lambda: f64,
    pub repeats: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub ndim: usize,
    pub size: usize,
    pub engine: &'static str,
    pub threads: usize,
    pub iterations: usize,
    pub wall_ms: f64,
    pub speedup_vs_serial: f64,
    pub max_dev_vs_serial: f32,
    pub rng_seed: u64,
}

pub const BENCH_CSV_HEADER: [&str; 9] = [
    "ndim",
    "size",
    "engine",
    "threads",
    "iterations",
    "wall_ms",
    "speedup_vs_serial",
    "max_dev_vs_serial",
    "rng_seed",
];

impl BenchRow {
    pub fn record(&self) -> [String; 9] {
        [
            self.ndim.to_string(),
            self.size.to_string(),
            self.engine.to_string(),
            self.threads.to_string(),
            self.iterations.to_string(),
            format!("{:.3}", self.wall_ms),
            format!("{:.3}", self.speedup_vs_serial),
            format!("{:e}", self.max_dev_vs_serial),
            self.rng_seed.to_string(),
        ]
    }
}

/// Deterministic benchmark intensity field in `[0, 1]`.
///
/// A seeded, strictly increasing piecewise-linear profile of a seeded
/// elliptical radius about the centre cell (where the benchmark places its
/// seed). Along any coordinate-monotone path leading away from the centre the
/// intensity never decreases, so both engines reach their common fixpoint
/// within two iterations; the serial/parallel agreement check then measures
/// engine correctness rather than convergence speed.
pub fn benchmark_image(ndim: usize, size: usize, seed: u64) -> Result<ScalarGrid, GeodistError> {
    const KNOTS: usize = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gains = [0, 1, 2].map(|_| rng.gen_range(0.5..1.5f64));
    let mut profile = [0.0f64; KNOTS + 1];
    for k in 1..=KNOTS {
        profile[k] = profile[k - 1] + rng.gen_range(0.1..1.0);
    }
    let top = profile[KNOTS];
    profile.iter_mut().for_each(|v| *v /= top);

    let dims = vec![size; ndim];
    let mut grid = ScalarGrid::new(ndim, &dims, &vec![1.0; ndim], 0.0)?;
    let [d, h, w] = grid.shape3();
    let centre = [d / 2, h / 2, w / 2].map(|c| c as f64);
    let r_max = (0..3)
        .map(|a| (gains[a] * [d, h, w][a] as f64 / 2.0).powi(2))
        .sum::<f64>()
        .sqrt()
        .max(1.0);
    let data = grid.data_mut();
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                let pos = [z as f64, y as f64, x as f64];
                let r = (0..3).map(|a| (gains[a] * (pos[a] - centre[a])).powi(2)).sum::<f64>().sqrt();
                let t = (r / r_max).min(1.0) * KNOTS as f64;
                let k = (t as usize).min(KNOTS - 1);
                let v = profile[k] + (t - k as f64) * (profile[k + 1] - profile[k]);
                data[(z * h + y) * w + x] = v as f32;
            }
        }
    }
    Ok(grid)
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

fn time_runs(
    repeats: usize,
    mut run: impl FnMut() -> Result<ScalarGrid, GeodistError>,
) -> Result<(f64, ScalarGrid), GeodistError> {
    // Warm-up run, not timed.
    let mut last = run()?;
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        last = run()?;
        samples.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok((median(samples), last))
}

/// Runs the serial-vs-parallel benchmark. Rows come out in a fixed order:
/// per size, the serial row followed by one parallel row per thread count.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchRow>, GeodistError> {
    let params = TransformParams::new(config.lambda, 1.0, config.iterations)?;
    if config.repeats == 0 {
        return Err(GeodistError::InvalidParam { name: "repeats", value: 0.0 });
    }
    if config.threads.is_empty() || config.threads.contains(&0) {
        return Err(GeodistError::InvalidParam { name: "threads", value: 0.0 });
    }
    let mut rows = Vec::new();
    for &size in &config.sizes {
        let image = benchmark_image(config.ndim, size, config.seed)?;
        let mut seeds = image.filled_like(0.0);
        let center = vec![size / 2; config.ndim];
        seeds.set(&center, 1.0);
        let init = transforms::init_hard_seeds(&seeds)?;

        let (serial_ms, reference) = time_runs(config.repeats, || {
            crate::scan_serial::serial_scan(&image, init.clone(), &params)
        })?;
        rows.push(BenchRow {
            ndim: config.ndim,
            size,
            engine: "serial",
            threads: 1,
            iterations: config.iterations,
            wall_ms: serial_ms,
            speedup_vs_serial: 1.0,
            max_dev_vs_serial: 0.0,
            rng_seed: config.seed,
        });
        for &threads in &config.threads {
            let (ms, grid) = time_runs(config.repeats, || {
                crate::scan_parallel::parallel_scan(&image, init.clone(), &params, threads)
            })?;
            rows.push(BenchRow {
                ndim: config.ndim,
                size,
                engine: "parallel",
                threads,
                iterations: config.iterations,
                wall_ms: ms,
                speedup_vs_serial: serial_ms / ms,
                max_dev_vs_serial: max_abs_diff(&reference, &grid).0,
                rng_seed: config.seed,
            });
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], sink: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(BENCH_CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_benchmark(args: &BenchArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if args.dims != 2 && args.dims != 3 {
        return Err(CliError::Usage(format!("--dims must be 2 or 3, got {}", args.dims)));
    }
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        return Err(CliError::Usage("--sizes must list positive sizes".into()));
    }
    if args.threads_list.is_empty() || args.threads_list.contains(&0) {
        return Err(CliError::Usage("--threads-list must list positive thread counts".into()));
    }
    if args.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    let config = BenchConfig {
        ndim: args.dims,
        sizes: args.sizes.clone(),
        threads: args.threads_list.clone(),
        iterations: args.iterations,
        lambda: args.lambda,
        repeats: args.repeats,
        seed: args.seed,
    };
    TransformParams::new(config.lambda, 1.0, config.iterations)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let rows = run_benchmark(&config)?;
    match &args.csv {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            write_bench_csv(&rows, file).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        None => write_bench_csv(&rows, &mut *out).map_err(|e| CliError::Io(e.to_string()))?,
    }
    if let Some(bad) = rows.iter().find(|r| !(r.max_dev_vs_serial <= BENCH_AGREEMENT_TOL)) {
        return Err(CliError::Compute(format!(
            "engines disagree: size {} threads {} max deviation {:e} > {:e}",
            bad.size, bad.threads, bad.max_dev_vs_serial, BENCH_AGREEMENT_TOL
        )));
    }
    Ok(0)
}
