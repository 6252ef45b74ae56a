//! Command implementations behind the `fastfood` binary.
//!
//! Every command writes plain delimited text whose first line is a `#`
//! comment echoing the full configuration, so a run can be repeated from its
//! output alone.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rand::Rng;

use fastfood::baselines::DenseGaussianTransform;
use fastfood::fastfood::FastfoodTransform;
use fastfood::learn::{
    build_feature_map, evaluate_regression, load_table, synth_gp_data, write_table, Dataset, Method,
    TargetColumn, DEFAULT_LAMBDA,
};
use fastfood::sampling::{radial_draws, RadialSampler, SeedSpec, TabulatedDensity};
use fastfood::stats::{chi_cdf, ks_test, mean, std_error};
use fastfood::{Error, FeatureMap, Result};

pub use fastfood::kernels::KernelSpec;

/// Exit status for malformed flags or arguments.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for unreadable or malformed data.
pub const EXIT_DATA: i32 = 3;
/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 4;

/// Process exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::OutOfRange(_) => EXIT_USAGE,
        Error::DimensionMismatch { .. } | Error::Parse { .. } | Error::Format(_) | Error::Io(_) => {
            EXIT_DATA
        }
        Error::Numerical(_) | Error::Overflow(_) => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "fastfood", version, about = "Fast random feature expansions for kernel methods")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Map the rows of a table to feature rows.
    Transform,
    /// Mean absolute kernel approximation error against the number of features.
    ApproxError,
    /// Per-vector time and parameter memory of Fastfood against dense features.
    Bench,
    /// Train/test ridge regression with one method.
    Regress,
    /// Goodness-of-fit checks for the radial samplers.
    Diag,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Transform => "transform",
            Command::ApproxError => "approx-error",
            Command::Bench => "bench",
            Command::Regress => "regress",
            Command::Diag => "diag",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Rbf,
    Matern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fastfood,
    Rks,
    RksHashed,
    Nystrom,
    Exact,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Fastfood => Method::Fastfood,
            MethodArg::Rks => Method::Rks,
            MethodArg::RksHashed => Method::RksHashed,
            MethodArg::Nystrom => Method::Nystrom,
            MethodArg::Exact => Method::Exact,
        }
    }
}

/// Options shared by all commands. Defaults are listed in `--help`.
#[derive(Debug, Clone, PartialEq, Args)]
pub struct RunConfig {
    /// Feature construction method. Default: fastfood (approx-error: fastfood,rks).
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    pub method: Vec<MethodArg>,

    #[arg(long, global = true, value_enum, default_value = "rbf")]
    pub kernel: KernelKind,

    /// Kernel bandwidth σ.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub sigma: f64,

    /// Number of ball convolutions for the Matérn kernel.
    #[arg(long, global = true, default_value_t = 3)]
    pub matern_t: u32,

    /// Feature count(s); a comma list for approx-error and bench.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Vec<usize>,

    /// Input dimension(s) for bench, approx-error and diag.
    #[arg(long, global = true, value_delimiter = ',')]
    pub dim: Vec<usize>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Ridge penalty on standardized data.
    #[arg(long, global = true, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,

    /// Delimited numeric table (comma or whitespace, optional header).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Target column: 0-based index, header name, or `last`.
    #[arg(long, global = true)]
    pub target_col: Option<String>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Repetitions (timing runs, approx-error seeds, diag draws are fixed).
    #[arg(long, global = true)]
    pub reps: Option<usize>,

    /// Upper bound on worker threads. Commands currently run on one thread,
    /// so results never depend on this value.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Points sampled by approx-error.
    #[arg(long, global = true, default_value_t = 4000)]
    pub points: usize,

    /// Point pairs compared by approx-error.
    #[arg(long, global = true, default_value_t = 1000)]
    pub pairs: usize,

    /// Rows of the synthetic regression set used when --input is absent.
    #[arg(long, global = true, default_value_t = 2000)]
    pub synth_m: usize,

    /// Bandwidth of the synthetic regression target.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub synth_sigma: f64,

    /// Noise level of the synthetic regression target.
    #[arg(long, global = true, default_value_t = 0.1)]
    pub synth_noise: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: vec![],
            kernel: KernelKind::Rbf,
            sigma: 1.0,
            matern_t: 3,
            n: vec![],
            dim: vec![],
            seed: 0,
            lambda: DEFAULT_LAMBDA,
            input: None,
            target_col: None,
            output: None,
            reps: None,
            threads: 1,
            points: 4000,
            pairs: 1000,
            synth_m: 2000,
            synth_sigma: 1.0,
            synth_noise: 0.1,
        }
    }
}

fn list<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn spec(&self) -> Result<KernelSpec> {
        let spec = match self.kernel {
            KernelKind::Rbf => KernelSpec::Rbf { sigma: self.sigma },
            KernelKind::Matern => KernelSpec::Matern {
                sigma: self.sigma,
                t: self.matern_t,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn methods(&self, default: &[Method]) -> Vec<Method> {
        if self.method.is_empty() {
            default.to_vec()
        } else {
            self.method.iter().map(|&m| m.into()).collect()
        }
    }

    fn single_method(&self) -> Result<Method> {
        match self.methods(&[Method::Fastfood]).as_slice() {
            [m] => Ok(*m),
            _ => Err(Error::InvalidArgument("this command takes one --method".into())),
        }
    }

    fn single_n(&self, default: usize) -> Result<usize> {
        match self.n.as_slice() {
            [] => Ok(default),
            [n] => Ok(*n),
            _ => Err(Error::InvalidArgument("this command takes one --n".into())),
        }
    }

    fn target(&self) -> Result<TargetColumn> {
        self.target_col.as_deref().unwrap_or("last").parse()
    }

    /// `# fastfood <command> key=value ...` with every option.
    pub fn echo(&self, command: Command) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        let methods: Vec<String> = self.method.iter().map(|&m| Method::from(m).to_string()).collect();
        format!(
            "# fastfood {} method={} kernel={} sigma={} matern_t={} n={} dim={} seed={} lambda={} input={} target_col={} output={} reps={} threads={} points={} pairs={} synth_m={} synth_sigma={} synth_noise={}",
            command.name(),
            if methods.is_empty() { "default".to_string() } else { methods.join(",") },
            match self.kernel {
                KernelKind::Rbf => "rbf",
                KernelKind::Matern => "matern",
            },
            self.sigma,
            self.matern_t,
            if self.n.is_empty() { "default".to_string() } else { list(&self.n) },
            if self.dim.is_empty() { "default".to_string() } else { list(&self.dim) },
            self.seed,
            self.lambda,
            path(&self.input),
            self.target_col.as_deref().unwrap_or("last"),
            path(&self.output),
            self.reps.map_or("default".to_string(), |r| r.to_string()),
            self.threads,
            self.points,
            self.pairs,
            self.synth_m,
            self.synth_sigma,
            self.synth_noise,
        )
    }

    fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        if self.reps == Some(0) {
            return Err(Error::InvalidArgument("--reps must be at least 1".into()));
        }
        if self.n.contains(&0) || self.dim.contains(&0) {
            return Err(Error::InvalidArgument("--n and --dim must be positive".into()));
        }
        Ok(())
    }
}

/// Runs `command`, writing to `--output` or to `stdout`.
pub fn run(command: Command, config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    config.validate()?;
    match &config.output {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            dispatch(command, config, &mut file)?;
            file.flush()?;
            Ok(())
        }
        None => dispatch(command, config, stdout),
    }
}

fn dispatch(command: Command, config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{}", config.echo(command))?;
    match command {
        Command::Transform => cmd_transform(config, out),
        Command::ApproxError => cmd_approx_error(config, out),
        Command::Bench => cmd_bench(config, out),
        Command::Regress => cmd_regress(config, out),
        Command::Diag => cmd_diag(config, out),
    }
}

/// Feature rows for every row of `--input` (minus `--target-col` when given).
pub fn cmd_transform(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("transform needs --input".into()))?;
    let rows = match &config.target_col {
        Some(_) => load_table(path, &config.target()?)?.x,
        None => fastfood::learn::Table::read(path)?.rows,
    };
    let method = config.single_method()?;
    let map = build_feature_map(method, &config.spec()?, config.single_n(1024)?, &rows, config.seed)?;
    let features = map.map_rows(&rows)?;
    write_table(out, None, &features)
}

/// One point of the approximation-error curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub method: Method,
    pub n: usize,
    /// Mean over repetitions of the pair-averaged `|k̂ - k|`.
    pub mean_error: f64,
    /// Standard error of `mean_error` across repetitions.
    pub std_error: f64,
    pub reps: usize,
}

/// Settings of [`approx_error_curve`].
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorStudy {
    pub spec: KernelSpec,
    pub dim: usize,
    pub points: usize,
    pub pairs: usize,
    pub reps: usize,
    pub seed: u64,
}

/// Samples `points` uniform points of `[0,1]^dim` and `pairs` random pairs of
/// them, then for each method and `n` averages `|k̂ - k|` over the pairs, once
/// per repetition with fresh transform seeds.
pub fn approx_error_curve(study: &ErrorStudy, methods: &[Method], ns: &[usize]) -> Result<Vec<ErrorRow>> {
    if study.points < 2 || study.pairs == 0 || study.reps < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 points, 1 pair and 2 repetitions".into(),
        ));
    }
    let mut rng = SeedSpec::new(study.seed, 0).child(0xA1).rng();
    let pts = DMatrix::from_fn(study.points, study.dim, |_, _| rng.gen::<f64>());
    let row = |i: usize| -> Vec<f64> { pts.row(i).iter().copied().collect() };
    let pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..study.pairs)
        .map(|_| {
            let i = rng.gen_range(0..study.points);
            let mut j = rng.gen_range(0..study.points - 1);
            if j >= i {
                j += 1;
            }
            let (x, xp) = (row(i), row(j));
            let k = study.spec.evaluate(&x, &xp)?;
            Ok((x, xp, k))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &method in methods {
        for &n in ns {
            let mut per_rep = Vec::with_capacity(study.reps);
            for rep in 0..study.reps {
                let master = SeedSpec::new(study.seed, 1 + rep as u64).child(n as u64).stream_id;
                let estimate: Box<dyn Fn(&[f64], &[f64]) -> Result<f64>> = match method {
                    Method::Fastfood => {
                        let tf = FastfoodTransform::build(study.dim, n, study.spec.clone(), master)?;
                        Box::new(move |x, xp| tf.kernel_estimate(x, xp))
                    }
                    Method::Rks | Method::RksHashed => {
                        let sigma = match study.spec {
                            KernelSpec::Rbf { sigma } => sigma,
                            _ => {
                                return Err(Error::InvalidArgument(
                                    "random kitchen sinks need an RBF kernel".into(),
                                ))
                            }
                        };
                        let hashed = method == Method::RksHashed;
                        let tf = DenseGaussianTransform::build(study.dim, n, sigma, master, hashed)?;
                        Box::new(move |x, xp| tf.kernel_estimate(x, xp))
                    }
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "approx-error supports fastfood and rks, not {method}"
                        )))
                    }
                };
                let mut total = 0.0;
                for (x, xp, k) in &pairs {
                    total += (estimate(x, xp)? - k).abs();
                }
                per_rep.push(total / pairs.len() as f64);
            }
            rows.push(ErrorRow {
                method,
                n,
                mean_error: mean(&per_rep),
                std_error: std_error(&per_rep),
                reps: study.reps,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_approx_error(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dims = if config.dim.is_empty() { vec![10] } else { config.dim.clone() };
    let [dim] = dims[..] else {
        return Err(Error::InvalidArgument("approx-error takes one --dim".into()));
    };
    let ns = if config.n.is_empty() { vec![512, 1024, 2048, 4096] } else { config.n.clone() };
    let study = ErrorStudy {
        spec: config.spec()?,
        dim,
        points: config.points,
        pairs: config.pairs,
        reps: config.reps.unwrap_or(10),
        seed: config.seed,
    };
    let d_pad = dim.next_power_of_two();
    if ns.iter().any(|n| n % d_pad != 0) {
        writeln!(out, "# note: n values that are not multiples of {d_pad} use a truncated last block")?;
    }
    let rows = approx_error_curve(&study, &config.methods(&[Method::Fastfood, Method::Rks]), &ns)?;
    writeln!(out, "method,n,mean_abs_error,std_error,reps")?;
    for r in rows {
        writeln!(out, "{},{},{:e},{:e},{}", r.method, r.n, r.mean_error, r.std_error, r.reps)?;
    }
    Ok(())
}

/// One row of the speed/memory comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub d: usize,
    pub n: usize,
    /// Median seconds per input vector.
    pub t_ff: f64,
    pub t_rks: f64,
    pub speedup: f64,
    /// Bytes of stored parameters.
    pub mem_ff: usize,
    pub mem_rks: usize,
}

/// Median of `reps` timed feature computations after `warmup` untimed ones.
pub fn median_seconds(reps: usize, warmup: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    for _ in 0..warmup {
        f()?;
    }
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    Ok(if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    })
}

/// Times the full feature map (`2n` outputs) of Fastfood and of a stored
/// dense Gaussian matrix on the same input.
pub fn bench_pair(d: usize, n: usize, reps: usize, seed: u64) -> Result<BenchRow> {
    if !d.is_power_of_two() || !n.is_power_of_two() {
        return Err(Error::InvalidArgument("bench needs powers of two for d and n".into()));
    }
    let mut rng = SeedSpec::new(seed, 0).child(0xBE).rng();
    let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    let mut buf = vec![0.0; 2 * n];
    let warmup = (reps / 10).max(2);

    let ff = FastfoodTransform::build(d, n, KernelSpec::Rbf { sigma: 1.0 }, seed)?;
    let t_ff = median_seconds(reps, warmup, || ff.map_into(&x, &mut buf))?;
    let mem_ff = ff.parameter_bytes();
    drop(ff);

    let rks = DenseGaussianTransform::build(d, n, 1.0, seed, false)?;
    let t_rks = median_seconds(reps, warmup, || rks.map_into(&x, &mut buf))?;
    let mem_rks = rks.parameter_bytes();

    Ok(BenchRow {
        d,
        n,
        t_ff,
        t_rks,
        speedup: t_rks / t_ff,
        mem_ff,
        mem_rks,
    })
}

pub fn cmd_bench(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dims = if config.dim.is_empty() { vec![1024] } else { config.dim.clone() };
    let ns = if config.n.is_empty() { vec![16384] } else { config.n.clone() };
    let reps = config.reps.unwrap_or(100);
    writeln!(out, "d,n,t_ff,t_rks,speedup,mem_ff,mem_rks")?;
    for &d in &dims {
        for &n in &ns {
            let r = bench_pair(d, n, reps, config.seed)?;
            writeln!(
                out,
                "{},{},{:e},{:e},{:.2},{},{}",
                r.d, r.n, r.t_ff, r.t_rks, r.speedup, r.mem_ff, r.mem_rks
            )?;
        }
    }
    Ok(())
}

pub fn cmd_regress(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let data: Dataset = match &config.input {
        Some(path) => load_table(path, &config.target()?)?,
        None => {
            let dims = if config.dim.is_empty() { vec![10] } else { config.dim.clone() };
            let [dim] = dims[..] else {
                return Err(Error::InvalidArgument("regress takes one --dim".into()));
            };
            synth_gp_data(config.synth_m, dim, config.synth_sigma, config.synth_noise, config.seed)?
        }
    };
    let method = config.single_method()?;
    let report = evaluate_regression(
        &data,
        method,
        &config.spec()?,
        config.single_n(2048)?,
        config.lambda,
        config.seed,
    )?;
    writeln!(out, "method={}", report.method)?;
    writeln!(out, "seed={}", config.seed)?;
    writeln!(out, "train_rows={}", report.train_rows)?;
    writeln!(out, "test_rows={}", report.test_rows)?;
    writeln!(out, "features={}", report.features)?;
    writeln!(out, "train_rmse={}", report.train_rmse)?;
    writeln!(out, "test_rmse={}", report.test_rmse)?;
    writeln!(out, "seconds={:.3}", report.seconds)?;
    let json = serde_json::to_string(&report).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(out, "summary={json}")?;
    Ok(())
}

/// Outcome of one sampler check.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagCheck {
    pub name: String,
    pub statistic: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// KS p-value threshold used by the diagnostics.
pub const DIAG_KS_ALPHA: f64 = 1e-3;
/// Relative tolerance of the diagnostic moment checks.
pub const DIAG_MOMENT_TOL: f64 = 0.02;

/// KS tests of the chi and tabulated samplers against the chi CDF, and the
/// second-moment identity `E|Σξ|² = t·d/(d+2)` for the Matérn sampler.
pub fn diag_report(dim: usize, t: u32, draws: usize, seed: u64) -> Result<Vec<DiagCheck>> {
    let base = SeedSpec::new(seed, 0);
    let mut checks = Vec::new();

    let chi = radial_draws(&RadialSampler::ChiRbf { dim }, draws, base.child(1))?;
    let ks = ks_test(&chi, |r| chi_cdf(dim, r));
    checks.push(DiagCheck {
        name: format!("chi_rbf(dim={dim}) ks"),
        statistic: "p_value",
        value: ks.p_value,
        threshold: DIAG_KS_ALPHA,
        pass: ks.p_value > DIAG_KS_ALPHA,
    });

    let table = TabulatedDensity::from_fn(dim, 12.0 + (dim as f64).sqrt(), |r| (-r * r / 2.0).exp())?;
    let tab = radial_draws(&RadialSampler::Tabulated(table), draws, base.child(2))?;
    let ks = ks_test(&tab, |r| chi_cdf(dim, r));
    checks.push(DiagCheck {
        name: format!("tabulated_gaussian(dim={dim}) ks"),
        statistic: "p_value",
        value: ks.p_value,
        threshold: DIAG_KS_ALPHA,
        pass: ks.p_value > DIAG_KS_ALPHA,
    });

    let mat = radial_draws(&RadialSampler::MaternConv { dim, t }, draws, base.child(3))?;
    let second: Vec<f64> = mat.iter().map(|r| r * r).collect();
    let target = t as f64 * dim as f64 / (dim as f64 + 2.0);
    let rel = (mean(&second) - target).abs() / target;
    checks.push(DiagCheck {
        name: format!("matern_conv(dim={dim},t={t}) second moment"),
        statistic: "rel_error",
        value: rel,
        threshold: DIAG_MOMENT_TOL,
        pass: rel <= DIAG_MOMENT_TOL,
    });
    Ok(checks)
}

pub fn cmd_diag(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dims = if config.dim.is_empty() { vec![4] } else { config.dim.clone() };
    let draws = config.reps.unwrap_or(100_000);
    writeln!(out, "check,statistic,value,threshold,status")?;
    let mut failed = 0;
    for &dim in &dims {
        for c in diag_report(dim, config.matern_t, draws, config.seed)? {
            failed += usize::from(!c.pass);
            writeln!(
                out,
                "{},{},{:e},{:e},{}",
                c.name,
                c.statistic,
                c.value,
                c.threshold,
                if c.pass { "pass" } else { "fail" }
            )?;
        }
    }
    writeln!(out, "# failed={failed}")?;
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    match run(cli.command, &cli.config, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point used by the binary.
pub fn main_from_env() -> i32 {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let code = main_with_args(std::env::args_os(), &mut lock, &mut io::stderr());
    let _ = lock.flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(std::iter::once("fastfood").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Format("x".into())), EXIT_DATA);
        assert_eq!(exit_code(&Error::Numerical("x".into())), EXIT_NUMERICAL);
        assert_eq!(call(&["nope"]).0, EXIT_USAGE);
        assert_eq!(call(&["approx-error", "--sigma", "0"]).0, EXIT_USAGE);
    }

    #[test]
    fn error_curve_is_seeded() {
        let args = ["approx-error", "--dim", "3", "--n", "8,32", "--points", "30", "--pairs", "20", "--reps", "2"];
        let (code, first) = call(&args);
        assert_eq!(code, 0);
        assert_eq!(first, call(&args).1);
        assert!(first.starts_with("# fastfood approx-error"));
    }

    #[test]
    fn error_curve_rows_cover_every_method_and_size() {
        let study = ErrorStudy {
            spec: KernelSpec::Rbf { sigma: 1.0 },
            dim: 3,
            points: 40,
            pairs: 30,
            reps: 3,
            seed: 1,
        };
        let rows = approx_error_curve(&study, &[Method::Fastfood, Method::Rks], &[8, 64]).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.mean_error > 0.0 && r.std_error >= 0.0 && r.reps == 3));
    }

    #[test]
    fn median_of_constant_work_is_positive() {
        let t = median_seconds(5, 1, || {
            std::hint::black_box((0..1000).sum::<u64>());
            Ok(())
        })
        .unwrap();
        assert!(t >= 0.0);
    }

    #[test]
    fn bench_rows_report_memory() {
        let row = bench_pair(32, 64, 2, 0).unwrap();
        assert_eq!((row.d, row.n), (32, 64));
        assert!(row.mem_rks > row.mem_ff);
    }
}
