//! `denseset`: find small sets covering a fraction of a point cloud.

mod bench;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use denseset::conformal::{fit_conformal, ConformalPredictor, DEFAULT_GRID_SIZE};
use denseset::dense_ball::{BallSearchParams, DEFAULT_CANDIDATE_CAP};
use denseset::greedy_union::{BallLearner, BaseLearner, EllipsoidLearner, IsotropicBallLearner};
use denseset::io::{read_points, write_points, Truth};
use denseset::{
    coverage_count, dense_ball, dense_ball_isotropic, dense_ellipsoid, gen_clusters, gen_incidence_hard, gen_pancake,
    gen_planted, greedy_union, opt_k_ball, Ellipsoid, Error, GreedyParams, PointSet,
};

#[derive(Parser)]
#[command(name = "denseset", version, about = "Small-volume balls, ellipsoids and unions covering a fraction of a point cloud")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Proper ball learner.
    Ball(BallArgs),
    /// Ball learner for near-isotropic inliers.
    BallIso(IsoArgs),
    /// Ellipsoid learner.
    Ellipsoid(EllipsoidArgs),
    /// Greedy union of up to k sets.
    Union(UnionArgs),
    /// Fit a split-conformal predictor, or query a saved one.
    Conformal(ConformalArgs),
    /// Exact smallest ball covering m points (n <= 16).
    Oracle(OracleArgs),
    /// Generate a synthetic instance.
    Gen(GenArgs),
    /// Run a sweep over generated instances and print a CSV table.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct Input {
    /// CSV file with one point per row; `-` or absent reads stdin.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Skip the first line of the input.
    #[arg(long)]
    header: bool,
    /// Write the result here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Coverage {
    /// Target coverage fraction, in (0, 1].
    #[arg(long, value_parser = fraction_incl)]
    delta: f64,
    /// Coverage slack, in (0, 1).
    #[arg(long, value_parser = fraction_excl)]
    gamma: f64,
}

#[derive(Args)]
struct BallArgs {
    #[command(flatten)]
    io: Input,
    #[command(flatten)]
    cov: Coverage,
    #[command(flatten)]
    knobs: BallKnobs,
}

#[derive(Args)]
struct BallKnobs {
    /// Grid dimension (default from d).
    #[arg(long)]
    q: Option<usize>,
    /// Net spacing (default R_min / ln d).
    #[arg(long)]
    tau: Option<f64>,
    /// Maximum grid size per coarse ball.
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
    cap: usize,
    /// Fail (exit 3) instead of skipping a coarse ball whose grid is too large.
    #[arg(long)]
    strict_budget: bool,
}

impl BallKnobs {
    fn params(&self, delta: f64, gamma: f64) -> BallSearchParams {
        let mut p = BallSearchParams::new(delta, gamma);
        p.q = self.q;
        p.tau = self.tau;
        p.candidate_cap = self.cap;
        p.fail_on_budget = self.strict_budget;
        p
    }
}

#[derive(Args)]
struct IsoArgs {
    #[command(flatten)]
    io: Input,
    #[command(flatten)]
    cov: Coverage,
    /// Inlier covariance bound, as a multiple of R^2 / d.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EllipsoidArgs {
    #[command(flatten)]
    io: Input,
    #[command(flatten)]
    cov: Coverage,
    /// Stretching threshold (default d^(1/4)).
    #[arg(long)]
    tau_hat: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseKind {
    Ball,
    BallIso,
    Ellipsoid,
}

#[derive(Args)]
struct UnionArgs {
    #[command(flatten)]
    io: Input,
    #[command(flatten)]
    cov: Coverage,
    /// Number of sets in the competitor union.
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "ellipsoid")]
    base: BaseKind,
    #[command(flatten)]
    knobs: BallKnobs,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tau_hat: Option<f64>,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct ConformalArgs {
    #[command(subcommand)]
    query: Option<ConformalCommand>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Subcommand)]
enum ConformalCommand {
    /// Print `true` or `false` for each query row.
    Query(QueryArgs),
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    io: Input,
    /// Miscoverage level, in (0, 1).
    #[arg(long, required = true, value_parser = fraction_excl)]
    alpha: Option<f64>,
    /// Slack given to the base learner, in (0, 1).
    #[arg(long, default_value_t = 0.05, value_parser = fraction_excl)]
    gamma: f64,
    /// Number of coverage levels in the scaling grid.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct QueryArgs {
    /// Predictor JSON written by `conformal`.
    #[arg(long)]
    predictor: PathBuf,
    #[command(flatten)]
    io: Input,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    io: Input,
    /// Number of points to cover.
    #[arg(long, required_unless_present = "delta")]
    m: Option<usize>,
    /// Cover ceil(delta n) points instead of m.
    #[arg(long, conflicts_with = "m", value_parser = fraction_incl)]
    delta: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
    /// Points CSV (stdout when absent).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Truth JSON (defaults to `<out>.truth.json` when --out is given).
    #[arg(long, global = true)]
    truth: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenKind {
    /// Inliers uniform in a ball, outliers in a far shell.
    Planted {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, value_parser = fraction_incl)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        r_star: f64,
        #[arg(long, default_value_t = 3.0)]
        outlier_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Flat inliers with a few high-variance directions.
    Pancake {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        k_high: usize,
        #[arg(long, value_parser = fraction_incl)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// k separated unit-ball clusters plus scatter.
    Clusters {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = fraction_incl)]
        delta: f64,
        #[arg(long, default_value_t = 6.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Incidence rows of a random regular graph (no truth file).
    Incidence {
        #[arg(long)]
        vertices: usize,
        #[arg(long)]
        degree: usize,
        /// Row length; at least the number of edges.
        #[arg(long)]
        pad_dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn fraction_incl(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1]"))
    }
}

fn fraction_excl(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

/// Exit status for a library error.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) | Error::TooFewInliers(_) | Error::NoQualifyingSet { .. } | Error::RoundCapExceeded { .. } => 2,
        Error::BudgetExceeded(_) | Error::CapExceeded(_) => 3,
        _ => 1,
    }
}

fn read_input(io: &Input) -> Result<PointSet, Error> {
    match io.input.as_deref() {
        None => read_stdin(io.header),
        Some(p) if p == Path::new("-") => read_stdin(io.header),
        Some(p) => read_points(fs::File::open(p)?, io.header),
    }
}

fn read_stdin(header: bool) -> Result<PointSet, Error> {
    let mut buf = Vec::new();
    io::stdin().read_to_end(&mut buf)?;
    read_points(buf.as_slice(), header)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut s = io::stdout().lock();
            s.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                s.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn emit_set(io: &Input, y: &PointSet, e: &Ellipsoid) -> Result<(), Error> {
    let rec = e.to_record(Some(coverage_count(e, y)?));
    emit(io.out.as_deref(), &rec.to_json()?)
}

/// The guarantees need about d^2 / gamma^2 samples.
fn sample_size_hint(y: &PointSet, gamma: f64) {
    let d = y.dim() as f64;
    let want = d * d / (gamma * gamma);
    if (y.len() as f64) < want {
        warn!(
            "n = {} is below d^2 / gamma^2 = {want:.0}; the volume guarantees may not apply",
            y.len()
        );
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ball(a) => {
            let y = read_input(&a.io)?;
            sample_size_hint(&y, a.cov.gamma);
            let b = dense_ball(&y, &a.knobs.params(a.cov.delta, a.cov.gamma))?;
            emit_set(&a.io, &y, &b)
        }
        Command::BallIso(a) => {
            let y = read_input(&a.io)?;
            sample_size_hint(&y, a.cov.gamma);
            let b = dense_ball_isotropic(&y, a.cov.delta, a.cov.gamma, a.beta, a.seed)?;
            emit_set(&a.io, &y, &b)
        }
        Command::Ellipsoid(a) => {
            let y = read_input(&a.io)?;
            sample_size_hint(&y, a.cov.gamma);
            let e = dense_ellipsoid(&y, a.cov.delta, a.cov.gamma, a.tau_hat)?;
            emit_set(&a.io, &y, &e)
        }
        Command::Union(a) => {
            let y = read_input(&a.io)?;
            sample_size_hint(&y, a.cov.gamma);
            let base: Box<dyn BaseLearner> = match a.base {
                BaseKind::Ball => Box::new(BallLearner {
                    template: a.knobs.params(a.cov.delta, a.cov.gamma),
                }),
                BaseKind::BallIso => Box::new(IsotropicBallLearner {
                    beta: a.beta,
                    seed: a.seed,
                }),
                BaseKind::Ellipsoid => Box::new(EllipsoidLearner { tau_hat: a.tau_hat }),
            };
            let out = greedy_union(&y, &GreedyParams::new(a.cov.delta, a.cov.gamma, a.k), base.as_ref())?;
            let rec = out.union.to_record(Some(out.coverage));
            emit(a.io.out.as_deref(), &rec.to_json()?)
        }
        Command::Conformal(a) => match a.query {
            Some(ConformalCommand::Query(q)) => {
                let p = ConformalPredictor::from_json(&fs::read_to_string(&q.predictor)?)?;
                let y = read_input(&q.io)?;
                let mut text = String::new();
                for row in y.rows() {
                    text.push_str(if p.predict_contains(row)? { "true\n" } else { "false\n" });
                }
                emit(q.io.out.as_deref(), &text)
            }
            None => {
                let f = a.fit;
                let y = read_input(&f.io)?;
                let alpha = f.alpha.expect("clap enforces --alpha");
                let p = fit_conformal(&y, alpha, f.gamma, f.grid_size, f.seed)?;
                if p.infeasible {
                    warn!(
                        "alpha = {alpha} needs more than {} calibration points; using the largest grid member",
                        p.n_cal
                    );
                }
                emit(f.io.out.as_deref(), &p.to_json()?)
            }
        },
        Command::Oracle(a) => {
            let y = read_input(&a.io)?;
            let m = match (a.m, a.delta) {
                (Some(m), _) => m,
                (None, Some(delta)) => denseset::geometry::ceil_count(delta, y.len()),
                (None, None) => unreachable!("clap requires one of --m and --delta"),
            };
            let b = opt_k_ball(&y, m)?;
            emit_set(&a.io, &y, &b)
        }
        Command::Gen(g) => run_gen(g),
        Command::Bench(b) => bench::run(&b),
    }
}

fn run_gen(g: GenArgs) -> Result<(), Error> {
    let (points, truth) = match g.kind {
        GenKind::Planted {
            n,
            d,
            delta,
            r_star,
            outlier_scale,
            seed,
        } => {
            let inst = gen_planted(n, d, delta, r_star, outlier_scale, seed)?;
            let t = Truth::from(&inst);
            (inst.points, Some(t))
        }
        GenKind::Pancake {
            n,
            d,
            k_high,
            delta,
            seed,
        } => {
            let inst = gen_pancake(n, d, k_high, delta, seed)?;
            let t = Truth::from(&inst);
            (inst.points, Some(t))
        }
        GenKind::Clusters {
            n,
            d,
            k,
            delta,
            separation,
            seed,
        } => {
            let inst = gen_clusters(n, d, k, delta, separation, seed)?;
            let t = Truth::from(&inst);
            (inst.points, Some(t))
        }
        GenKind::Incidence {
            vertices,
            degree,
            pad_dim,
            seed,
        } => {
            let pad = pad_dim.unwrap_or(vertices * degree / 2);
            (gen_incidence_hard(vertices, degree, pad, seed)?, None)
        }
    };
    let mut csv = Vec::new();
    write_points(&mut csv, &points)?;
    match &g.out {
        Some(p) => fs::write(p, &csv)?,
        None => io::stdout().lock().write_all(&csv)?,
    }
    let truth_path = g.truth.clone().or_else(|| {
        g.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".truth.json");
            PathBuf::from(s)
        })
    });
    if let (Some(t), Some(path)) = (truth, truth_path) {
        fs::write(path, t.to_json()?)?;
    }
    Ok(())
}

fn configure_threads() {
    let Ok(v) = std::env::var("DENSESET_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                warn!("could not size the thread pool: {e}");
            }
        }
        _ => warn!("ignoring DENSESET_THREADS={v:?}; expected a positive integer"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// A closed stdout (`denseset ... | head`) is not worth reporting.
fn broken_pipe(e: &Error) -> bool {
    let io = match e {
        Error::Io(io) => Some(io),
        Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => Some(io),
            _ => None,
        },
        _ => None,
    };
    io.is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
}
