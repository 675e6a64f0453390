//! `sublevel`: evaluate the Green function, measure its sublevel sets and run
//! the verification suite.
//!
//! Exit codes: 0 success, 1 runtime error, 2 verification failed,
//! 3 inconclusive or budget exhausted, 64 usage error.

mod args;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sublevel::area::{DEFAULT_CELL_BUDGET, DEFAULT_MAX_DEPTH};
use sublevel::{ComplexPoint, GreenParams};

use args::{parse_complex, parse_count, parse_positive, Band, Level};
use output::{num, opt_num, Sink};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "sublevel",
    version,
    about = "Sublevel-set areas of an explicit planar Green function"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Hole radius r in (0, 1); the default is e^(-1/3), so t0 = -1/9.
    #[arg(long, global = true, value_parser = parse_positive)]
    r: Option<f64>,
    /// Quadtree tolerance; engine default when omitted.
    #[arg(long, global = true, value_parser = parse_positive)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: u32,
    #[arg(long, global = true, default_value_t = DEFAULT_CELL_BUDGET, value_parser = parse_count)]
    cell_budget: u64,
    /// Monte Carlo seed.
    #[arg(long, global = true, default_value_t = 7, value_parser = parse_count)]
    seed: u64,
    /// Output format; csv for sweep, json otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Changes speed only, never output.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=1024))]
    threads: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// G(w), f'(w), the gradient and membership at one point.
    Eval {
        /// Point as a+bi.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        w: ComplexPoint,
        /// Half-width of the "near boundary" band.
        #[arg(long, default_value_t = 1e-12)]
        tau_b: f64,
    },
    /// Area of {G < t} or of the band {lo < G < hi}.
    Area {
        /// Level: a decimal, t0, or t0+x / t0-x.
        #[arg(
            long,
            allow_hyphen_values = true,
            required_unless_present = "band",
            conflicts_with = "band"
        )]
        t: Option<Level>,
        /// Band lo:hi, each side a level.
        #[arg(long, allow_hyphen_values = true)]
        band: Option<Band>,
        #[arg(long, value_enum, default_value_t = Engine::Quadtree)]
        engine: Engine,
        /// Monte Carlo sample count.
        #[arg(long, default_value = "1e7", value_parser = parse_count)]
        n: u64,
    },
    /// Area profile over evenly spaced levels.
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        t_min: Level,
        #[arg(long, allow_hyphen_values = true)]
        t_max: Level,
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..=1_000_000))]
        steps: u64,
        #[arg(long, value_enum, default_value_t = Engine::Trace)]
        engine: Engine,
        #[arg(long, default_value = "1e7", value_parser = parse_count)]
        n: u64,
    },
    /// Run a check and print its report.
    Verify {
        #[arg(value_enum)]
        which: Which,
        /// Comma-separated ε values, replacing each check's defaults.
        #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
        eps: Option<Vec<f64>>,
        /// Stratified samples per sector.
        #[arg(long, default_value = "1e4", value_parser = parse_count)]
        n_samples: u64,
        /// Monte Carlo samples for the secant cross-check.
        #[arg(long, default_value = "1e7", value_parser = parse_count)]
        mc_samples: u64,
        /// Right offset of the secant triple.
        #[arg(long, default_value_t = 0.05, value_parser = parse_positive)]
        delta: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Quadtree,
    Trace,
    Mc,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Quadtree => "quadtree",
            Engine::Trace => "trace",
            Engine::Mc => "mc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Lemma1,
    Lemma2,
    Corollary,
    Nonconvexity,
    All,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// The resolved run configuration shared by all commands.
pub struct Settings {
    pub params: GreenParams,
    pub tol: Option<f64>,
    pub max_depth: u32,
    pub cell_budget: u64,
    pub seed: u64,
    format: Option<Format>,
}

impl Settings {
    pub fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn run(cli: Cli, started: Instant) -> Result<i32, CliError> {
    let g = cli.global;
    let params = match g.r {
        None => GreenParams::default(),
        Some(r) => GreenParams::with_radius(r).map_err(|e| CliError::Usage(e.to_string()))?,
    };
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let settings = Settings {
        params,
        tol: g.tol,
        max_depth: g.max_depth,
        cell_budget: g.cell_budget,
        seed: g.seed,
        format: g.format,
    };
    let t0 = params.critical_value();
    let default_format = match cli.command {
        Command::Sweep { .. } => Format::Csv,
        _ => Format::Json,
    };
    let mut config = json!({
        "r": num(params.r()),
        "t0": num(t0),
        "tol": opt_num(g.tol),
        "max_depth": g.max_depth,
        "cell_budget": g.cell_budget,
        "seed": g.seed,
        "format": format_name(settings.format(default_format)),
        "out": g.out.as_ref().map(|p| p.display().to_string()),
    });
    let mut sink = Sink {
        out: g.out,
        started,
        config: Value::Null,
    };
    let mut record = |command: &str, args: Value| {
        config["command"] = Value::from(command);
        config["args"] = args;
        sink.config = config.clone();
    };

    match cli.command {
        Command::Eval { w, tau_b } => {
            record(
                "eval",
                json!({ "w_re": num(w.re), "w_im": num(w.im), "tau_b": num(tau_b) }),
            );
            commands::eval(&settings, &sink, w, tau_b)
        }
        Command::Area { t, band, engine, n } => {
            let (lo, hi, spec) = match (t, band) {
                (Some(t), _) => (None, t.resolve(t0), t.to_string()),
                (None, Some(b)) => (Some(b.lo.resolve(t0)), b.hi.resolve(t0), b.to_string()),
                (None, None) => return Err(CliError::Usage("give --t or --band".into())),
            };
            if let Some(lo) = lo {
                if !(lo < hi) {
                    return Err(CliError::Usage(format!("empty band {spec}")));
                }
            }
            record(
                "area",
                json!({
                    "level": spec,
                    "t_lo": opt_num(lo),
                    "t_hi": num(hi),
                    "engine": engine.name(),
                    "n": if engine == Engine::Mc { Value::from(n) } else { Value::Null },
                }),
            );
            commands::area(&settings, &sink, engine, lo, hi, n)
        }
        Command::Sweep {
            t_min,
            t_max,
            steps,
            engine,
            n,
        } => {
            let (lo, hi) = (t_min.resolve(t0), t_max.resolve(t0));
            if !(lo < hi) && steps > 1 {
                return Err(CliError::Usage(format!("need t_min < t_max, got {t_min} and {t_max}")));
            }
            record(
                "sweep",
                json!({
                    "t_min": t_min.to_string(),
                    "t_max": t_max.to_string(),
                    "steps": steps,
                    "engine": engine.name(),
                    "n": if engine == Engine::Mc { Value::from(n) } else { Value::Null },
                }),
            );
            let ts = commands::sweep_levels(lo, hi, steps as usize);
            commands::sweep(&settings, &sink, engine, &ts, n)
        }
        Command::Verify {
            which,
            eps,
            n_samples,
            mc_samples,
            delta,
        } => {
            let name = match which {
                Which::Lemma1 => "lemma1",
                Which::Lemma2 => "lemma2",
                Which::Corollary => "corollary",
                Which::Nonconvexity => "nonconvexity",
                Which::All => "all",
            };
            record(
                "verify",
                json!({
                    "which": name,
                    "eps": eps.as_ref().map(|v| v.iter().map(|&e| num(e)).collect::<Vec<_>>()),
                    "n_samples": n_samples,
                    "mc_samples": mc_samples,
                    "delta": num(delta),
                }),
            );
            let v = commands::VerifyArgs {
                eps,
                n_samples: n_samples as usize,
                mc_samples,
                delta,
            };
            commands::verify(&settings, &sink, which, &v)
        }
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli, started) {
        Ok(code) => ExitCode::from(code as u8),
        Err(CliError::Usage(m)) => {
            eprintln!("sublevel: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("sublevel: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
