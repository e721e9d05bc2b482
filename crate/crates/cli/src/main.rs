use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use g0stat::distances::{self, DistanceKind, EvalMethod, DEFAULT_RENYI_BETA};
use g0stat::estimation::fit_ml;
use g0stat::exec::Execution;
use g0stat::image;
use g0stat::model::{mu_from_params, G0Params, Sample};
use g0stat::montecarlo::{self, RunConfig, ScenarioSpec};
use g0stat::testing::{test_fits, DEGREES_OF_FREEDOM};
use g0stat::Error;

/// Fitting, distances and two-sample tests for the G⁰ speckle model.
#[derive(Parser, Debug)]
#[command(name = "g0stat", version)]
struct Cli {
    /// Cap on worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write CSV output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for simulations.
    #[arg(long, global = true, default_value_t = 20240501)]
    seed: u64,
    /// Run work units one at a time.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximum-likelihood fit of a sample file (one positive value per line).
    Fit {
        file: PathBuf,
        #[arg(long)]
        looks: f64,
    },
    /// Distance between two laws given as α,γ,L.
    Distance {
        /// Distance kind, or "all". Repeatable.
        #[arg(long, required = true)]
        kind: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        p1: String,
        #[arg(long, allow_hyphen_values = true)]
        p2: String,
        /// Rényi order for kinds given without one.
        #[arg(long, default_value_t = DEFAULT_RENYI_BETA)]
        beta: f64,
        /// auto, closed-form or quadrature.
        #[arg(long, default_value = "auto")]
        method: String,
    },
    /// Distance from G⁰(α, −α−1, L) to the reference G⁰(−12, 11, 8) over a grid a:b:step.
    Curve {
        #[arg(long)]
        kind: String,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value = "auto")]
        method: String,
    },
    /// Two-sample test of equal parameters.
    Test {
        file1: PathBuf,
        file2: PathBuf,
        #[arg(long)]
        looks: f64,
        /// Distance kind, or "all". Repeatable.
        #[arg(long, default_value = "T")]
        kind: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
    },
    /// Monte Carlo size and power experiments.
    Simulate(SimulateArgs),
    /// Same-region and cross-region window tests on a raster.
    Analyze {
        raster: PathBuf,
        regions: PathBuf,
        /// Overrides the looks in the raster header.
        #[arg(long)]
        looks: Option<f64>,
        #[arg(long, default_value_t = image::DEFAULT_SIDE)]
        side: usize,
        /// Distance kind, or "all". Repeatable.
        #[arg(long, default_value = "all")]
        kind: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.05")]
        levels: Vec<f64>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Null hypothesis cells over α, μ ∈ {1, 10} and L; --cell "α,γ,L".
    Table5,
    /// Equal-α power cells over α, γ₂/γ₁ and L; --cell "α,ratio,L".
    Table6,
    /// Equal-α power with γ₂/γ₁ = 2, L = 1 over N ∈ {49, 81, 121}; --cell "α".
    Sizes,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    /// Restrict the preset to one configuration.
    #[arg(long, allow_hyphen_values = true)]
    cell: Option<String>,
    /// Sample size per image (ignored by the sizes preset).
    #[arg(long, default_value_t = montecarlo::DEFAULT_WINDOW)]
    window: usize,
    /// Cap on attempted replications per cell.
    #[arg(long, default_value_t = montecarlo::DEFAULT_MAX_REPS)]
    max_reps: usize,
    /// Stop each cell after this many valid replications; 0 runs all attempts.
    #[arg(long, default_value_t = montecarlo::DEFAULT_TARGET_VALID)]
    valid: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05")]
    levels: Vec<f64>,
}

/// A failure with its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Parse { .. } | Error::Io(_) => 2,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn parse_kinds(raw: &[String], beta: f64) -> CliResult<Vec<DistanceKind>> {
    let mut out = Vec::new();
    for k in raw {
        if k.eq_ignore_ascii_case("all") {
            out.extend(DistanceKind::all(beta));
            continue;
        }
        let kind: DistanceKind = k.parse().map_err(|e: Error| usage(e.to_string()))?;
        // A bare Rényi kind takes the --beta order.
        let kind = match kind {
            DistanceKind::Renyi(_) if !k.contains(':') => DistanceKind::renyi(beta).map_err(|e| usage(e.to_string()))?,
            other => other,
        };
        out.push(kind);
    }
    Ok(out)
}

fn parse_reals(s: &str, n: usize, what: &str) -> CliResult<Vec<f64>> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == n => Ok(v),
        _ => Err(usage(format!("{what} must be {n} comma-separated numbers, got '{s}'"))),
    }
}

fn parse_params(s: &str, what: &str) -> CliResult<G0Params> {
    let v = parse_reals(s, 3, what)?;
    Ok(G0Params::new(v[0], v[1], v[2])?)
}

fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let v: Result<Vec<f64>, _> = s.split(':').map(|t| t.trim().parse::<f64>()).collect();
    let v = match v {
        Ok(v) if v.len() == 3 => v,
        _ => return Err(usage(format!("grid must be start:end:step, got '{s}'"))),
    };
    let (a, b, step) = (v[0], v[1], v[2]);
    if step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || a > b || !a.is_finite() || !b.is_finite() {
        return Err(usage("grid needs start <= end and a positive step"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a + i as f64 * step).collect())
}

/// One positive real per line; blank lines and '#' comments are skipped.
fn read_sample(path: &Path, looks: f64) -> CliResult<Sample> {
    let text = fs::read_to_string(path).map_err(|e| Failure::from(Error::from(e)))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| {
            Failure::from(Error::Parse {
                location: format!("{}:{}", path.display(), i + 1),
                message: format!("'{t}' is not a number"),
            })
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(usage(format!("{} contains no observations", path.display())));
    }
    Ok(Sample::new(values, looks)?)
}

fn check_levels(levels: &[f64]) -> CliResult<()> {
    if levels.is_empty() || levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(usage("levels must lie in (0, 1)"));
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::from(Error::from(e))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::from(Error::from(e)))
        }
    }
}

fn cmd_fit(file: &Path, looks: f64) -> CliResult<(String, u8)> {
    let s = read_sample(file, looks)?;
    let f = fit_ml(&s)?;
    let p = f.params;
    let text = format!(
        "alpha,gamma,mu,log_likelihood,converged,iterations,n\n{},{},{},{},{},{},{}\n",
        p.alpha(),
        p.gamma(),
        mu_from_params(&p),
        f.log_likelihood,
        f.converged,
        f.iterations,
        s.len()
    );
    Ok((text, if f.converged { 0 } else { 3 }))
}

fn cmd_distance(kinds: &[DistanceKind], p1: &G0Params, p2: &G0Params, method: EvalMethod) -> CliResult<String> {
    let mut text = String::from("kind,distance\n");
    for (k, d) in kinds.iter().zip(distances::distances(kinds, p1, p2, method)) {
        text.push_str(&format!("{k},{}\n", d?));
    }
    Ok(text)
}

fn cmd_test(file1: &Path, file2: &Path, looks: f64, kinds: &[DistanceKind], level: f64) -> CliResult<String> {
    check_levels(&[level])?;
    let (s1, s2) = (read_sample(file1, looks)?, read_sample(file2, looks)?);
    let fit = |s: &Sample| fit_ml(s).map_err(|e| Failure::from(Error::TestUnavailable(format!("fit failed: {e}"))));
    let (f1, f2) = (fit(&s1)?, fit(&s2)?);
    let outcomes = test_fits(kinds, &[level], &f1, s1.len(), &f2, s2.len(), EvalMethod::Auto)?;
    let mut text = String::from("kind,statistic,df,p_value,level,reject,m,n\n");
    for o in outcomes {
        let o = o?;
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            o.kind, o.statistic, DEGREES_OF_FREEDOM, o.p_value, o.level, o.reject, o.m, o.n
        ));
    }
    Ok(text)
}

fn cmd_simulate(args: &SimulateArgs, seed: u64, exec: Execution) -> CliResult<String> {
    check_levels(&args.levels)?;
    if args.max_reps == 0 {
        return Err(usage("--max-reps must be positive"));
    }
    let config = RunConfig {
        levels: args.levels.clone(),
        max_reps: args.max_reps,
        target_valid: (args.valid > 0).then_some(args.valid),
        seed,
    };
    let kinds = montecarlo::preset_kinds();
    let reports = match args.preset {
        Preset::Table5 | Preset::Table6 => {
            let specs = match (&args.cell, args.preset) {
                (Some(c), Preset::Table5) => {
                    let v = parse_reals(c, 3, "--cell")?;
                    vec![ScenarioSpec::null(G0Params::new(v[0], v[1], v[2])?, seed)?]
                }
                (Some(c), _) => {
                    let v = parse_reals(c, 3, "--cell")?;
                    vec![ScenarioSpec::equal_alpha(v[0], v[1], v[2], seed)?]
                }
                (None, Preset::Table5) => montecarlo::size_table_cells(seed)?,
                (None, _) => montecarlo::power_table_cells(seed)?,
            };
            let specs: Vec<_> = specs.into_iter().map(|s| s.with_window(args.window)).collect();
            montecarlo::run_cells(&specs, &kinds, &config, exec)?
        }
        Preset::Sizes => {
            let alphas = match &args.cell {
                Some(c) => parse_reals(c, 1, "--cell")?,
                None => montecarlo::PRESET_ALPHAS.to_vec(),
            };
            let mut all = Vec::new();
            for a in alphas {
                all.extend(montecarlo::run_sample_size_study(
                    a,
                    1.0,
                    2.0,
                    &montecarlo::PRESET_SIZES,
                    &config,
                    exec,
                )?);
            }
            all
        }
    };
    Ok(montecarlo::reports_csv(&reports))
}

fn run(cli: &Cli) -> CliResult<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let (text, code) = match &cli.command {
        Command::Fit { file, looks } => cmd_fit(file, *looks)?,
        Command::Distance {
            kind,
            p1,
            p2,
            beta,
            method,
        } => {
            let kinds = parse_kinds(kind, *beta)?;
            let method: EvalMethod = method.parse().map_err(|e: Error| usage(e.to_string()))?;
            let (p1, p2) = (parse_params(p1, "--p1")?, parse_params(p2, "--p2")?);
            (cmd_distance(&kinds, &p1, &p2, method)?, 0)
        }
        Command::Curve { kind, grid, method } => {
            let kind = parse_kinds(std::slice::from_ref(kind), DEFAULT_RENYI_BETA)?;
            if kind.len() != 1 {
                return Err(usage("curve takes exactly one kind"));
            }
            let method: EvalMethod = method.parse().map_err(|e: Error| usage(e.to_string()))?;
            let rows = distances::distance_curve(kind[0], &parse_grid(grid)?, &distances::curve_reference(), method)?;
            (distances::curve_csv(&rows), 0)
        }
        Command::Test {
            file1,
            file2,
            looks,
            kind,
            level,
        } => {
            let kinds = parse_kinds(kind, DEFAULT_RENYI_BETA)?;
            (cmd_test(file1, file2, *looks, &kinds, *level)?, 0)
        }
        Command::Simulate(args) => (cmd_simulate(args, cli.seed, exec)?, 0),
        Command::Analyze {
            raster,
            regions,
            looks,
            side,
            kind,
            levels,
        } => {
            check_levels(levels)?;
            let kinds = parse_kinds(kind, DEFAULT_RENYI_BETA)?;
            let r = image::load_raster(raster, *looks)?;
            let regs = image::load_regions(regions)?;
            let reports = image::analyze(&r, &regs, *side, &kinds, levels, exec)?;
            (image::reports_csv(&reports), 0)
        }
    };
    emit(&cli.out, &text)?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("g0stat: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
