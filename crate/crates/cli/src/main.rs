//! `ustat`: run the Monte-Carlo experiment, query the θ oracles, check the
//! sampling designs and draw figures.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 runtime or numeric error.

mod grid;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ustat_core::distributions::{theta_oracle, DistributionSpec};
use ustat_core::harness::{
    estimate_tj_curves, run_experiment, CellPlan, ExperimentConfig, NRule, SchemeChoice, Statistic,
};
use ustat_core::report::{parse_results_csv, render_svg, results_csv, tj_csv};
use ustat_core::sampling::{
    compare_moments, empirical_selection_moments, exact_selection_moments, verify_covariance_bound,
    SamplingScheme, SchemeKind,
};
use ustat_core::{Error, IndexSpace, Kernel, StreamKey};

const DEFAULT_SEED: u64 = 20_250_101;

#[derive(Debug, Parser)]
#[command(name = "ustat", version, about = "Incomplete U-statistics under heavy tails")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the L1-distance experiment and write one CSV row per cell.
    Simulate(SimulateArgs),
    /// Print θ = E|X1 - X2| for a distribution.
    Theta(ThetaArgs),
    /// Compare empirical selection-count moments with their closed forms.
    VerifySampling(VerifyArgs),
    /// Average the four truncation error terms over replications.
    Decompose(DecomposeArgs),
    /// Draw L1 distance against n from a results CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Degrees of freedom, comma separated.
    #[arg(long, default_value = "1.5,1.8,2.1,4.1")]
    nu: String,
    /// Sample sizes as `start:stop:step` or a comma list.
    #[arg(long, default_value = "50:400:50")]
    n: String,
    #[arg(long, default_value = "complete,swor,swr,bern")]
    schemes: String,
    #[arg(long = "n-rules", default_value = "n32,n,n23")]
    n_rules: String,
    /// Replications per cell.
    #[arg(long = "M", default_value_t = 12_000)]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long = "theta-tol", default_value_t = 1e-10)]
    theta_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    T,
    Uniform,
    Normal,
    Pareto,
}

#[derive(Debug, Args)]
struct ThetaArgs {
    #[arg(long, value_enum)]
    dist: Family,
    /// Degrees of freedom (t only).
    #[arg(long)]
    nu: Option<f64>,
    /// Pareto shape.
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    /// Pareto scale.
    #[arg(long, default_value_t = 1.0)]
    xm: f64,
    #[arg(long, default_value = "absdiff")]
    kernel: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "l", default_value_t = 2)]
    ell: usize,
    /// Budget N (real for Bernoulli sampling).
    #[arg(long = "N")]
    budget: f64,
    #[arg(long)]
    scheme: String,
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long)]
    nu: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    scheme: String,
    #[arg(long = "n-rule")]
    n_rule: String,
    #[arg(long = "M", default_value_t = 2000)]
    m: usize,
    /// Truncation levels: `lo:hi:geometric`, `start:stop:step` or a list.
    #[arg(long = "c-grid", default_value = "1:64:geometric")]
    c_grid: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long = "theta-tol", default_value_t = 1e-10)]
    theta_tol: f64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Only draw the panel for this ν.
    #[arg(long)]
    nu: Option<f64>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

fn is_usage(e: &Error) -> bool {
    match e {
        Error::Cell { source, .. } => is_usage(source),
        Error::Quadrature(_) | Error::NonFinite(_) | Error::Fit(_) | Error::CenterUnset => false,
        _ => true,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if is_usage(&e) {
            Failure::Usage(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Opens `path` for writing before any work starts, so an unwritable
/// destination fails fast.
struct Output {
    path: PathBuf,
    file: fs::File,
}

impl Output {
    fn create(path: &Path) -> CliResult<Self> {
        let file = fs::File::create(path)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    fn finish(mut self, contents: &str) -> CliResult<()> {
        self.file
            .write_all(contents.as_bytes())
            .and_then(|()| self.file.sync_all())
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", self.path.display())))
    }
}

/// `USTAT_THREADS` caps the worker count; results do not depend on it.
fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var("USTAT_THREADS") {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => Err(usage(format!("USTAT_THREADS must be a positive integer, got `{v}`"))),
        },
        _ => Ok(None),
    }
}

fn fmt_threads(t: Option<usize>) -> String {
    t.map_or_else(|| "auto".into(), |k| k.to_string())
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn simulate(args: SimulateArgs) -> CliResult<()> {
    let config = ExperimentConfig {
        nu_list: grid::parse_list(&args.nu, "nu").map_err(usage)?,
        n_grid: grid::parse_int_grid(&args.n).map_err(usage)?,
        replications: args.m,
        schemes: grid::parse_list::<SchemeChoice>(&args.schemes, "scheme").map_err(usage)?,
        n_rules: grid::parse_list::<NRule>(&args.n_rules, "N rule").map_err(usage)?,
        root_seed: args.seed,
        theta_tol: args.theta_tol,
        threads: threads_from_env()?,
    };
    eprintln!(
        "simulate: nu={} n={} schemes={} n_rules={} M={} seed={} theta_tol={:e} threads={} out={}",
        join(&config.nu_list),
        join(&config.n_grid),
        join(&config.schemes),
        join(&config.n_rules),
        config.replications,
        config.root_seed,
        config.theta_tol,
        fmt_threads(config.threads),
        args.out.display()
    );
    config.validate()?;
    let out = Output::create(&args.out)?;
    let rows = run_experiment(&config)?;
    out.finish(&results_csv(&rows))?;
    eprintln!("simulate: wrote {} rows", rows.len());
    Ok(())
}

/// `x` with 10 significant digits.
fn ten_digits(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..10).contains(&mag) {
        format!("{:.*}", (9 - mag).max(0) as usize, x)
    } else {
        format!("{x:.9e}")
    }
}

fn theta(args: ThetaArgs) -> CliResult<()> {
    let spec = match args.dist {
        Family::T => DistributionSpec::StudentT {
            nu: args.nu.ok_or_else(|| usage("--dist t needs --nu"))?,
        },
        Family::Uniform => DistributionSpec::Uniform01,
        Family::Normal => DistributionSpec::StandardNormal,
        Family::Pareto => DistributionSpec::Pareto {
            alpha: args.alpha,
            xm: args.xm,
        },
    };
    eprintln!("theta: dist={spec} kernel={} tol={:e}", args.kernel, args.tol);
    let kernel = Kernel::by_name(&args.kernel)?;
    let value = theta_oracle(&spec, &kernel, args.tol)?;
    println!("{}", ten_digits(value));
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn verify_sampling(args: VerifyArgs) -> CliResult<()> {
    let kind: SchemeKind = args.scheme.parse().map_err(|_| usage(format!("unknown scheme `{}`", args.scheme)))?;
    eprintln!(
        "verify-sampling: n={} l={} N={} scheme={} draws={} seed={}",
        args.n, args.ell, args.budget, kind, args.draws, args.seed
    );
    let space = IndexSpace::new(args.n, args.ell)?;
    let scheme = SamplingScheme::new(kind, args.budget);
    scheme.validate(&space)?;
    let exact = exact_selection_moments(&space, scheme)?;
    let bounds = verify_covariance_bound(&space, scheme)?;
    let mut rng = StreamKey::root(args.seed).rng();
    let emp = empirical_selection_moments(&space, scheme, args.draws, &mut rng)?;
    let z = 4.0;
    let agree = compare_moments(&emp, &exact, z);

    let c = emp.total;
    let avg = |v: &[(f64, f64)]| v.iter().map(|p| p.0).sum::<f64>() / v.len() as f64;
    let off_diag: Vec<(f64, f64)> = (0..c)
        .flat_map(|i| (0..c).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| emp.covariance[i * c + j])
        .collect();
    println!(
        "space: n={} l={} C={} scheme={} N={} p_n={:.6e}",
        args.n,
        args.ell,
        space.total(),
        kind,
        args.budget,
        bounds.pn
    );
    println!("{:<11} {:>14} {:>22} {:>10}", "moment", "exact", "empirical (average)", "max |z|");
    for (name, exact_v, emp_v, worst) in [
        ("mean", exact.mean, avg(&emp.mean), agree.mean_z),
        ("variance", exact.variance, avg(&emp.variance), agree.variance_z),
        ("covariance", exact.cov_distinct, avg(&off_diag), agree.covariance_z),
    ] {
        println!(
            "{name:<11} {exact_v:>14.6e} {emp_v:>22.6e} {worst:>10.2} {}",
            verdict(worst <= z)
        );
    }
    for b in &bounds.checks {
        let status = if b.applicable { verdict(b.passed) } else { "n/a" };
        println!(
            "bound {:<28} lhs {:.6e} rhs {:.6e} margin {:.6e} {status}",
            b.name, b.lhs, b.rhs, b.margin
        );
    }
    println!(
        "total count per draw: min {} max {}",
        emp.total_count_range.0, emp.total_count_range.1
    );
    let ok = agree.passed && bounds.all_passed();
    println!("result: {} (tolerance {z} standard errors, {} draws)", verdict(ok), args.draws);
    if ok {
        Ok(())
    } else {
        Err(Failure::Runtime("empirical moments disagree with closed forms".into()))
    }
}

fn decompose(args: DecomposeArgs) -> CliResult<()> {
    let statistic = Statistic::from_tokens(&args.scheme, &args.n_rule)?;
    if statistic == Statistic::Complete {
        return Err(usage("decompose needs a sampled scheme (swor, swr or bern)"));
    }
    let levels = grid::parse_real_grid(&args.c_grid).map_err(usage)?;
    let config = ExperimentConfig {
        nu_list: vec![args.nu],
        n_grid: vec![args.n],
        replications: args.m,
        root_seed: args.seed,
        theta_tol: args.theta_tol,
        threads: threads_from_env()?,
        ..ExperimentConfig::default()
    };
    let plan = CellPlan::new(args.nu, statistic, args.n)?;
    eprintln!(
        "decompose: nu={} n={} scheme={} n_rule={} N={} M={} c_grid={} ({} levels) seed={} theta_tol={:e} threads={} out={}",
        args.nu,
        args.n,
        statistic.scheme_token(),
        statistic.rule_token(),
        plan.budget,
        args.m,
        args.c_grid,
        levels.len(),
        args.seed,
        args.theta_tol,
        fmt_threads(config.threads),
        args.out.as_ref().map_or_else(|| "-".into(), |p| p.display().to_string())
    );
    let out = args.out.as_deref().map(Output::create).transpose()?;
    let rows = estimate_tj_curves(&config, args.nu, statistic, args.n, &levels)?;
    let text = tj_csv(&rows);
    match out {
        Some(out) => out.finish(&text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn plot(args: PlotArgs) -> CliResult<()> {
    eprintln!(
        "plot: in={} out={} nu={}",
        args.input.display(),
        args.out.display(),
        args.nu.map_or_else(|| "all".into(), |v| v.to_string())
    );
    let text = fs::read_to_string(&args.input)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", args.input.display())))?;
    let rows = parse_results_csv(&text)?;
    let svg = render_svg(&rows, args.nu)?;
    Output::create(&args.out)?.finish(&svg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Theta(a) => theta(a),
        Command::VerifySampling(a) => verify_sampling(a),
        Command::Decompose(a) => decompose(a),
        Command::Plot(a) => plot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(ten_digits(1.0 / 3.0), "0.3333333333");
        assert_eq!(ten_digits(3.412_638_735_370_281), "3.412638735");
        assert_eq!(ten_digits(std::f64::consts::FRAC_2_SQRT_PI), "1.128379167");
        assert_eq!(ten_digits(1234.5), "1234.500000");
        assert_eq!(ten_digits(2.5e-7), "2.500000000e-7");
    }

    #[test]
    fn error_classes() {
        assert_eq!(Failure::from(Error::Config("x".into())).code(), 1);
        assert_eq!(Failure::from(Error::Quadrature("x".into())).code(), 2);
        let nested = Error::Cell {
            cell: "c".into(),
            source: Box::new(Error::Validation("N too large".into())),
        };
        assert_eq!(Failure::from(nested).code(), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
