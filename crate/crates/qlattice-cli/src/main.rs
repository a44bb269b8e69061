//! Command-line front end: builds operators, runs the analyses, and
//! writes CSV/JSON artifacts. Every command is deterministic for a
//! fixed configuration, independent of the thread count.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use qlattice::model::{LatticeOperator, Word};
use qlattice::{export, metric, phase, pseudospectrum, spectral};
use qlattice::{Error, ErrorCategory};

#[derive(Parser)]
#[command(
    name = "qlattice",
    version,
    about = "Spectral toolkit for word-indexed tridiagonal lattice operators",
    after_help = "Relative --out paths resolve against QLATTICE_OUTPUT_DIR when it is set.\n\
                  Exit codes: 0 success, 1 domain or input error, 2 numerical failure."
)]
struct Cli {
    /// Worker threads for grids and word tables (0 uses all cores);
    /// results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build one operator and write its matrix.
    Matrix(MatrixArgs),
    /// Sweep the coupling over a range and track eigenvalue
    /// trajectories.
    Sweep(SweepArgs),
    /// Split one spectrum into real eigenvalues and ghost pairs.
    Classify(ClassifyArgs),
    /// Sample the resolvent field on a grid and report sublevel-set
    /// components.
    Pseudospec(PseudospecArgs),
    /// Reconstruct the weighted metric, optionally factoring and
    /// Hermitizing.
    Metric(MetricArgs),
    /// Project onto the real spectral sector, optionally Hermitizing
    /// the reduced block.
    Project(ProjectArgs),
    /// Classify every word of half-length n/2 at couplings -t0 and
    /// +t0.
    PhaseTable(PhaseTableArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct OperatorArgs {
    /// Matrix dimension (at least 2).
    #[arg(long)]
    n: usize,
    /// Coupling word over {o,e}, length n/2.
    #[arg(long)]
    word: String,
    /// Coupling strength, |t| < 1.
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    operator: OperatorArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Matrix dimension (at least 2).
    #[arg(long)]
    n: usize,
    /// Coupling word over {o,e}, length n/2.
    #[arg(long)]
    word: String,
    /// Left end of the coupling range.
    #[arg(long, allow_negative_numbers = true)]
    t_min: f64,
    /// Right end of the coupling range.
    #[arg(long, allow_negative_numbers = true)]
    t_max: f64,
    /// Number of samples, endpoints included (at least 2).
    #[arg(long)]
    steps: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    operator: OperatorArgs,
    /// Absolute imaginary-part tolerance for calling an eigenvalue
    /// real.
    #[arg(long, default_value_t = spectral::DEFAULT_TOL_ABS)]
    tol_abs: f64,
    /// Relative tolerance, scaled by the operator norm.
    #[arg(long, default_value_t = spectral::DEFAULT_TOL_REL)]
    tol_rel: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PseudospecArgs {
    #[command(flatten)]
    operator: OperatorArgs,
    /// Window and resolution: re_min re_max im_min im_max nx ny.
    #[arg(
        long,
        num_args = 6,
        allow_negative_numbers = true,
        default_values_t = [-1.5, 1.5, -1.5, 1.5, 201.0, 201.0]
    )]
    grid: Vec<f64>,
    /// Descending sublevel thresholds, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1e-1,1e-2,1e-3,1e-4,1e-5,1e-6,1e-7,1e-8"
    )]
    ladder: Vec<f64>,
    /// Also write level-line polylines (JSON) to this path.
    #[arg(long)]
    contours: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MetricArgs {
    #[command(flatten)]
    operator: OperatorArgs,
    /// Positive eigenvector weights, comma separated; all ones when
    /// omitted.
    #[arg(long, value_delimiter = ',')]
    kappa: Option<Vec<f64>>,
    /// Factor the metric and map the operator through the similarity.
    #[arg(long)]
    hermitize: bool,
    /// Factorization used with --hermitize.
    #[arg(long, value_enum, default_value_t = FactorChoice::PrincipalRoot)]
    factorization: FactorChoice,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FactorChoice {
    PrincipalRoot,
    Triangular,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    operator: OperatorArgs,
    /// Hermitize the reduced block with its unit-weight metric.
    #[arg(long)]
    hermitize: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PhaseTableArgs {
    /// Matrix dimension (at least 2).
    #[arg(long)]
    n: usize,
    /// Probe coupling, 0 < t0 < 1; words are classified at -t0 and
    /// +t0.
    #[arg(long)]
    t0: f64,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(e) => match e.category() {
            ErrorCategory::Domain => 1,
            ErrorCategory::Numerical => 2,
        },
        None => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Matrix(args) => matrix(args),
        Command::Sweep(args) => sweep(args),
        Command::Classify(args) => classify(args),
        Command::Pseudospec(args) => pseudospec(args),
        Command::Metric(args) => metric_cmd(args),
        Command::Project(args) => project(args),
        Command::PhaseTable(args) => phase_table(args),
    }
}

/// Builds the operator after range-checking the coupling. |t| >= 1 is
/// rejected; |t| > 0.5 earns a warning because couplings beyond the
/// half-way point leave the regime the defaults are tuned for.
fn build_operator(args: &OperatorArgs) -> anyhow::Result<LatticeOperator> {
    check_coupling(args.t)?;
    let word = Word::from_str(&args.word)?;
    Ok(LatticeOperator::build(args.n, &word, args.t)?)
}

fn check_coupling(t: f64) -> anyhow::Result<()> {
    if !t.is_finite() || t.abs() >= 1.0 {
        bail!("coupling t must satisfy |t| < 1, got {t}");
    }
    if t.abs() > spectral::LARGE_COUPLING_T {
        eprintln!("warning: |t| = {} exceeds 0.5; results are kept but flagged large-coupling", t.abs());
    }
    Ok(())
}

fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os("QLATTICE_OUTPUT_DIR") {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(output: &OutputArgs, content: &str) -> anyhow::Result<()> {
    write_artifact(output.out.as_deref(), content)
}

fn write_artifact(out: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let path = resolve_out(path);
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .with_context(|| format!("creating {}", parent.display()))?;
                }
            }
            std::fs::write(&path, content)
                .with_context(|| format!("writing {}", path.display()))
        }
    }
}

fn matrix(args: MatrixArgs) -> anyhow::Result<()> {
    let op = build_operator(&args.operator)?;
    let content = match args.output.format {
        Format::Json => export::matrix_json(&op),
        Format::Csv => export::matrix_csv(&op),
    };
    emit(&args.output, &content)
}

fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    check_coupling(args.t_min)?;
    check_coupling(args.t_max)?;
    if args.steps < 2 {
        bail!("--steps must be at least 2, got {}", args.steps);
    }
    if !(args.t_min < args.t_max) {
        bail!("--t-min must be below --t-max");
    }
    let word = Word::from_str(&args.word)?;
    let span = args.t_max - args.t_min;
    let t_grid: Vec<f64> = (0..args.steps)
        .map(|i| args.t_min + span * i as f64 / (args.steps - 1) as f64)
        .collect();
    let result = spectral::sweep(args.n, &word, &t_grid)?;
    let content = match args.output.format {
        Format::Json => export::sweep_json(args.n, &word, &result),
        Format::Csv => export::sweep_csv(&result),
    };
    emit(&args.output, &content)
}

fn classify(args: ClassifyArgs) -> anyhow::Result<()> {
    let op = build_operator(&args.operator)?;
    if !(args.tol_abs > 0.0) || args.tol_rel < 0.0 {
        bail!("tolerances must satisfy tol_abs > 0 and tol_rel >= 0");
    }
    let spectrum = spectral::eigenvalues(&op)?;
    let classification =
        spectral::classify(&spectrum, args.tol_abs, args.tol_rel, op.frobenius_norm())?;
    let content = match args.output.format {
        Format::Json => export::classification_json(&op, &classification),
        Format::Csv => export::classification_csv(&classification),
    };
    emit(&args.output, &content)
}

fn pseudospec(args: PseudospecArgs) -> anyhow::Result<()> {
    let op = build_operator(&args.operator)?;
    let [re_min, re_max, im_min, im_max, nx, ny] = args.grid[..] else {
        bail!("--grid takes exactly six values");
    };
    let as_count = |x: f64, name: &str| -> anyhow::Result<usize> {
        if x.fract() != 0.0 || x < 0.0 {
            bail!("--grid {name} must be a nonnegative integer, got {x}");
        }
        Ok(x as usize)
    };
    let grid = pseudospectrum::GridSpec::new(
        re_min,
        re_max,
        im_min,
        im_max,
        as_count(nx, "nx")?,
        as_count(ny, "ny")?,
    )?;
    let field = pseudospectrum::resolvent_field(&op, &grid);
    let content = match args.output.format {
        Format::Json => {
            let report = pseudospectrum::component_report(&op, &field, &args.ladder)?;
            export::pseudospec_json(&op, &field, &report)
        }
        Format::Csv => export::field_csv(&field),
    };
    emit(&args.output, &content)?;
    if let Some(contour_path) = &args.contours {
        let contours = export::contours_json(&op, &field, &args.ladder);
        write_artifact(Some(contour_path), &contours)?;
    }
    Ok(())
}

fn metric_cmd(args: MetricArgs) -> anyhow::Result<()> {
    let op = build_operator(&args.operator)?;
    let kappa = args.kappa.unwrap_or_else(|| vec![1.0; op.n()]);
    let solution = metric::metric_from_weights(&op, &kappa)?;
    let content = if args.hermitize {
        let method = match args.factorization {
            FactorChoice::PrincipalRoot => metric::Factorization::PrincipalRoot,
            FactorChoice::Triangular => metric::Factorization::Triangular,
        };
        let omega = metric::factor_metric_with(&solution.theta, method)?;
        let hermitization = metric::hermitize(&op, &omega)?;
        match args.output.format {
            Format::Json => export::hermitization_json(&op, &solution, &hermitization),
            Format::Csv => export::metric_csv(&solution),
        }
    } else {
        match args.output.format {
            Format::Json => export::metric_json(&op, &solution),
            Format::Csv => export::metric_csv(&solution),
        }
    };
    emit(&args.output, &content)
}

fn project(args: ProjectArgs) -> anyhow::Result<()> {
    let op = build_operator(&args.operator)?;
    let model = phase::real_subspace_projector(&op)?;
    let hermitization = if args.hermitize {
        Some(phase::reduced_hermitize(&model)?)
    } else {
        None
    };
    let content = match args.output.format {
        Format::Json => export::project_json(&op, &model, hermitization.as_ref()),
        Format::Csv => export::project_csv(&model),
    };
    emit(&args.output, &content)
}

fn phase_table(args: PhaseTableArgs) -> anyhow::Result<()> {
    let rows = phase::classify_all_words(args.n, args.t0)?;
    let content = match args.output.format {
        Format::Json => export::phase_table_json(args.n, args.t0, &rows),
        Format::Csv => export::phase_table_csv(&rows),
    };
    emit(&args.output, &content)
}
