mod element;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thompson_approx::analysis::{
    certified_sup_distance, discreteness_floor, is_rotation, lift_alignment, ROTATION_TOL,
};
use thompson_approx::funcspec::{DEFAULT_POSITIVITY_TOL, DEFAULT_VALIDATION_GRID};
use thompson_approx::{approximate, AnalysisError, ApproxError, DiffeoSpec, Family, PLMap, PlError, Space};

use element::{space_name, ElementFile};

/// Exit status for a rejected input (invalid function or element).
const EXIT_INVALID: u8 = 2;
/// Exit status when the certificate does not prove the requested accuracy.
const EXIT_UNCERTIFIED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "thompson",
    version,
    about = "Approximate diffeomorphisms by Thompson group elements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build g with sup|f - g| < epsilon and certify it.
    Approximate(ApproximateArgs),
    /// Write A o B.
    Compose {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the inverse of A.
    Invert {
        a: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that an element file describes a member of F or T.
    Validate { file: PathBuf },
    /// Sample an element (and optionally a function) on a uniform grid.
    Sample(SampleArgs),
    /// Report where f' is farthest from every power of 2.
    Gap(GapArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Interval,
    Circle,
}

impl From<SpaceArg> for Space {
    fn from(s: SpaceArg) -> Space {
        match s {
            SpaceArg::Interval => Space::Interval,
            SpaceArg::Circle => Space::CircleLift,
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Target {
    /// Expression in x, e.g. "x + 0.3*x*(1-x)".
    #[arg(long = "f", value_name = "EXPR")]
    expr: Option<String>,
    /// Built-in family, e.g. bump:0.3, expwarp:1, rot:0.25, sine:0.2,0.3.
    #[arg(long, value_name = "NAME")]
    family: Option<String>,
}

#[derive(Args)]
struct ApproximateArgs {
    #[command(flatten)]
    target: Target,
    /// Defaults to the family's own space, or interval for expressions.
    #[arg(long, value_enum)]
    space: Option<SpaceArg>,
    #[arg(long)]
    epsilon: f64,
    /// Upper bound for f'; estimated from samples when absent.
    #[arg(long = "S", value_name = "S")]
    s: Option<f64>,
    /// Certification grid; default max(4096, 4 * pieces, 4 * n).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Report file; the report goes to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    file: PathBuf,
    #[arg(long, value_name = "N")]
    points: usize,
    /// Function to sample alongside, adding f and diff = f - g columns.
    #[arg(long = "f", value_name = "EXPR", conflicts_with = "family")]
    expr: Option<String>,
    #[arg(long, value_name = "NAME")]
    family: Option<String>,
    #[arg(long, value_name = "OUT")]
    csv: PathBuf,
}

#[derive(Args)]
struct GapArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long, value_enum)]
    space: Option<SpaceArg>,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
}

/// An error carrying its exit status. Anything else exits with 1.
#[derive(Debug)]
struct Exit {
    code: u8,
    message: String,
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

fn exit(code: u8, message: impl Into<String>) -> anyhow::Error {
    Exit {
        code,
        message: message.into(),
    }
    .into()
}

fn build_spec(expr: Option<&str>, family: Option<&str>, space: Option<Space>) -> Result<DiffeoSpec> {
    match (expr, family) {
        (Some(e), None) => Ok(DiffeoSpec::from_expr(e, space.unwrap_or(Space::Interval))?),
        (None, Some(name)) => {
            let family = Family::parse(name)?;
            let space = space.unwrap_or_else(|| family.natural_space());
            Ok(DiffeoSpec::from_family(family, space))
        }
        _ => bail!("exactly one of --f and --family is required"),
    }
}

fn spec_from_target(target: &Target, space: Option<SpaceArg>) -> Result<DiffeoSpec> {
    build_spec(target.expr.as_deref(), target.family.as_deref(), space.map(Space::from))
}

/// First few violations, then a count of the rest.
fn abbreviate<T: ToString>(items: &[T]) -> String {
    const SHOWN: usize = 5;
    let mut parts: Vec<String> = items.iter().take(SHOWN).map(ToString::to_string).collect();
    if items.len() > SHOWN {
        parts.push(format!("and {} more", items.len() - SHOWN));
    }
    parts.join("; ")
}

fn check_spec(f: &DiffeoSpec) -> Result<()> {
    let report = f.validate(DEFAULT_VALIDATION_GRID, DEFAULT_POSITIVITY_TOL);
    if report.is_ok() {
        Ok(())
    } else {
        Err(exit(
            EXIT_INVALID,
            format!(
                "{f} is not a valid {} diffeomorphism: {}",
                f.space,
                abbreviate(&report.violations)
            ),
        ))
    }
}

fn read_element(path: &Path) -> Result<PLMap> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file = ElementFile::parse(&text).with_context(|| format!("cannot parse {}", path.display()))?;
    file.into_map()
        .map_err(|e| exit(EXIT_INVALID, format!("{}: invalid element: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn group_error(e: PlError) -> anyhow::Error {
    match e {
        PlError::SpaceMismatch => exit(EXIT_INVALID, "elements live on different spaces"),
        other => exit(EXIT_INVALID, other.to_string()),
    }
}

#[derive(Serialize)]
struct CertificateReport {
    lower: f64,
    upper: f64,
    grid: usize,
    witness: f64,
}

#[derive(Serialize)]
struct ValidationReport {
    ok: bool,
    violations: Vec<String>,
}

#[derive(Serialize)]
struct Timing {
    construct_seconds: f64,
    certify_seconds: f64,
}

#[derive(Serialize)]
struct ReportFile {
    version: u64,
    function: String,
    space: &'static str,
    epsilon: f64,
    #[serde(rename = "S")]
    s: f64,
    #[serde(rename = "Delta")]
    delta_exponent: u32,
    n: u64,
    delta: f64,
    pieces: usize,
    certificate: CertificateReport,
    validation: ValidationReport,
    certified: bool,
    timing: Timing,
}

fn cmd_approximate(args: &ApproximateArgs) -> Result<()> {
    let mut f = spec_from_target(&args.target, args.space)?;
    if let Some(s) = args.s {
        f = f.with_derivative_bound(s);
    }
    if args.grid == Some(0) {
        bail!("--grid must be positive");
    }

    let start = Instant::now();
    let a = approximate(&f, args.epsilon).map_err(|e| match e {
        ApproxError::EpsilonOutOfRange(_) | ApproxError::ParameterOutOfRange(_) => anyhow::Error::new(e),
        ApproxError::ConstructionFailure(_) | ApproxError::Interp(_) | ApproxError::Pl(_) => {
            exit(EXIT_UNCERTIFIED, e.to_string())
        }
        _ => exit(EXIT_INVALID, e.to_string()),
    })?;
    let construct_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let grid = args.grid.unwrap_or_else(|| a.certification_grid());
    let cert = certified_sup_distance(&f, &a.g, grid)?;
    let certify_seconds = start.elapsed().as_secs_f64();

    let thompson = a.g.validate_thompson();
    let certified = cert.upper < args.epsilon;
    let report = ReportFile {
        version: element::VERSION,
        function: f.to_string(),
        space: space_name(f.space),
        epsilon: args.epsilon,
        s: a.params.s,
        delta_exponent: a.params.delta_exponent,
        n: a.params.n,
        delta: a.params.delta,
        pieces: a.g.pieces(),
        certificate: CertificateReport {
            lower: cert.lower,
            upper: cert.upper,
            grid: cert.grid_size,
            witness: cert.witness,
        },
        validation: ValidationReport {
            ok: thompson.is_ok(),
            violations: thompson.violations.iter().map(ToString::to_string).collect(),
        },
        certified,
        timing: Timing {
            construct_seconds,
            certify_seconds,
        },
    };

    write_file(&args.out, &element::to_json(&a.g))?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &args.report {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }

    if !thompson.is_ok() {
        return Err(exit(
            EXIT_INVALID,
            format!(
                "constructed map is not a group element: {}",
                abbreviate(&thompson.violations)
            ),
        ));
    }
    if !certified {
        return Err(exit(
            EXIT_UNCERTIFIED,
            format!(
                "certified upper bound {} is not below epsilon {}",
                cert.upper, args.epsilon
            ),
        ));
    }
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<()> {
    let g = read_element(path)?;
    let report = g.validate_thompson();
    let slopes: Vec<String> = report.slopes.iter().map(ToString::to_string).collect();
    println!("space: {}", space_name(g.space()));
    println!("pieces: {}", g.pieces());
    println!("slopes: [{}]", slopes.join(", "));
    for v in &report.violations {
        println!("violation: {v}");
    }
    if report.is_ok() {
        println!("ok");
        Ok(())
    } else {
        let group = match g.space() {
            Space::Interval => "F",
            Space::CircleLift => "T",
        };
        Err(exit(EXIT_INVALID, format!("not an element of {group}")))
    }
}

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    if args.points < 2 {
        bail!("--points must be at least 2");
    }
    let g = read_element(&args.file)?;
    let f = match (&args.expr, &args.family) {
        (None, None) => None,
        (e, fam) => {
            let f = build_spec(e.as_deref(), fam.as_deref(), Some(g.space()))?;
            check_spec(&f)?;
            Some(f)
        }
    };
    let shift = match &f {
        Some(f) => lift_alignment(f, &g)?,
        None => 0.0,
    };

    let mut out = csv::Writer::from_path(&args.csv).with_context(|| format!("cannot write {}", args.csv.display()))?;
    if f.is_some() {
        out.write_record(["x", "g", "f", "diff"])?;
    } else {
        out.write_record(["x", "g"])?;
    }
    let n = args.points;
    for i in 0..=n {
        let x = i as f64 / n as f64;
        let gx = g.eval_real(x)?;
        let mut row = vec![format_float(x), format_float(gx)];
        if let Some(f) = &f {
            let fx = f.value(x)? + shift;
            row.push(format_float(fx));
            row.push(format_float(fx - gx));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_gap(args: &GapArgs) -> Result<()> {
    if args.grid == 0 {
        bail!("--grid must be positive");
    }
    let f = spec_from_target(&args.target, args.space)?;
    check_spec(&f)?;
    if is_rotation(&f, ROTATION_TOL, args.grid) {
        return Err(exit(
            EXIT_INVALID,
            format!("rotation: {f} has f' = 1, so no positive floor exists"),
        ));
    }
    match discreteness_floor(&f, args.grid) {
        Ok(floor) => {
            println!("x_star = {}", floor.x_star);
            println!("mu = {}", floor.mu);
            Ok(())
        }
        Err(AnalysisError::Rotation) => Err(exit(EXIT_INVALID, format!("rotation: {f}"))),
        Err(e) => Err(e.into()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Approximate(args) => cmd_approximate(&args),
        Command::Compose { a, b, out } => {
            let (a, b) = (read_element(&a)?, read_element(&b)?);
            let c = a.compose(&b).map_err(group_error)?;
            write_file(&out, &element::to_json(&c))
        }
        Command::Invert { a, out } => {
            let inv = read_element(&a)?.invert().map_err(group_error)?;
            write_file(&out, &element::to_json(&inv))
        }
        Command::Validate { file } => cmd_validate(&file),
        Command::Sample(args) => cmd_sample(&args),
        Command::Gap(args) => cmd_gap(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<Exit>() {
            Some(x) => {
                eprintln!("error: {}", x.message);
                ExitCode::from(x.code)
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}
