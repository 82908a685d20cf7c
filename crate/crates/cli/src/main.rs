use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use monodyn_core::degrees::{
    asymptotics_report, degree_table, DegreeError, MonomialCorrespondence,
};
use monodyn_core::ensemble::{run_ensemble, run_sample, Check, EnsembleConfig};
use monodyn_core::heights::{
    orbit_heights_bruteforce, orbit_heights_fast, HeightError, HeightSeries, MonomialPoint,
    DEFAULT_CYCLE_CAP,
};
use monodyn_core::spectral::{default_precision, dynamical_degrees, SpectralError};
use monodyn_core::{IntMatrix, LinalgError};

/// Degrees, dynamical degrees and orbit heights of monomial correspondences.
#[derive(Parser, Debug)]
#[command(name = "monodyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dynamical degrees λ_0..λ_n of (M, N).
    Dyndeg {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        out: Output,
    },
    /// Table of deg_k(f^p), or the growth-constant fit for one index with -l.
    Degrees {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 10)]
        pmax: u64,
        /// Only this row of the table.
        #[arg(short = 'k', conflicts_with = "l")]
        k: Option<usize>,
        /// Fit deg_l(f^p) ≈ C λ_l^p instead of printing the table.
        #[arg(short = 'l')]
        l: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Heights along the orbit of a point.
    Orbit {
        #[command(flatten)]
        pair: Pair,
        /// Point, e.g. "2 3", "-2/3, 3" or '["-2/3", 3]'.
        #[arg(short = 'x')]
        point: String,
        #[arg(long, default_value_t = 20)]
        pmax: u64,
        /// Expand the cycles point by point instead of using P.
        #[arg(long, conflicts_with = "check")]
        bruteforce: bool,
        /// Run both paths and compare.
        #[arg(long)]
        check: bool,
        /// Largest cycle the point-by-point path may build.
        #[arg(long, default_value_t = DEFAULT_CYCLE_CAP)]
        cap: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Consistency checks over seeded random pairs.
    Ensemble {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Entries are uniform in [-bound, bound].
        #[arg(long, default_value_t = 3)]
        bound: i64,
        #[arg(long, default_value_t = 10)]
        pmax: u64,
        /// Comma-separated subset of degree-ratio, duality, integrality, decay, membership.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "degree-ratio,duality,integrality"
        )]
        checks: Vec<Check>,
        #[command(flatten)]
        out: Output,
    },
    /// Consistency checks on a single pair.
    Check {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 10)]
        pmax: u64,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "degree-ratio,duality,integrality,decay,membership"
        )]
        checks: Vec<Check>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args, Debug)]
struct Pair {
    /// Matrix M as "2 1; 1 1" or [[2,1],[1,1]].
    #[arg(short = 'M')]
    m: String,
    /// Matrix N, same formats as M.
    #[arg(short = 'N')]
    n: String,
}

#[derive(Args, Debug)]
struct Output {
    /// Working precision in bits; defaults to $MONODYN_PRECISION or 128.
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write here instead of standard output.
    #[arg(short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
enum Failure {
    /// Exit 1: a check or the ensemble failed, or a computation gave up.
    Failed(String),
    /// Exit 2.
    Singular(String),
    /// Exit 3.
    Input(String),
    /// Exit 4.
    Integrality(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Failed(_) => 1,
            Failure::Singular(_) => 2,
            Failure::Input(_) => 3,
            Failure::Integrality(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Failed(m)
            | Failure::Singular(m)
            | Failure::Input(m)
            | Failure::Integrality(m) => m,
        }
    }
}

impl From<LinalgError> for Failure {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular => Failure::Singular(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Singular { .. } => Failure::Singular(e.to_string()),
            SpectralError::PrecisionTooLow(_)
            | SpectralError::DimensionMismatch { .. }
            | SpectralError::IndexOutOfRange { .. } => Failure::Input(e.to_string()),
            _ => Failure::Failed(e.to_string()),
        }
    }
}

impl From<DegreeError> for Failure {
    fn from(e: DegreeError) -> Self {
        match e {
            DegreeError::Singular { .. } => Failure::Singular(e.to_string()),
            DegreeError::NonIntegral { .. } | DegreeError::NonPositive { .. } => {
                Failure::Integrality(e.to_string())
            }
            DegreeError::Spectral(s) => s.into(),
            DegreeError::DimensionMismatch { .. }
            | DegreeError::IndexOutOfRange { .. }
            | DegreeError::ZeroIterate
            | DegreeError::UnsupportedDimension(_) => Failure::Input(e.to_string()),
            DegreeError::Polytope(_) => Failure::Failed(e.to_string()),
        }
    }
}

impl From<HeightError> for Failure {
    fn from(e: HeightError) -> Self {
        match e {
            HeightError::Singular => Failure::Singular(e.to_string()),
            HeightError::Spectral(s) => s.into(),
            HeightError::Parse(_)
            | HeightError::ZeroCoordinate(_)
            | HeightError::DimensionMismatch { .. }
            | HeightError::ZeroIterate => Failure::Input(e.to_string()),
            HeightError::Factor(_) | HeightError::CycleTooLarge { .. } => {
                Failure::Failed(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Failed(format!("cannot write output: {e}"))
    }
}

fn correspondence(pair: &Pair) -> Result<MonomialCorrespondence, Failure> {
    let m: IntMatrix = pair.m.parse()?;
    let n: IntMatrix = pair.n.parse()?;
    Ok(MonomialCorrespondence::new(m, n)?)
}

fn precision(out: &Output) -> u32 {
    out.precision.unwrap_or_else(default_precision)
}

/// Writes to a temporary file next to `path` and renames it into place, so a
/// failed run leaves no partial file.
fn emit(out: &Output, text: &str) -> Result<(), Failure> {
    match &out.output {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = path
                .parent()
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.persist(path).map_err(|e| e.error)?;
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn series_json(s: &HeightSeries) -> Value {
    let mut v = s.summary();
    v["heights"] = json!(s.values);
    v
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Dyndeg { pair, out } => {
            let f = correspondence(&pair)?;
            let report = dynamical_degrees(f.m(), f.n(), precision(&out))?;
            let text = match out.format {
                Format::Json => pretty(&json!(report)),
                Format::Csv => {
                    let mut s = String::from("k,lambda\n");
                    for (k, l) in report.lambdas_f64().iter().enumerate() {
                        s.push_str(&format!("{k},{l:e}\n"));
                    }
                    s
                }
            };
            emit(&out, &text)
        }
        Command::Degrees {
            pair,
            pmax,
            k,
            l,
            out,
        } => {
            let f = correspondence(&pair)?;
            if let Some(l) = l {
                let report = asymptotics_report(&f, l, pmax, precision(&out))?;
                let text = match out.format {
                    Format::Json => pretty(&json!(report)),
                    Format::Csv => {
                        let mut s = String::from("p,C\n");
                        for (i, c) in report.c_estimates.iter().enumerate() {
                            s.push_str(&format!("{},{c:e}\n", i + 1));
                        }
                        s
                    }
                };
                return emit(&out, &text);
            }
            let table = degree_table(&f, pmax)?;
            let text = match (k, out.format) {
                (None, Format::Json) => pretty(&json!(table)),
                (None, Format::Csv) => table.to_csv(),
                (Some(k), _) if k > f.dim() => {
                    return Err(Failure::Input(format!(
                        "k = {k} exceeds the dimension {}",
                        f.dim()
                    )))
                }
                (Some(k), Format::Json) => {
                    let row: Vec<String> = table.row(k).iter().map(ToString::to_string).collect();
                    pretty(&json!({ "k": k, "p_max": pmax, "deg": row }))
                }
                (Some(k), Format::Csv) => {
                    let mut s = String::from("p,k,deg\n");
                    for (i, d) in table.row(k).iter().enumerate() {
                        s.push_str(&format!("{},{k},{d}\n", i + 1));
                    }
                    s
                }
            };
            emit(&out, &text)
        }
        Command::Orbit {
            pair,
            point,
            pmax,
            bruteforce,
            check,
            cap,
            out,
        } => {
            let f = correspondence(&pair)?;
            let x: MonomialPoint = point.parse()?;
            let prec = precision(&out);
            if check {
                let fast = orbit_heights_fast(&f, &x, pmax, prec)?;
                let slow = orbit_heights_bruteforce(&f, &x, pmax, prec, cap)?;
                let worst = fast
                    .values
                    .iter()
                    .zip(&slow.values)
                    .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max);
                let holds = worst <= 1e-9;
                let report = json!({
                    "identity": if holds { "identity holds" } else { "identity fails" },
                    "max_relative_difference": worst,
                    "fast": series_json(&fast),
                    "bruteforce": series_json(&slow),
                });
                let text = match out.format {
                    Format::Json => pretty(&report),
                    Format::Csv => {
                        let mut s = String::from("p,fast,bruteforce\n");
                        for (i, (a, b)) in fast.values.iter().zip(&slow.values).enumerate() {
                            s.push_str(&format!("{},{a:e},{b:e}\n", i + 1));
                        }
                        s
                    }
                };
                emit(&out, &text)?;
                return if holds {
                    Ok(())
                } else {
                    Err(Failure::Failed(format!(
                        "fast and point-by-point heights differ by {worst:e}"
                    )))
                };
            }
            let series = if bruteforce {
                orbit_heights_bruteforce(&f, &x, pmax, prec, cap)?
            } else {
                orbit_heights_fast(&f, &x, pmax, prec)?
            };
            let text = match out.format {
                Format::Json => pretty(&series_json(&series)),
                Format::Csv => series.to_csv(),
            };
            emit(&out, &text)
        }
        Command::Ensemble {
            seed,
            samples,
            dim,
            bound,
            pmax,
            checks,
            out,
        } => {
            let config = EnsembleConfig {
                seed,
                samples,
                dim,
                bound,
                p_max: pmax,
                precision: precision(&out),
                checks,
            };
            let report = run_ensemble(&config).map_err(|e| Failure::Input(e.to_string()))?;
            let text = match out.format {
                Format::Json => pretty(&json!(report)),
                Format::Csv => {
                    let mut s = String::from("index,check,pass\n");
                    for sample in &report.samples {
                        for o in &sample.outcomes {
                            s.push_str(&format!("{},{},{}\n", sample.index, o.check, o.pass));
                        }
                    }
                    s
                }
            };
            emit(&out, &text)?;
            if report.pass {
                Ok(())
            } else {
                Err(Failure::Failed(format!(
                    "{} of {} samples failed",
                    report.failures, samples
                )))
            }
        }
        Command::Check {
            pair,
            pmax,
            checks,
            out,
        } => {
            let f = correspondence(&pair)?;
            if pmax < 2 {
                return Err(Failure::Input("p_max must be at least 2".into()));
            }
            let config = EnsembleConfig {
                seed: 0,
                samples: 1,
                dim: f.dim(),
                bound: 1,
                p_max: pmax,
                precision: precision(&out),
                checks,
            };
            let report = run_sample(0, &f, &config);
            let text = match out.format {
                Format::Json => pretty(&json!(report)),
                Format::Csv => {
                    let mut s = String::from("check,pass\n");
                    for o in &report.outcomes {
                        s.push_str(&format!("{},{}\n", o.check, o.pass));
                    }
                    s
                }
            };
            emit(&out, &text)?;
            if report.pass() {
                Ok(())
            } else {
                Err(Failure::Failed("some checks failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("monodyn: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
