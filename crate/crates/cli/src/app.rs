//! Argument handling and command dispatch for the `dynclass` binary.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dynclass_core::classify::{classify_system, ClassifySettings};
use dynclass_core::fixedpoints::{find_fixed_points, FixedPointOptions};
use dynclass_core::numerics::{jacobian, Complex64};
use dynclass_core::orbits::{find_periodic_orbits, OrbitOptions};
use dynclass_core::structure::{curl_magnitude, curl_to_gradient_ratio};
use dynclass_core::vectorfield::{builtin, default_bounds, parameters, MODEL_NAMES};
use dynclass_core::{Bounds, ParamMap, VectorField};
use serde_json::json;

use crate::json::{report_to_json, FixedPointJson, OrbitJson};
use crate::modeldsl::{compile, parse_model};
use crate::report::render_report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ANALYSIS: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dynclass", version, about = "Classify continuous-time dynamical systems dx/dt = F(x)")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full classification report.
    Classify(AnalysisArgs),
    /// Classification at a reduced budget (confidence capped at 0.8).
    Quick(AnalysisArgs),
    /// Multistart search for fixed points.
    FixedPoints(AnalysisArgs),
    /// Search for periodic orbits.
    Orbits(AnalysisArgs),
    /// Curl magnitude and curl/gradient ratio at a point.
    Curl(PointArgs),
    /// Exact Jacobian at a point.
    Jacobian(PointArgs),
    /// List the built-in models.
    Models {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Name of a built-in model (see `models`).
    #[arg(long)]
    builtin: Option<String>,
    /// Path to a `.fcm` model file.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[command(flatten)]
    source: Source,
    /// Parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Analysis box as "lo:hi,lo:hi,..."; required if the model has none.
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample points for the symmetry and curl statistics.
    #[arg(long)]
    samples: Option<usize>,
    /// Newton starts for the fixed-point search.
    #[arg(long)]
    starts: Option<usize>,
    /// Wall-clock limit for the orbit search, in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Skip the stable/unstable manifold check.
    #[arg(long)]
    no_manifolds: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct PointArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Evaluation point as "v1,v2,...".
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Analysis(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Analysis(_) => EXIT_ANALYSIS,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Analysis(m) => m,
        }
    }
}

fn analysis<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Analysis(e.to_string())
}

struct Loaded {
    field: VectorField,
    bounds: Option<Bounds>,
}

fn parse_overrides(items: &[String]) -> Result<BTreeMap<String, f64>, Failure> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got '{item}'")))?;
        let value: f64 = v
            .trim()
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite())
            .ok_or_else(|| Failure::Usage(format!("--set {k}: '{v}' is not a finite number")))?;
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

fn load(args: &ModelArgs) -> Result<Loaded, Failure> {
    let overrides = parse_overrides(&args.set)?;
    if let Some(name) = &args.source.builtin {
        let params: ParamMap = overrides;
        let field = builtin(name, &params).map_err(|e| Failure::Usage(e.to_string()))?;
        return Ok(Loaded { field, bounds: default_bounds(name).ok() });
    }
    let path = args.source.model.as_ref().expect("clap enforces one model source");
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let doc = parse_model(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let compiled = compile(&doc, &overrides).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(Loaded { field: compiled.field, bounds: compiled.bounds })
}

fn parse_reals(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Failure::Usage(format!("{what}: '{}' is not a finite number", s.trim())))
        })
        .collect()
}

/// Parses "lo:hi,lo:hi,...".
pub fn parse_bounds(text: &str) -> Result<Bounds, String> {
    let mut axes = Vec::new();
    for part in text.split(',') {
        let (lo, hi) = part
            .split_once(':')
            .ok_or_else(|| format!("--bounds: expected lo:hi, got '{}'", part.trim()))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("--bounds: '{}' is not a finite number", s.trim()))
        };
        axes.push((num(lo)?, num(hi)?));
    }
    Bounds::new(axes).map_err(|e| format!("--bounds: {e}"))
}

fn resolve_bounds(args: &AnalysisArgs, loaded: &Loaded) -> Result<Bounds, Failure> {
    let bounds = match &args.bounds {
        Some(text) => parse_bounds(text).map_err(Failure::Usage)?,
        None => loaded
            .bounds
            .clone()
            .ok_or_else(|| Failure::Usage("--bounds is required: the model file declares no bounds".into()))?,
    };
    if bounds.dim() != loaded.field.dim() {
        return Err(Failure::Usage(format!(
            "--bounds has {} axes but the model has {} states",
            bounds.dim(),
            loaded.field.dim()
        )));
    }
    Ok(bounds)
}

fn settings_for(args: &AnalysisArgs, base: ClassifySettings) -> Result<ClassifySettings, Failure> {
    let mut s = base;
    s.seed = args.seed;
    if let Some(n) = args.samples {
        s.n_samples = n;
    }
    if let Some(n) = args.starts {
        s.n_starts = n;
    }
    if let Some(t) = args.timeout {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Usage("--timeout must be a positive number of seconds".into()));
        }
        s.orbit_timeout = Some(t);
    }
    if args.no_manifolds {
        s.check_manifolds = false;
    }
    Ok(s)
}

fn with_threads<T>(threads: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    match threads {
        None => Ok(work()),
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Usage(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

fn complex(z: &Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

/// Shortest round-trip form without a trailing ".0" and without negative zero.
fn plain(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        x.to_string()
    }
}

fn run_analysis(which: &Command, args: &AnalysisArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let loaded = load(&args.model)?;
    let bounds = resolve_bounds(args, &loaded)?;
    let field = &loaded.field;
    match which {
        Command::Classify(_) | Command::Quick(_) => {
            let quick = matches!(which, Command::Quick(_));
            let base = if quick { ClassifySettings::quick() } else { ClassifySettings::default() };
            let settings = settings_for(args, base)?;
            let mut report = with_threads(args.threads, || classify_system(field, &bounds, &settings))?.map_err(analysis)?;
            if quick {
                report.confidence = report.confidence.min(0.8);
            }
            match args.format {
                Format::Text => {
                    for w in report.warnings() {
                        let _ = writeln!(err, "warning: {w}");
                    }
                    write!(out, "{}", render_report(&report)).map_err(analysis)?;
                }
                Format::Json => writeln!(out, "{}", report_to_json(&report)).map_err(analysis)?,
            }
        }
        Command::FixedPoints(_) => {
            let settings = settings_for(args, ClassifySettings::default())?;
            let opts = FixedPointOptions {
                n_starts: settings.n_starts,
                seed: settings.seed,
                hyper_tol: settings.thresholds.hyper_tol,
                ..FixedPointOptions::default()
            };
            let fps = with_threads(args.threads, || find_fixed_points(field, &bounds, &opts))?.map_err(analysis)?;
            match args.format {
                Format::Text => {
                    let mut text = format!("Fixed Points: {}\n", fps.len());
                    for p in &fps {
                        let loc: Vec<String> = p.location.iter().map(|x| format!("{x:.6}")).collect();
                        let eig: Vec<String> = p.eigenvalues.iter().map(complex).collect();
                        text.push_str(&format!(
                            "  • {} at [{}]  eigenvalues: {}\n",
                            p.kind.description(),
                            loc.join(", "),
                            eig.join(", ")
                        ));
                    }
                    out.write_all(text.as_bytes()).map_err(analysis)?;
                }
                Format::Json => {
                    let dto: Vec<FixedPointJson> = fps.iter().map(Into::into).collect();
                    writeln!(out, "{}", serde_json::to_string_pretty(&dto).map_err(analysis)?).map_err(analysis)?;
                }
            }
        }
        Command::Orbits(_) => {
            let settings = settings_for(args, ClassifySettings::default())?;
            let fp_opts = FixedPointOptions {
                n_starts: settings.n_starts,
                seed: settings.seed,
                hyper_tol: settings.thresholds.hyper_tol,
                ..FixedPointOptions::default()
            };
            let orbits = with_threads(args.threads, || {
                let fps = find_fixed_points(field, &bounds, &fp_opts)?;
                let opts = OrbitOptions {
                    n_trajectories: settings.n_trajectories,
                    max_period: settings.max_period,
                    seed: settings.seed,
                    timeout: settings.orbit_timeout,
                    known_fixed_points: fps.into_iter().map(|p| p.location).collect(),
                    integration: settings.integration,
                };
                find_periodic_orbits(field, &bounds, &opts)
            })?
            .map_err(analysis)?;
            match args.format {
                Format::Text => {
                    let mut text = format!("Periodic Orbits: {}\n", orbits.len());
                    for o in &orbits {
                        let m: Vec<String> = o.multipliers.iter().map(complex).collect();
                        let kind = if o.is_stable { "stable" } else { "unstable" };
                        text.push_str(&format!("  • period {:.6}, {kind}, multipliers: {}\n", o.period, m.join(", ")));
                    }
                    out.write_all(text.as_bytes()).map_err(analysis)?;
                }
                Format::Json => {
                    let dto: Vec<OrbitJson> = orbits.iter().map(Into::into).collect();
                    writeln!(out, "{}", serde_json::to_string_pretty(&dto).map_err(analysis)?).map_err(analysis)?;
                }
            }
        }
        _ => unreachable!("point and listing commands are dispatched elsewhere"),
    }
    Ok(())
}

fn run_point(jac: bool, args: &PointArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let loaded = load(&args.model)?;
    let point = parse_reals(&args.point, "--point")?;
    if point.len() != loaded.field.dim() {
        return Err(Failure::Usage(format!(
            "--point has {} coordinates but the model has {} states",
            point.len(),
            loaded.field.dim()
        )));
    }
    let text = if jac {
        let j = jacobian(&loaded.field, &point).map_err(analysis)?;
        match args.format {
            Format::Text => {
                let rows: Vec<String> = j
                    .to_rows()
                    .iter()
                    .map(|r| format!("[{}]", r.iter().map(|&x| plain(x)).collect::<Vec<_>>().join(", ")))
                    .collect();
                format!("[{}]", rows.join(", "))
            }
            Format::Json => json!({ "point": point, "jacobian": j.to_rows() }).to_string(),
        }
    } else {
        let curl = curl_magnitude(&loaded.field, &point).map_err(analysis)?;
        let ratio = curl_to_gradient_ratio(&loaded.field, &point).map_err(analysis)?;
        match args.format {
            Format::Text => format!("Curl magnitude: {curl:?}\nCurl/Gradient ratio: {ratio:?}"),
            Format::Json => json!({ "point": point, "curl": curl, "curl_gradient_ratio": ratio }).to_string(),
        }
    };
    writeln!(out, "{text}").map_err(analysis)
}

fn run_models(format: Format, out: &mut dyn Write) -> Result<(), Failure> {
    let mut entries = Vec::new();
    for name in MODEL_NAMES {
        let params = parameters(name).map_err(analysis)?;
        let bounds = default_bounds(name).map_err(analysis)?;
        entries.push((name, params, bounds));
    }
    let text = match format {
        Format::Text => entries
            .iter()
            .map(|(name, params, bounds)| {
                let p: Vec<String> = params.iter().map(|(k, v)| format!("{k}={}", plain(*v))).collect();
                let b: Vec<String> = bounds.axes().iter().map(|(lo, hi)| format!("{}:{}", plain(*lo), plain(*hi))).collect();
                format!("{name}\tdim={}\tbounds={}\tparams: {}", bounds.dim(), b.join(","), p.join(", "))
            })
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Json => {
            let list: Vec<_> = entries
                .iter()
                .map(|(name, params, bounds)| {
                    let p: serde_json::Map<String, serde_json::Value> =
                        params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
                    json!({ "name": name, "dim": bounds.dim(), "params": p, "bounds": bounds.axes() })
                })
                .collect();
            serde_json::to_string_pretty(&list).map_err(analysis)?
        }
    };
    writeln!(out, "{text}").map_err(analysis)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Classify(a) | Command::Quick(a) | Command::FixedPoints(a) | Command::Orbits(a) => {
            run_analysis(&cli.command, a, out, err)
        }
        Command::Curl(a) => run_point(false, a, out),
        Command::Jacobian(a) => run_point(true, a, out),
        Command::Models { format } => run_models(*format, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}
