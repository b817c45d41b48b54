//! `fovsynth`: classify a sensor, plan a query, export the partition atlas,
//! or run an oracle validation sweep.
//!
//! Exit codes: 0 success, 1 validation failure, 2 domain error, 3 the
//! planner disagrees with its own verification.

mod atlas;
mod validate;

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fovsynth::sensor::SensorError;
use fovsynth::synthesis::{Arc, SynthesisError, Window};
use fovsynth::verify::{check_feasible, trace_path};
use fovsynth::{PolarPoint, SensorCase, Synthesis};

pub const SCHEMA_VERSION: u32 = 1;

/// Default tolerance on bearings and lengths; `FOV_SYNTH_TOL` overrides it.
const DEFAULT_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "fovsynth", version, about = "Shortest unicycle paths that keep a landmark in an offset sensor cone")]
struct Cli {
    /// Read every input angle in degrees instead of radians.
    #[arg(long, global = true)]
    degrees: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the sensor case, edge bearings and applied reductions.
    Classify {
        #[command(flatten)]
        sensor: SensorArgs,
    },
    /// Plan the shortest path from Q to P and verify it.
    Plan {
        #[command(flatten)]
        sensor: SensorArgs,
        #[arg(long, default_value_t = 1.0)]
        rho_p: f64,
        #[arg(long)]
        q_rho: f64,
        #[arg(long, allow_hyphen_values = true)]
        q_psi: f64,
        #[arg(long)]
        json: bool,
    },
    /// Sample the optimal-word partition of an annulus and write it out.
    Partition {
        #[command(flatten)]
        sensor: SensorArgs,
        #[arg(long, default_value_t = 1.0)]
        rho_p: f64,
        #[arg(long, value_enum, default_value_t = Format::Svg)]
        out: Format,
        /// Annulus `rho_min,rho_max` (defaults to 0.05 ρ_P, 2 ρ_P).
        #[arg(long)]
        window: Option<String>,
        /// Samples `n_rho x n_psi`, e.g. `60x180`.
        #[arg(long, default_value = "60x180")]
        resolution: String,
        /// Destination file; standard output when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Compare the planner against the oracles on random queries.
    Validate {
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// `all` or a comma list of case names (frontal, borderline-frontal, side, borderline-side, lateral).
        #[arg(long, default_value = "all")]
        cases: String,
    },
}

#[derive(Args)]
struct SensorArgs {
    /// Cone offset Γ in [−π, π].
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    /// Cone aperture δ in (0, π/2].
    #[arg(long)]
    delta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Svg,
    Csv,
}

enum Failure {
    Domain(String),
    Inconsistent(String),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Domain(_) => 2,
            Failure::Inconsistent(_) => 3,
        }
    }
}

impl From<SynthesisError> for Failure {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::NoPath => Failure::Inconsistent(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

fn tolerance() -> Result<f64, Failure> {
    match std::env::var("FOV_SYNTH_TOL") {
        Err(_) => Ok(DEFAULT_TOL),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t >= 0.0 && t.is_finite() => Ok(t),
            _ => Err(Failure::Domain(format!("FOV_SYNTH_TOL={s:?} is not a non-negative number"))),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let angle = |x: f64| if cli.degrees { x * PI / 180.0 } else { x };
    let result = match cli.command {
        Command::Classify { sensor } => classify(angle(sensor.gamma), angle(sensor.delta)),
        Command::Plan {
            sensor,
            rho_p,
            q_rho,
            q_psi,
            json,
        } => plan(angle(sensor.gamma), angle(sensor.delta), rho_p, PolarPoint::new(q_rho, angle(q_psi)), json),
        Command::Partition {
            sensor,
            rho_p,
            out,
            window,
            resolution,
            output,
        } => partition(angle(sensor.gamma), angle(sensor.delta), rho_p, out, window, &resolution, output),
        Command::Validate { samples, seed, cases } => run_validate(samples, seed, &cases),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Domain(m) => eprintln!("error: {m}"),
                Failure::Inconsistent(m) => eprintln!("internal inconsistency: {m}"),
                Failure::Validation(m) => eprintln!("validation failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn classify(gamma: f64, delta: f64) -> Result<(), Failure> {
    let s = Synthesis::new(gamma, delta, 1.0)?;
    let g = &s.geom;
    let r = &s.reduction;
    println!("case          {}", g.case);
    println!("gamma         {gamma}");
    println!("delta         {delta}");
    println!("reduced gamma {}", g.gamma);
    println!("phi1          {}", g.phi1);
    println!("phi2          {}", g.phi2);
    println!("E1            {}", g.e1.label(1));
    println!("E2            {}", g.e2.label(2));
    println!("mirror        {}", r.mirror);
    println!("reverse time  {}", r.reverse_time);
    Ok(())
}

#[derive(Serialize)]
struct PointRecord {
    rho: f64,
    psi: f64,
}

impl From<PolarPoint> for PointRecord {
    fn from(p: PolarPoint) -> Self {
        PointRecord { rho: p.rho, psi: p.psi }
    }
}

#[derive(Serialize)]
struct ArcRecord {
    kind: &'static str,
    dir: Option<&'static str>,
    start: PointRecord,
    end: PointRecord,
    length: f64,
}

impl From<&Arc> for ArcRecord {
    fn from(a: &Arc) -> Self {
        ArcRecord {
            kind: a.symbol.kind_name(),
            dir: a.symbol.dir().map(|d| match d {
                fovsynth::synthesis::Dir::Forward => "forward",
                fovsynth::synthesis::Dir::Backward => "backward",
            }),
            start: a.start.into(),
            end: a.end.into(),
            length: a.length,
        }
    }
}

#[derive(Serialize)]
struct PlanRecord {
    schema_version: u32,
    case: &'static str,
    region: String,
    word: String,
    arcs: Vec<ArcRecord>,
    total_length: f64,
    feasible: bool,
    max_violation: f64,
}

fn plan(gamma: f64, delta: f64, rho_p: f64, q: PolarPoint, json: bool) -> Result<(), Failure> {
    let tol = tolerance()?;
    if !(q.rho > 0.0 && q.rho.is_finite()) {
        return Err(Failure::Domain(format!("q-rho must be positive, got {}", q.rho)));
    }
    let s = Synthesis::new(gamma, delta, rho_p)?;
    let plan = s.plan(&q)?;
    // the reduced path lives where the cone geometry is defined
    let trace = trace_path(&plan.reduced, &s.geom, 1e-3 * rho_p)
        .map_err(|e| Failure::Inconsistent(e.to_string()))?;
    let report = check_feasible(&trace, &s.geom, tol);
    let total = plan.path.total_length;
    let record = PlanRecord {
        schema_version: SCHEMA_VERSION,
        case: s.geom.case.name(),
        region: plan.label.to_string(),
        word: if plan.path.arcs.is_empty() { String::new() } else { plan.path.word().to_string() },
        arcs: plan.path.arcs.iter().map(ArcRecord::from).collect(),
        total_length: total,
        feasible: report.ok,
        max_violation: report.worst_violation,
    };
    let mut out = io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut out, &record).map_err(|e| Failure::Domain(e.to_string()))?;
        writeln!(out)?;
    } else {
        writeln!(out, "case          {}", record.case)?;
        writeln!(out, "region        {}", record.region)?;
        writeln!(out, "word          {}", record.word)?;
        for a in &record.arcs {
            writeln!(
                out,
                "  {:<3} {:<8} ({:.9}, {:+.9}) -> ({:.9}, {:+.9})  {:.12}",
                a.kind,
                a.dir.unwrap_or("-"),
                a.start.rho,
                a.start.psi,
                a.end.rho,
                a.end.psi,
                a.length
            )?;
        }
        writeln!(out, "total length  {}", record.total_length)?;
        writeln!(out, "feasible      {} (max violation {:e})", record.feasible, record.max_violation)?;
    }
    let end_gap = plan.path.end().map_or(q.distance(&s.goal()), |e| e.distance(&s.goal()));
    let length_gap = (trace.length() - total).abs();
    if !report.ok {
        return Err(Failure::Inconsistent(format!("bearing leaves the cone by {:e}", report.worst_violation)));
    }
    if end_gap > 1e-6 * rho_p || length_gap > tol.max(1e-12) * total.max(rho_p) {
        return Err(Failure::Inconsistent(format!("path misses P by {end_gap:e}, length off by {length_gap:e}")));
    }
    Ok(())
}

fn parse_pair(s: &str, sep: char) -> Option<(&str, &str)> {
    let (a, b) = s.split_once(sep)?;
    Some((a.trim(), b.trim()))
}

fn partition(
    gamma: f64,
    delta: f64,
    rho_p: f64,
    format: Format,
    window: Option<String>,
    resolution: &str,
    output: Option<PathBuf>,
) -> Result<(), Failure> {
    let s = Synthesis::new(gamma, delta, rho_p)?;
    let window = match window {
        None => Window {
            rho_min: 0.05 * rho_p,
            rho_max: 2.0 * rho_p,
        },
        Some(w) => {
            let bad = || Failure::Domain(format!("window {w:?} is not rho_min,rho_max"));
            let (a, b) = parse_pair(&w, ',').ok_or_else(bad)?;
            Window {
                rho_min: a.parse().map_err(|_| bad())?,
                rho_max: b.parse().map_err(|_| bad())?,
            }
        }
    };
    if !(window.rho_min > 0.0 && window.rho_max > window.rho_min && window.rho_max.is_finite()) {
        return Err(Failure::Domain(format!(
            "window needs 0 < rho_min < rho_max, got {} and {}",
            window.rho_min, window.rho_max
        )));
    }
    let bad = || Failure::Domain(format!("resolution {resolution:?} is not N x M"));
    let (a, b) = parse_pair(resolution, 'x').ok_or_else(bad)?;
    let (n_rho, n_psi): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    if n_rho == 0 || n_psi == 0 {
        return Err(bad());
    }
    let part = s.partition(window, n_rho, n_psi);
    let mut sink: Box<dyn Write> = match output {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    };
    match format {
        Format::Csv => atlas::write_csv(&mut sink, &s, &part)?,
        Format::Svg => atlas::write_svg(&mut sink, &s, &part, window)?,
    }
    sink.flush()?;
    Ok(())
}

fn run_validate(samples: usize, seed: u64, cases: &str) -> Result<(), Failure> {
    let cases: Vec<SensorCase> = if cases.trim() == "all" {
        SensorCase::ALL.to_vec()
    } else {
        cases
            .split(',')
            .map(|c| {
                SensorCase::ALL
                    .into_iter()
                    .find(|k| k.name() == c.trim())
                    .ok_or_else(|| Failure::Domain(format!("unknown case {c:?}")))
            })
            .collect::<Result<_, _>>()?
    };
    let tol = tolerance()?;
    let report = validate::run(&cases, samples, seed, tol);
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Domain(e.to_string()))?;
    println!("{text}");
    if report.ok {
        Ok(())
    } else {
        Err(Failure::Validation(format!("{} failing checks", report.failures)))
    }
}

impl From<SensorError> for Failure {
    fn from(e: SensorError) -> Self {
        Failure::Domain(e.to_string())
    }
}
