//! `hamstat`: build torus specs, verify them, export meshes, sweep the
//! associated family and run Lax flows.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 input error.

mod input;
mod mesh;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hamstat::construct::{regularity_scan, AssociatedFamily, Immersion, TorusSpec};
use hamstat::finitetype::{lax_grid, LaxReport, DEFAULT_STEP_DIVISIONS};
use hamstat::io::SeedConfig;
use hamstat::lattice::{enumerate_frequencies, moduli_dimension, period_lattice, periodicity_class};
use hamstat::loops::{dpw_reconstruct, potential_extract, ExtractOptions};
use hamstat::verify::{check_spec_flatness, check_spinor_equation, verify_surface, Domain, Report, FLATNESS_TOL};
use hamstat::Complex64 as C;
use input::{fmt_complex, load_seed, load_target, parse_lambdas, Target};
use mesh::{build_mesh, MeshHeader, Projection};
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Regularity minimum below which meshes are flagged as degenerate.
const DEGENERATE_TOL: f64 = 1e-6;
/// Period defect below which a family member counts as closed.
const PERIOD_TOL: f64 = 1e-9;
/// DPW round-trip threshold.
const DPW_TOL: f64 = 1e-7;
/// Default threshold for the Lax-flow drifts.
const LAX_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "hamstat", version, about = "Hamiltonian stationary Lagrangian tori in R⁴")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeshFormat {
    Obj,
    Ply,
    Json,
}

impl MeshFormat {
    fn extension(self) -> &'static str {
        match self {
            MeshFormat::Obj => "obj",
            MeshFormat::Ply => "ply",
            MeshFormat::Json => "json",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List Γ*_{β₀}, the periodicity class and the moduli dimension.
    Enumerate {
        /// JSON spec file or builtin:<name>.
        spec: String,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Export a mesh of the fundamental domain.
    Mesh {
        spec: String,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value = "drop:4")]
        project: String,
        /// Single λ on the unit circle.
        #[arg(long, default_value = "1")]
        lambda: String,
        #[arg(long, value_enum, default_value = "obj")]
        format: MeshFormat,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite and print a JSON report.
    Verify {
        spec: String,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Override every threshold.
        #[arg(long)]
        tol: Option<f64>,
        /// Include the potential extraction and reconstruction round trip.
        #[arg(long)]
        dpw: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Meshes and period defects of X_λ for each λ.
    Family {
        spec: String,
        #[arg(long, default_value = "1")]
        lambda: String,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value = "drop:4")]
        project: String,
        #[arg(long, value_enum, default_value = "obj")]
        format: MeshFormat,
        #[arg(long, default_value_t = PERIOD_TOL)]
        tol: f64,
        /// Directory receiving one mesh per λ and monodromy.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a Lax flow over the fundamental domain and report drifts.
    Lax {
        /// JSON seed file or builtin:standard[:w1,w2].
        seed: String,
        #[arg(long, default_value_t = 8)]
        grid: usize,
        /// RK4 steps per domain diameter.
        #[arg(long, default_value_t = DEFAULT_STEP_DIVISIONS)]
        steps: usize,
        #[arg(long, default_value_t = LAX_TOL)]
        tol: f64,
        /// File receiving the seed, the report and the sampled fields.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|_| run(cli.command));
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HAMSTAT_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("HAMSTAT_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            bail!("HAMSTAT_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure thread pool")?;
    }
    Ok(())
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Enumerate { spec, format } => enumerate(&spec, format),
        Command::Mesh { spec, grid, project, lambda, format, out } => {
            let target = load_target(&spec)?;
            let lambdas = parse_lambdas(&lambda)?;
            let [l] = lambdas[..] else { bail!("mesh takes a single λ; use family for a list") };
            let text = render_mesh(&target, l, grid, &project, format)?;
            emit(&text, out.as_deref())?;
            Ok(Outcome::Pass)
        }
        Command::Verify { spec, grid, tol, dpw, out } => verify(&spec, grid, tol, dpw, out.as_deref()),
        Command::Family { spec, lambda, grid, project, format, tol, out } => {
            family(&spec, &lambda, grid, &project, format, tol, out.as_deref())
        }
        Command::Lax { seed, grid, steps, tol, out } => lax(&seed, grid, steps, tol, out.as_deref()),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn enumerate(spec: &str, format: ReportFormat) -> Result<Outcome> {
    let (lattice, beta0, name) = if spec.starts_with("builtin:") || spec.starts_with("probe:") {
        let t = load_target(spec)?;
        (*t.lattice(), t.spec.beta0(), t.name)
    } else {
        let cfg = input::load_spec_config(Path::new(spec))?;
        (cfg.lattice()?, cfg.beta0()?, cfg.name.unwrap_or_else(|| spec.to_string()))
    };
    let freqs = enumerate_frequencies(&lattice, beta0).with_context(|| format!("β₀ = {}", fmt_complex(beta0)))?;
    let class = periodicity_class(&lattice, beta0)?;
    let dim = moduli_dimension(freqs.card());
    match format {
        ReportFormat::Json => {
            let v = json!({
                "spec": name,
                "beta0": fmt_complex(beta0),
                "frequencies": freqs.points.iter().map(|g| fmt_complex(*g)).collect::<Vec<_>>(),
                "card": freqs.card(),
                "periodicity": class,
                "dimension": dim,
            });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        ReportFormat::Text => {
            println!("spec         {name}");
            println!("beta0        {}", fmt_complex(beta0));
            println!("periodicity  {class:?}");
            println!("card         {}", freqs.card());
            println!("dimension    {dim}");
            println!("frequencies");
            for g in &freqs.points {
                println!("  {:>24}  |γ| = {:.12}", fmt_complex(*g), g.norm());
            }
        }
    }
    Ok(Outcome::Pass)
}

fn render_mesh(target: &Target, lambda: C, grid: usize, project: &str, format: MeshFormat) -> Result<String> {
    let projection: Projection = project.parse()?;
    let reg = regularity_scan(&target.spec, grid.max(8));
    if reg.min_norm < DEGENERATE_TOL {
        eprintln!("warning: degenerate grid, min |u| = {:.3e} at {}", reg.min_norm, fmt_complex(reg.argmin));
    }
    let x = target.evaluator(lambda)?;
    let header = MeshHeader {
        spec: target.name.clone(),
        spec_hash: target.hash(),
        projection: projection.to_string(),
        lambda: fmt_complex(lambda),
        grid,
    };
    let mesh = build_mesh(&x, &Domain::fundamental(target.lattice()), grid, projection, header)?;
    Ok(match format {
        MeshFormat::Obj => mesh.to_obj(),
        MeshFormat::Ply => mesh.to_ply(),
        MeshFormat::Json => mesh.to_json(),
    })
}

#[derive(Serialize)]
struct VerifyReport {
    spec: String,
    spec_hash: String,
    grid: usize,
    pass: bool,
    failed: Vec<String>,
    checks: Vec<Report>,
    advisory: serde_json::Value,
}

fn verify(spec: &str, grid: usize, tol: Option<f64>, dpw: bool, out: Option<&Path>) -> Result<Outcome> {
    if grid < 2 {
        bail!("--grid must be at least 2");
    }
    let target = load_target(spec)?;
    let x = target.evaluator(C::new(1.0, 0.0))?;
    let domain = Domain::fundamental(target.lattice());
    let probe = target.shear.is_some();
    let mut checks = verify_surface(&x, &domain, grid, (!probe).then(|| target.spec.beta0()));
    let mut advisory = json!({});
    if !probe {
        let s = &target.spec;
        let small = grid.min(16);
        checks.push(Report::new("spinor_equation", small, check_spinor_equation(s, small), FLATNESS_TOL));
        for (name, l) in [("flatness_lambda_1", C::new(1.0, 0.0)), ("flatness_lambda_e^(i pi/4)", C::from_polar(1.0, 0.25 * std::f64::consts::PI))] {
            checks.push(Report::new(name, small, check_spec_flatness(s, l, small), FLATNESS_TOL));
        }
        let closure = AssociatedFamily::new(s, C::new(1.0, 0.0))?
            .period_defects()
            .iter()
            .map(|d| d.magnitude())
            .fold(0.0, f64::max);
        checks.push(Report::new("period_closure", 0, closure, PERIOD_TOL));
        if dpw {
            checks.push(dpw_round_trip(s, small)?);
        }
        let reg = regularity_scan(s, grid);
        let delta = match period_lattice(s) {
            Ok(d) => {
                let (d1, d2) = d.generators();
                json!([fmt_complex(d1), fmt_complex(d2)])
            }
            Err(e) => json!(e.to_string()),
        };
        advisory = json!({
            "periodicity": s.periodicity(),
            "regularity_min": reg.min_norm,
            "regularity_argmin": fmt_complex(reg.argmin),
            "period_lattice": delta,
        });
    }
    if let Some(t) = tol {
        if !(t > 0.0) {
            bail!("--tol must be positive");
        }
        for r in &mut checks {
            r.threshold = t;
            r.pass = r.residual <= t;
        }
    }
    let failed: Vec<String> = checks.iter().filter(|r| !r.pass).map(|r| r.check.clone()).collect();
    let report = VerifyReport {
        spec: target.name.clone(),
        spec_hash: target.hash(),
        grid,
        pass: failed.is_empty(),
        failed: failed.clone(),
        checks,
        advisory,
    };
    emit(&(serde_json::to_string_pretty(&report)? + "\n"), out)?;
    if !failed.is_empty() {
        eprintln!("verification failed: {}", failed.join(", "));
        return Ok(Outcome::Fail);
    }
    Ok(Outcome::Pass)
}

/// Extracts the potential from the family and rebuilds X on a grid centered
/// at the origin.
fn dpw_round_trip(spec: &TorusSpec, grid: usize) -> Result<Report> {
    let ex = potential_extract(spec, &ExtractOptions::default())?;
    let (e1, e2) = spec.lattice().generators();
    let domain = Domain::new(-(e1 + e2) / 2.0, e1, e2);
    let x = Immersion::new(spec);
    let mut worst: f64 = 0.0;
    for z in domain.grid(grid).into_iter().flatten() {
        let g = dpw_reconstruct(&ex.potential, z, &[C::new(1.0, 0.0)])?.remove(0);
        worst = worst.max((g.translation - x.eval(z)).amax());
    }
    Ok(Report::new("dpw_round_trip", grid, worst, DPW_TOL))
}

#[derive(Serialize)]
struct DefectEntry {
    generator: String,
    translation: [f64; 4],
    phase: f64,
    magnitude: f64,
}

#[derive(Serialize)]
struct FamilyEntry {
    lambda: String,
    closes: bool,
    max_defect: f64,
    defects: Vec<DefectEntry>,
    mesh: Option<String>,
}

fn family(spec: &str, lambda: &str, grid: usize, project: &str, format: MeshFormat, tol: f64, out: Option<&Path>) -> Result<Outcome> {
    let target = load_target(spec)?;
    let lambdas = parse_lambdas(lambda)?;
    let ext = format.extension();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut entries = Vec::with_capacity(lambdas.len());
    for (k, &l) in lambdas.iter().enumerate() {
        let fam = AssociatedFamily::new(&target.spec, l)?;
        let defects: Vec<DefectEntry> = fam
            .period_defects()
            .iter()
            .map(|d| DefectEntry { generator: fmt_complex(d.generator), translation: d.translation, phase: d.phase, magnitude: d.magnitude() })
            .collect();
        let max_defect = defects.iter().map(|d| d.magnitude).fold(0.0, f64::max);
        let mesh = match out {
            Some(dir) => {
                let path = dir.join(format!("lambda_{k}.{ext}"));
                emit(&render_mesh(&target, l, grid, project, format)?, Some(&path))?;
                Some(path.display().to_string())
            }
            None => None,
        };
        entries.push(FamilyEntry { lambda: fmt_complex(l), closes: max_defect <= tol, max_defect, defects, mesh });
    }
    let report = json!({ "spec": target.name, "spec_hash": target.hash(), "tolerance": tol, "members": entries });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    if let Some(dir) = out {
        emit(&text, Some(&dir.join("monodromy.json")))?;
    }
    print!("{text}");
    Ok(Outcome::Pass)
}

fn lax(seed: &str, grid: usize, steps: usize, tol: f64, out: Option<&Path>) -> Result<Outcome> {
    if grid < 1 || steps < 1 {
        bail!("--grid and --steps must be positive");
    }
    let cfg: SeedConfig = load_seed(seed)?;
    let field = cfg.field()?;
    let lattice = cfg.lattice()?;
    let base = cfg.base()?;
    let (e1, e2) = lattice.generators();
    let domain = Domain::new(base, e1, e2);
    let h = domain.diameter() / steps as f64;
    let report = LaxReport::run(&field, &domain, grid, h)?;
    let drifts = [
        ("top_drift", report.top_drift),
        ("even_drift", report.even_drift),
        ("spectral_drift", report.spectral_drift),
        ("reality", report.reality),
        ("twist", report.twist),
    ];
    let failed: Vec<&str> = drifts.iter().filter(|(_, v)| !(*v <= tol)).map(|(n, _)| *n).collect();
    let summary = json!({
        "seed": cfg.name.clone().unwrap_or_else(|| seed.to_string()),
        "tolerance": tol,
        "pass": failed.is_empty(),
        "failed": failed,
        "report": report,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(path) = out {
        let samples: Vec<serde_json::Value> = lax_grid(&field, &domain, grid, h)?
            .into_iter()
            .zip(domain.grid(grid))
            .flat_map(|(fields, zs)| {
                fields.into_iter().zip(zs).map(|(f, z)| json!({ "z": [z.re, z.im], "field": f.to_records() }))
            })
            .collect();
        let doc = json!({ "seed": cfg, "report": report, "samples": samples });
        emit(&(serde_json::to_string_pretty(&doc)? + "\n"), Some(path))?;
    }
    if !failed.is_empty() {
        eprintln!("flow invariants drifted: {}", failed.join(", "));
        return Ok(Outcome::Fail);
    }
    Ok(Outcome::Pass)
}
