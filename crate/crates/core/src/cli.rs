//! Command-line front end: `solve`, `convergence` and `export`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{convergence_study, error_norms, temporal_study, ConvergenceReport, ErrorNorms};
use crate::assembly::BoundaryData;
use crate::config::{DtSpec, RunConfig};
use crate::constitutive::ConstitutiveLaw;
use crate::dofmap::build_dof_map;
use crate::error::{Error, Result};
use crate::export::{export_fields, write_file, ExportFormat};
use crate::assembly::ProblemData;
use crate::manufactured::{Homogeneous, ManufacturedCase};
use crate::mesh::build_structured_mesh;
use crate::solver::{diagnostics_row, FieldState, Simulation, StepDiagnostics, DIAGNOSTICS_HEADER};

#[derive(Debug, Parser)]
#[command(name = "poromfem", version, about = "Three-field finite elements for nonlinear poroelasticity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time-march one mesh and write per-step diagnostics.
    Solve(RunArgs),
    /// Spatial study over `levels`, or a temporal study when `dt` is a list.
    Convergence(RunArgs),
    /// Solve and write the terminal fields (VTK and CSV unless `--export` says otherwise).
    Export(RunArgs),
}

/// Flags override the matching keys of the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// test1, test2 or zero.
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Comma-separated subdivisions per side, e.g. `4,8,16,32`.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// `h2`, a step such as `0.01` or `1/40`, or a comma-separated list.
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub deterministic: bool,
    /// Comma-separated subset of `vtk,csv`.
    #[arg(long, value_delimiter = ',')]
    pub export: Option<Vec<String>>,
}

impl RunArgs {
    /// Config file (or defaults) with the flags applied, validated.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                RunConfig::parse(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(case) = &self.case {
            cfg.case = case.parse()?;
        }
        if let Some(theta) = self.theta {
            cfg.theta = theta;
        }
        if let Some(levels) = &self.levels {
            cfg.levels = levels.clone();
        }
        if let Some(dt) = &self.dt {
            cfg.dt = dt.parse()?;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if self.deterministic {
            cfg.deterministic = true;
        }
        if let Some(formats) = &self.export {
            cfg.export = formats.iter().map(|f| f.parse()).collect::<Result<_>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Terminal state of a `solve` together with what it was solved on.
pub struct SolveOutcome {
    pub n: usize,
    pub state: FieldState,
    pub diagnostics: Vec<StepDiagnostics>,
    /// `None` for the zero case, which has no exact solution to compare with.
    pub errors: Option<ErrorNorms>,
}

fn single_level(cfg: &RunConfig) -> Result<usize> {
    match cfg.levels.as_slice() {
        [n] => Ok(*n),
        _ => Err(Error::config("levels", "solve and export take exactly one level")),
    }
}

/// Marches the configured problem on its single level.
pub fn solve(cfg: &RunConfig) -> Result<SolveOutcome> {
    let n = single_level(cfg)?;
    let solver_config = cfg.solver_config(n)?;
    let mesh = build_structured_mesh(n)?;
    let dofmap = build_dof_map(&mesh);
    let params = cfg.physical_params();
    let manufactured = match cfg.case.manufactured() {
        Some(kind) => Some(ManufacturedCase::with_law(kind, cfg.law(), params)?),
        None => None,
    };
    let problem: &dyn ProblemData = match &manufactured {
        Some(case) => case,
        None => &Homogeneous,
    };
    let coeffs = params.derived()?;
    let law = ConstitutiveLaw::new(cfg.law(), coeffs.lambda, coeffs.mu);
    let mut sim = Simulation::new(
        &mesh,
        &dofmap,
        law,
        &params,
        BoundaryData::component_split(cfg.boundary),
        problem,
        solver_config,
    )?;
    let mut diagnostics = Vec::new();
    let state = sim.run(|d, _| diagnostics.push(*d))?;
    let errors = match &manufactured {
        Some(case) => Some(error_norms(&state, case, &mesh, &dofmap)?),
        None => None,
    };
    Ok(SolveOutcome {
        n,
        state,
        diagnostics,
        errors,
    })
}

pub fn diagnostics_csv(diagnostics: &[StepDiagnostics]) -> String {
    let mut out = format!("{DIAGNOSTICS_HEADER}\n");
    for d in diagnostics {
        out.push_str(&diagnostics_row(d));
        out.push('\n');
    }
    out
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs the study the config describes; failed levels stay in the report.
pub fn convergence(cfg: &RunConfig) -> Result<ConvergenceReport> {
    let kind = cfg
        .case
        .manufactured()
        .ok_or_else(|| Error::config("case", "a convergence study needs a manufactured case (test1 or test2)"))?;
    let case = ManufacturedCase::with_law(kind, cfg.law(), cfg.physical_params())?;
    match &cfg.dt {
        DtSpec::List(dts) => {
            let n = single_level(cfg).map_err(|_| Error::config("levels", "a temporal study takes exactly one level"))?;
            temporal_study(&case, n, dts, cfg.boundary, cfg.solver_config_with_dt(dts[0]))
        }
        _ => {
            let base = cfg.solver_config(cfg.levels[0])?;
            convergence_study(&case, &cfg.levels, cfg.dt_rule()?, cfg.boundary, base)
        }
    }
}

fn timestamp() -> String {
    humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string()
}

fn summary(outcome: &SolveOutcome) -> String {
    let mut s = String::new();
    let iterations: usize = outcome.diagnostics.iter().map(|d| d.picard_iterations).sum();
    let _ = write!(
        s,
        "n = {}, {} steps, t = {}, {} Picard iterations",
        outcome.n,
        outcome.diagnostics.len(),
        outcome.state.t,
        iterations
    );
    if let Some(e) = &outcome.errors {
        let _ = write!(s, "\nerrors: u L2 {:e}, u H1 {:e}, p L2 {:e}, p H1 {:e}", e.u_l2, e.u_h1, e.p_l2, e.p_h1);
    }
    s
}

/// Executes one command; human-readable progress goes to stdout.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(args) | Command::Export(args) => {
            let mut cfg = args.resolve()?;
            let is_export = matches!(cli.command, Command::Export(_));
            if is_export && cfg.export.is_empty() {
                cfg.export = vec![ExportFormat::Vtk, ExportFormat::Csv];
            }
            let outcome = solve(&cfg)?;
            create_dir(&cfg.output_dir)?;
            if !is_export {
                let path = cfg.output_dir.join("diagnostics.csv");
                write_file(&path, &diagnostics_csv(&outcome.diagnostics))?;
                println!("wrote {}", path.display());
            }
            if !cfg.export.is_empty() {
                let mesh = build_structured_mesh(outcome.n)?;
                let dofmap = build_dof_map(&mesh);
                for path in export_fields(&cfg.output_dir, "fields", &cfg.export, &mesh, &dofmap, &outcome.state)? {
                    println!("wrote {}", path.display());
                }
            }
            println!("{}", summary(&outcome));
            Ok(())
        }
        Command::Convergence(args) => {
            let cfg = args.resolve()?;
            let mut report = convergence(&cfg)?;
            report.generated = Some(timestamp());
            create_dir(&cfg.output_dir)?;
            write_file(&cfg.output_dir.join("convergence.csv"), &report.to_csv())?;
            write_file(&cfg.output_dir.join("convergence.md"), &report.to_markdown())?;
            println!("{}", report.to_markdown());
            match report.failures().count() {
                0 => Ok(()),
                failed => Err(Error::StudyIncomplete { failed }),
            }
        }
    }
}
