//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a run
//! completes but violates one of the checked invariants.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::SimulationConfig;
use crate::density::{gamma_map_with_diagnostics, physical_jump_seeded};
use crate::error::{Error, Result};
use crate::grid::SubProbabilityGrid;
use crate::harness::{
    default_left_shifts, default_right_shifts, jump_threshold, left_limit_probe,
    right_continuity_probe, shift_scan, ExperimentReport, GridMeta, ProbeSequence, SolverKind,
};
use crate::law::InitialLaw;
use crate::m1::{embed_left, levy_m1_distance};
use crate::particles::simulate;
use crate::path::BoundaryPath;
use crate::solvers::{minimal_picard, physical_timestep_detailed};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mkv-stefan",
    version,
    about = "Loss processes of the supercooled Stefan problem"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the loss process with the configured solver.
    Solve,
    /// Simulate the finite particle system.
    Particles {
        /// Number of particles (overrides the configuration).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Solve for a list of shifted initial laws.
    ShiftScan,
    /// Minimal solutions along an ordered sequence of laws converging to the base law.
    ConvergeScan,
    /// Left limit of minimal solutions for shifts increasing to zero.
    LeftLimit,
    /// Distance between two paths stored as CSV.
    M1 {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
    },
    /// Jump from the inf-formula for a density given as CSV (cell centre, density).
    Jump {
        #[arg(long)]
        density: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// Pending loss added to the mass below x.
        #[arg(long, default_value_t = 0.0)]
        seed_loss: f64,
        /// Report the right edge of the first violating cell instead of interpolating.
        #[arg(long)]
        no_refine: bool,
    },
}

/// Where the initial law comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawSource {
    Csv { density_csv: PathBuf },
    Inline(InitialLaw),
}

impl LawSource {
    pub fn load(&self, base: &Path) -> Result<InitialLaw> {
        match self {
            LawSource::Csv { density_csv } => InitialLaw::from_density_csv(base.join(density_csv)),
            LawSource::Inline(l) => Ok(l.clone()),
        }
    }
}

/// Contents of the `--config` file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub law: Option<LawSource>,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default)]
    pub shifts: Option<Vec<f64>>,
    #[serde(default)]
    pub sequence: Option<ProbeSequence>,
    #[serde(default = "default_particles")]
    pub particles: usize,
}

fn default_particles() -> usize {
    10_000
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VIOLATION,
        Err(Error::OrderingViolation(msg)) => {
            eprintln!("error: ordering violation: {msg}");
            let report = json!({ "error": "OrderingViolation", "message": msg });
            let _ = write_json(&cli.common.out, "report.json", &report);
            EXIT_VIOLATION
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn load_config(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("--config is required for this subcommand".into()))?;
    let text = fs::read_to_string(path)?;
    let mut cfg: RunConfig = serde_json::from_str(&text)?;
    if let Some(seed) = common.seed {
        cfg.simulation.seed = seed;
    }
    cfg.simulation.validate()?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn require_law(cfg: &RunConfig, base: &Path) -> Result<InitialLaw> {
    cfg.law
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("configuration has no `law`".into()))?
        .load(base)
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value)?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn write_path(dir: &Path, stem: &str, path: &BoundaryPath, format: Format) -> Result<()> {
    fs::create_dir_all(dir)?;
    match format {
        Format::Csv => path.save_csv(dir.join(format!("{stem}.csv"))),
        Format::Json => write_json(dir, &format!("{stem}.json"), path),
    }
}

fn write_report(common: &Common, report: &ExperimentReport) -> Result<bool> {
    for (i, s) in report.solutions.iter().enumerate() {
        if let Some(p) = &s.path {
            write_path(&common.out, &format!("lambda_{i:02}"), p, common.format)?;
        }
    }
    write_json(&common.out, "report.json", report)?;
    for c in report.failed_checks() {
        eprintln!(
            "check failed: {} = {:e} (tolerance {:e})",
            c.name, c.value, c.tolerance
        );
    }
    Ok(report.passed())
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let common = &cli.common;
    match &cli.command {
        Command::Solve => {
            let (cfg, base) = load_config(common)?;
            let law = require_law(&cfg, &base)?;
            solve(common, &cfg, &law)
        }
        Command::Particles { n } => {
            let (cfg, base) = load_config(common)?;
            let law = require_law(&cfg, &base)?;
            let n = n.unwrap_or(cfg.particles);
            let sim = &cfg.simulation;
            let (path, log) = simulate(&law, n, sim)?;
            write_path(&common.out, "lambda", &path, common.format)?;
            write_json(&common.out, "cascades.json", &log)?;
            let summary = json!({
                "particles": n,
                "grid": GridMeta::from(sim),
                "seed": sim.seed,
                "final_value": path.final_value(),
                "cascade_events": log.events.len(),
                "largest_cascade": log.largest(),
            });
            write_json(&common.out, "summary.json", &summary)?;
            Ok(true)
        }
        Command::ShiftScan => {
            let (cfg, base) = load_config(common)?;
            let law = require_law(&cfg, &base)?;
            let shifts = cfg.shifts.clone().unwrap_or_else(|| vec![-0.5, 0.0, 0.5]);
            let report = shift_scan(&law, &shifts, cfg.solver, &cfg.simulation)?;
            write_report(common, &report)
        }
        Command::ConvergeScan => {
            let (cfg, base) = load_config(common)?;
            let law = require_law(&cfg, &base)?;
            let seq = cfg
                .sequence
                .clone()
                .unwrap_or_else(|| ProbeSequence::Shifts(default_right_shifts(10)));
            let report = right_continuity_probe(&law, &seq, &cfg.simulation)?;
            write_report(common, &report)
        }
        Command::LeftLimit => {
            let (cfg, base) = load_config(common)?;
            let law = require_law(&cfg, &base)?;
            let shifts = cfg
                .shifts
                .clone()
                .unwrap_or_else(|| default_left_shifts(10));
            let report = left_limit_probe(&law, &shifts, &cfg.simulation)?;
            write_report(common, &report)
        }
        Command::M1 { f, g } => {
            let f = embed_left(&BoundaryPath::load_csv(f)?);
            let g = embed_left(&BoundaryPath::load_csv(g)?);
            let d = levy_m1_distance(&f, &g)?;
            match common.format {
                Format::Csv => println!("{d}"),
                Format::Json => println!("{}", json!({ "distance": d })),
            }
            Ok(true)
        }
        Command::Jump {
            density,
            alpha,
            seed_loss,
            no_refine,
        } => {
            if alpha.is_nan() || *alpha <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "--alpha must be positive, got {alpha}"
                )));
            }
            let grid = SubProbabilityGrid::from_density_csv(density)?;
            let jump = physical_jump_seeded(&grid, *alpha, *seed_loss, !no_refine);
            match common.format {
                Format::Csv => println!("{jump}"),
                Format::Json => println!("{}", json!({ "alpha": alpha, "jump": jump })),
            }
            Ok(true)
        }
    }
}

fn solve(common: &Common, cfg: &RunConfig, law: &InitialLaw) -> Result<bool> {
    let sim = &cfg.simulation;
    let mut summary = json!({
        "solver": cfg.solver,
        "law": law.kind_name(),
        "grid": GridMeta::from(sim),
    });
    let (path, ok) = match cfg.solver {
        SolverKind::Picard => {
            let (path, trace) = minimal_picard(law, sim);
            summary["iterations"] = json!(trace.iterations());
            summary["converged"] = json!(trace.converged);
            summary["non_convergence"] = json!(trace.non_convergence());
            summary["sup_deltas"] = json!(trace.sup_deltas);
            summary["max_order_violation"] = json!(trace.max_order_violation);
            let ok = trace.max_order_violation <= 1e-12;
            (path, ok)
        }
        SolverKind::Physical => {
            let sol = physical_timestep_detailed(law, sim);
            summary["max_level_mismatch"] = json!(sol.max_mismatch);
            (sol.path, true)
        }
    };
    let (image, diag) = gamma_map_with_diagnostics(law, &path, sim);
    let residual = path.sup_distance(&image);
    summary["residual"] = json!(residual);
    summary["max_ledger_error"] = json!(diag.max_ledger_error);
    summary["escaped_mass"] = json!(diag.escaped_mass);
    summary["initial_value"] = json!(path.grid_values()[0]);
    summary["final_value"] = json!(path.final_value());
    summary["jumps"] = json!(path.jumps(jump_threshold(sim)));
    write_path(&common.out, "lambda", &path, common.format)?;
    write_json(&common.out, "summary.json", &summary)?;
    Ok(ok && diag.max_ledger_error <= 1e-10)
}
