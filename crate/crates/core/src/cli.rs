//! Experiment runner behind the `parareal-dae` binary.
//!
//! Three subcommands: `run <config>` executes a configured solve and writes
//! `trajectory.csv`, `convergence.csv` and `report.json` into the configured
//! output directory; `classify <netlist>` prints the tractability index and
//! the labels of index-2 components; `check <netlist>` runs the structural
//! solvability checks.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dae::{
    classify_index, component_classes, default_sample_points, projector_chain, ComponentClass,
    DaeModel,
};
use crate::error::{Error, Result};
use crate::init::{project_consistentialize, warmup_consistentialize};
use crate::integrator::{integrate, NewtonConfig, Trajectory};
use crate::models::{assemble_flux_charge_mna, parse_netlist, CircuitModel, Netlist, ToyModel};
use crate::parareal::{
    self, effective_workers, make_grid, ErrorComponents, PararealConfig, PararealResult, Variant,
};

/// Environment variable overriding the fine-sweep worker count.
pub const WORKERS_ENV: &str = "PARAREAL_DAE_WORKERS";

#[derive(Parser)]
#[command(
    name = "parareal-dae",
    about = "Parallel-in-time solver for quasilinear index-2 DAEs",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the solve described by a TOML config and write the report
    /// files into its output directory.
    Run { config: PathBuf },
    /// Print the tractability index of a netlist and which state components
    /// are index-2.
    Classify { netlist: PathBuf },
    /// Run the structural solvability checks on a netlist.
    Check { netlist: PathBuf },
}

/// Entry point used by the binary; parses arguments from the process.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = std::error::Error::source(&e);
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let outcome = run_experiment(&config)?;
            match outcome.mode {
                RunVariant::Sequential => println!(
                    "sequential solve finished in {:.3} s; outputs in {}",
                    outcome.wall_time_seconds,
                    outcome.output_dir.display()
                ),
                _ => println!(
                    "{} sweeps, converged: {}, wall time {:.3} s; outputs in {}",
                    outcome.iterations_used,
                    outcome.converged,
                    outcome.wall_time_seconds,
                    outcome.output_dir.display()
                ),
            }
            Ok(())
        }
        Command::Classify { netlist } => {
            let (_, model) = load_netlist_model(&netlist)?;
            let outcome = classify_outcome(&model)?;
            println!("index: {}", outcome.index);
            if outcome.index2_components.is_empty() {
                println!("index-2 components: none");
            } else {
                println!("index-2 components: {}", outcome.index2_components.join(", "));
            }
            Ok(())
        }
        Command::Check { netlist } => {
            let (netlist, model) = load_netlist_model(&netlist)?;
            let outcome = check_outcome(&netlist, &model);
            println!(
                "netlist OK: {} non-ground nodes, {} branches, {} unknowns",
                outcome.nodes, outcome.branches, outcome.unknowns
            );
            println!(
                "inductor/current-source cutsets spanning hidden constraints: {}",
                outcome.cutsets
            );
            Ok(())
        }
    }
}

/// Which solve a config requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunVariant {
    /// Windowed iteration, correction on all components.
    Classic,
    /// Windowed iteration, correction on differential components with
    /// re-consistentialization.
    Init,
    /// Plain fine integration over the whole span.
    Sequential,
}

fn default_coarse_steps() -> usize {
    1
}

fn default_max_iterations() -> usize {
    50
}

fn default_output_dir() -> String {
    "out".to_string()
}

/// The `run` subcommand's configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `builtin:toy` or `netlist:<path>` (relative paths resolve against the
    /// config file's directory).
    pub model: String,
    pub t0: f64,
    pub t_end: f64,
    pub windows: usize,
    pub fine_h: f64,
    #[serde(default = "default_coarse_steps")]
    pub coarse_steps: usize,
    pub variant: RunVariant,
    pub rel_tol: f64,
    pub abs_tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.t_end > self.t0) {
            return bad(format!(
                "t_end must exceed t0, got [{}, {}]",
                self.t0, self.t_end
            ));
        }
        if self.windows == 0 {
            return bad("windows must be >= 1".to_string());
        }
        if !(self.fine_h > 0.0) {
            return bad(format!("fine_h must be positive, got {}", self.fine_h));
        }
        if self.coarse_steps == 0 {
            return bad("coarse_steps must be >= 1".to_string());
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return bad(format!(
                "tolerances must be positive, got rel_tol {} abs_tol {}",
                self.rel_tol, self.abs_tol
            ));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1".to_string());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1 when given".to_string());
        }
        Ok(())
    }
}

/// What `run_experiment` produced, for callers that want to inspect the run
/// beyond the written files.
#[derive(Debug)]
pub struct RunOutcome {
    pub mode: RunVariant,
    pub iterations_used: usize,
    pub converged: bool,
    pub wall_time_seconds: f64,
    pub output_dir: PathBuf,
}

/// Loads the config, executes the solve and writes `trajectory.csv`,
/// `convergence.csv` and `report.json` into the output directory.
pub fn run_experiment(config_path: &Path) -> Result<RunOutcome> {
    let text = fs::read_to_string(config_path).map_err(|e| {
        Error::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let mut cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", config_path.display())))?;
    cfg.validate()?;
    let config_dir = config_path.parent().unwrap_or(Path::new("."));
    let (model, resolved_key) = resolve_model(&cfg.model, config_dir)?;
    cfg.model = resolved_key;

    let workers = workers_from_env(cfg.workers)?;
    let newton = NewtonConfig::default();
    let x0 = derive_initial_condition(model.as_ref(), cfg.t0, cfg.fine_h, &newton)?;

    let out_dir = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&out_dir)?;

    let started = Instant::now();
    let (trajectory, result) = match cfg.variant {
        RunVariant::Sequential => {
            let traj = integrate(model.as_ref(), &x0, cfg.t0, cfg.t_end, cfg.fine_h, &newton)?;
            (traj, None)
        }
        RunVariant::Classic | RunVariant::Init => {
            let grid = make_grid(cfg.t0, cfg.t_end, cfg.windows)?;
            let pcfg = PararealConfig {
                variant: if cfg.variant == RunVariant::Classic {
                    Variant::Classic
                } else {
                    Variant::Init
                },
                fine_h: cfg.fine_h,
                coarse_steps_per_window: cfg.coarse_steps,
                rel_tol: cfg.rel_tol,
                abs_tol: cfg.abs_tol,
                max_iterations: cfg.max_iterations,
                workers,
                error_components: ErrorComponents::Differential,
                newton,
            };
            let result = parareal::run(model.as_ref(), &x0, &grid, &pcfg)?;
            let traj = parareal::finalize_trajectory(&result, model.as_ref())?;
            (traj, Some(result))
        }
    };
    let wall_time_seconds = started.elapsed().as_secs_f64();

    write_trajectory_csv(&out_dir.join("trajectory.csv"), model.as_ref(), &trajectory)?;
    write_convergence_csv(&out_dir.join("convergence.csv"), result.as_ref())?;
    let effective = match cfg.variant {
        RunVariant::Sequential => None,
        _ => Some(effective_workers(workers, cfg.windows)),
    };
    write_report_json(
        &out_dir.join("report.json"),
        &cfg,
        model.as_ref(),
        &x0,
        result.as_ref(),
        wall_time_seconds,
        effective,
    )?;

    Ok(RunOutcome {
        mode: cfg.variant,
        iterations_used: result.as_ref().map_or(0, |r| r.iterations_used),
        converged: result.as_ref().map_or(true, |r| r.converged),
        wall_time_seconds,
        output_dir: out_dir,
    })
}

/// Resolves a config `model` key into a model instance plus the canonical
/// form of the key (netlist paths made absolute so the report echo can be
/// re-run from anywhere).
fn resolve_model(key: &str, base: &Path) -> Result<(Box<dyn DaeModel>, String)> {
    if key == "builtin:toy" {
        return Ok((Box::new(ToyModel::default()), key.to_string()));
    }
    if let Some(raw) = key.strip_prefix("netlist:") {
        let path = Path::new(raw);
        let resolved = if path.is_absolute() {
            path.to_path_buf()
        } else {
            base.join(path)
        };
        let (_, model) = load_netlist_model(&resolved)?;
        let canonical = fs::canonicalize(&resolved).unwrap_or(resolved);
        return Ok((Box::new(model), format!("netlist:{}", canonical.display())));
    }
    Err(Error::Config(format!(
        "unknown model key '{key}' (expected 'builtin:toy' or 'netlist:<path>')"
    )))
}

fn load_netlist_model(path: &Path) -> Result<(Netlist, CircuitModel)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let netlist = parse_netlist(&text)?;
    let model = assemble_flux_charge_mna(&netlist)?;
    Ok((netlist, model))
}

/// Initial state at `t0`, derived from a zero guess: a two-step warm-up
/// integration when the model's structure supports it, otherwise a direct
/// projection onto the constraint set.
fn derive_initial_condition(
    model: &dyn DaeModel,
    t0: f64,
    fine_h: f64,
    newton: &NewtonConfig,
) -> Result<DVector<f64>> {
    let zeros = DVector::zeros(model.n_dof());
    if model.constant_mass() && model.linear_index2_coupling() {
        warmup_consistentialize(model, &zeros, t0, fine_h, newton)
    } else {
        project_consistentialize(model, &zeros, t0, newton)
    }
}

fn workers_from_env(from_config: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| {
                Error::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))
            })?;
            if n == 0 {
                return Err(Error::Config(format!("{WORKERS_ENV} must be >= 1")));
            }
            Ok(Some(n))
        }
        Err(std::env::VarError::NotPresent) => Ok(from_config),
        Err(e) => Err(Error::Config(format!("{WORKERS_ENV}: {e}"))),
    }
}

fn write_trajectory_csv(path: &Path, model: &dyn DaeModel, traj: &Trajectory) -> Result<()> {
    let mut out = String::with_capacity(64 * (traj.len() + 1));
    out.push('t');
    for name in model.component_names() {
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    for (t, state) in traj.times.iter().zip(traj.states.iter()) {
        let _ = write!(out, "{t:.16e}");
        for v in state.iter() {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_convergence_csv(path: &Path, result: Option<&PararealResult>) -> Result<()> {
    let mut out = String::from("iteration,max_jump_norm,first_unconverged_window\n");
    if let Some(r) = result {
        for (k, sweep) in r.jump_history.iter().enumerate() {
            let first = sweep
                .first_unconverged
                .map(|i| (i + 1).to_string())
                .unwrap_or_default();
            let _ = writeln!(out, "{},{:.16e},{first}", k + 1, sweep.max);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_report_json(
    path: &Path,
    cfg: &RunConfig,
    model: &dyn DaeModel,
    x0: &DVector<f64>,
    result: Option<&PararealResult>,
    wall_time_seconds: f64,
    workers: Option<usize>,
) -> Result<()> {
    let jump_history: Vec<serde_json::Value> = result
        .map(|r| {
            r.jump_history
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    serde_json::json!({
                        "iteration": k + 1,
                        "max_jump_norm": s.max,
                        "first_unconverged_window": s.first_unconverged.map(|i| i + 1),
                        "per_window": s.per_window,
                    })
                })
                .collect()
        })
        .unwrap_or_default();
    // Per-sweep window start values: sweep 0 holds the seeds; the state at
    // boundary n of sweep k is the value the iteration restarts window n+1
    // from. These are the data behind boundary-error plots.
    let snapshots: Vec<Vec<Vec<f64>>> = result
        .map(|r| {
            r.window_initial_values
                .iter()
                .map(|sweep| sweep.iter().map(|v| v.iter().copied().collect()).collect())
                .collect()
        })
        .unwrap_or_default();
    let boundaries: Vec<f64> = result
        .map(|r| r.grid.boundaries().to_vec())
        .unwrap_or_default();

    let report = serde_json::json!({
        "config": cfg,
        "model_id": model.model_id(),
        "component_names": model.component_names(),
        "mode": cfg.variant,
        "initial_condition": x0.iter().copied().collect::<Vec<f64>>(),
        "workers": workers,
        "wall_time_seconds": wall_time_seconds,
        "iterations_used": result.map_or(0, |r| r.iterations_used),
        "converged": result.map_or(true, |r| r.converged),
        "window_boundaries": boundaries,
        "jump_history": jump_history,
        "window_initial_values": snapshots,
    });
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

/// `classify` subcommand result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifyOutcome {
    pub index: u8,
    /// Names of components whose dominant chain part is the index-2 one.
    pub index2_components: Vec<String>,
}

pub fn classify_outcome(model: &CircuitModel) -> Result<ClassifyOutcome> {
    let samples = default_sample_points(model.n_dof(), &[0.0]);
    let index = classify_index(model, &samples)?;
    let pt = &samples[0];
    let chain = projector_chain(model, &pt.y, &pt.x, pt.t)?;
    let classes = component_classes(&chain);
    let names = model.component_names();
    let index2_components = names
        .into_iter()
        .zip(classes)
        .filter_map(|(name, class)| (class == ComponentClass::Index2).then_some(name))
        .collect();
    Ok(ClassifyOutcome {
        index: index.as_u8(),
        index2_components,
    })
}

/// `check` subcommand result (reaching this point means every structural
/// check passed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub nodes: usize,
    pub branches: usize,
    pub unknowns: usize,
    /// Dimension of the inductor/current-source cutset space (one hidden
    /// constraint per dimension).
    pub cutsets: usize,
}

pub fn check_outcome(netlist: &Netlist, model: &CircuitModel) -> CheckOutcome {
    CheckOutcome {
        nodes: netlist.nodes().len(),
        branches: netlist.branches().len(),
        unknowns: model.n_dof(),
        cutsets: model.index2_cut_basis().ncols(),
    }
}
