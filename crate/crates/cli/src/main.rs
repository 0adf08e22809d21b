use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use phasefield::experiment::{run_experiment, ExperimentConfig, ExperimentKind, ModelKind};

#[derive(Parser, Debug)]
#[command(name = "phasefield", version, about = "Energy-stable phase-field experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Band |x| <= 3/2 moved by a linear force, checked against the 1D cross-section.
    Quasi1d(RunArgs),
    /// Disk of radius 3/2 shrinking by curvature.
    Circle(RunArgs),
    /// Plus-shaped region with convex and reentrant corners.
    Nonconvex(RunArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Flat key=value file applied on top of the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// allen_cahn or hybrid.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Slope C of the linear force term.
    #[arg(long, allow_hyphen_values = true)]
    force_slope: Option<f64>,
    /// Clamp parameter of the hybrid mobility.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    fp_tol: Option<f64>,
    #[arg(long)]
    fp_max_iter: Option<usize>,
    #[arg(long)]
    lin_tol: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Steps between VTK snapshots; 0 disables them.
    #[arg(long)]
    snapshot_stride: Option<usize>,
    #[arg(long, env = "PHASEFIELD_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |key: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((key, v));
            }
        };
        push("model", self.model.clone());
        push("mu", self.mu.map(|v| v.to_string()));
        push("lambda", self.lambda.map(|v| v.to_string()));
        push("nu", self.nu.map(|v| v.to_string()));
        push("force_slope", self.force_slope.map(|v| v.to_string()));
        push("delta", self.delta.map(|v| v.to_string()));
        push("nx", self.nx.map(|v| v.to_string()));
        push("ny", self.ny.map(|v| v.to_string()));
        push("tau", self.tau.map(|v| v.to_string()));
        push("t_end", self.t_end.map(|v| v.to_string()));
        push("fp_tol", self.fp_tol.map(|v| v.to_string()));
        push("fp_max_iter", self.fp_max_iter.map(|v| v.to_string()));
        push("lin_tol", self.lin_tol.map(|v| v.to_string()));
        push("gamma", self.gamma.map(|v| v.to_string()));
        push("snapshot_stride", self.snapshot_stride.map(|v| v.to_string()));
        push("output_dir", self.output_dir.as_ref().map(|p| p.display().to_string()));
        out
    }
}

fn build_config(kind: ExperimentKind, args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(kind, ModelKind::AllenCahn);
    if let Some(path) = &args.config {
        cfg.apply_config_file(path).with_context(|| format!("reading config {}", path.display()))?;
    }
    for (key, value) in args.overrides() {
        cfg.set(key, &value).with_context(|| format!("--{}", key.replace('_', "-")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (kind, args) = match &cli.command {
        Command::Quasi1d(a) => (ExperimentKind::Quasi1d, a),
        Command::Circle(a) => (ExperimentKind::Circle, a),
        Command::Nonconvex(a) => (ExperimentKind::Nonconvex, a),
    };
    let cfg = build_config(kind, args)?;
    eprintln!(
        "{} / {}: {}x{} mesh, tau = {}, {} steps -> {}",
        cfg.experiment,
        cfg.model,
        cfg.nx,
        cfg.ny,
        cfg.tau,
        cfg.n_steps(),
        cfg.output_dir.display()
    );
    let outcome = run_experiment(&cfg)?;
    if let Some(last) = outcome.records.last() {
        println!(
            "step {} t = {} energy = {:.10e} area = {:.6}",
            last.step, last.time, last.energy, last.area
        );
    }
    if let Some(q) = &outcome.quasi1d {
        let worst = q.snapshots.iter().filter_map(|s| s.max_deviation()).fold(0.0, f64::max);
        println!("max 1D/2D front deviation {worst:.3e}, final y-variation {:.3e}", q.final_y_variation);
    }
    println!("wrote {}", outcome.csv_path.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
