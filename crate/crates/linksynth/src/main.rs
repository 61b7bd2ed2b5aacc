use clap::{Parser, Subcommand};
use linksynth::fixtures;
use linksynth::harness::{load_configs, optimize_once, results_csv, run_matrix};
use linksynth::linkage::{simulate, Linkage};
use linksynth::optimizers::{OptimizerBudget, OptimizerKind};
use linksynth::targets::{generate, to_csv, ShapeKind, TargetShape};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "linksynth", about = "Planar linkage synthesis engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark target curve as CSV (x,y per line).
    Target {
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 64)]
        n_points: usize,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a linkage JSON file and print the target-joint trace.
    Simulate {
        #[arg(long)]
        linkage: PathBuf,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize a template topology against a benchmark target.
    Optimize {
        #[arg(long, value_parser = parse_optimizer)]
        optimizer: OptimizerKind,
        /// Population x generations, e.g. 6x20.
        #[arg(long, default_value = "6x20", value_parser = parse_budget)]
        budget: OptimizerBudget,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Template topology: 4 (four-bar) or 6 (six-bar).
        #[arg(long, default_value_t = 4)]
        bars: usize,
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 64)]
        n_points: usize,
        /// Write the per-iteration trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a declarative experiment matrix.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "grid" => Ok(OptimizerKind::Grid),
        "pso" => Ok(OptimizerKind::Pso),
        other => Err(format!("unknown optimizer `{other}` (grid|pso)")),
    }
}

fn parse_budget(s: &str) -> Result<OptimizerBudget, String> {
    let (p, g) = s
        .split_once(['x', 'X'])
        .ok_or("budget must look like 6x20")?;
    Ok(OptimizerBudget {
        population: p.trim().parse().map_err(|_| "bad population")?,
        iterations: g.trim().parse().map_err(|_| "bad generations")?,
    })
}

fn shape_arg(shape: &str, scale: f64, n_points: usize) -> Result<TargetShape, String> {
    let kind = ShapeKind::benchmark(shape, scale).map_err(|e| e.to_string())?;
    Ok(TargetShape { kind, n_points })
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Target {
            shape,
            scale,
            n_points,
            out,
        } => {
            let traj = generate(&shape_arg(&shape, scale, n_points)?)
                .map_err(|e| e.to_string())?;
            let csv = to_csv(&traj);
            match out {
                Some(path) => std::fs::write(path, csv).map_err(|e| e.to_string())?,
                None => print!("{csv}"),
            }
        }
        Command::Simulate {
            linkage,
            steps,
            out,
        } => {
            let text = std::fs::read_to_string(&linkage).map_err(|e| e.to_string())?;
            let linkage: Linkage = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let sim = simulate(&linkage, steps).map_err(|e| e.to_string())?;
            eprintln!(
                "links={} joints={} dof={} buildable={}",
                sim.n_links, sim.n_joints, sim.dof, sim.buildable
            );
            for d in &sim.diagnostics {
                match d.step {
                    Some(step) => eprintln!("diagnostic {} (step {step}): {}", d.joint, d.message),
                    None => eprintln!("diagnostic {}: {}", d.joint, d.message),
                }
            }
            let traj = sim
                .per_joint
                .get(&linkage.target)
                .ok_or("target joint has no trajectory")?;
            let csv = to_csv(traj);
            match out {
                Some(path) => std::fs::write(path, csv).map_err(|e| e.to_string())?,
                None => print!("{csv}"),
            }
        }
        Command::Optimize {
            optimizer,
            budget,
            seed,
            bars,
            shape,
            scale,
            n_points,
            trace,
        } => {
            let base = match bars {
                4 => fixtures::four_bar(),
                6 => fixtures::six_link_seven_joint(),
                other => return Err(format!("--bars must be 4 or 6, got {other}")),
            };
            let target = shape_arg(&shape, scale, n_points)?;
            let result = optimize_once(&base, &target, optimizer, budget, seed, n_points)
                .map_err(|e| e.to_string())?;
            println!(
                "best_chamfer={} evaluations={}",
                result.chamfer, result.evaluations
            );
            println!(
                "{}",
                serde_json::to_string_pretty(&result.best).map_err(|e| e.to_string())?
            );
            if let Some(path) = trace {
                let mut csv = String::from("iteration,best_objective\n");
                for (i, v) in result.trace.iter().enumerate() {
                    csv.push_str(&format!("{i},{v}\n"));
                }
                std::fs::write(path, csv).map_err(|e| e.to_string())?;
            }
        }
        Command::Run { config, out } => {
            let configs = load_configs(&config).map_err(|e| e.to_string())?;
            let records = run_matrix(&configs, &out).map_err(|e| e.to_string())?;
            print!("{}", results_csv(&records));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
