use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hybrid_vvc::grid::GridConfig;
use hybrid_vvc::harness::{compare_dirs, emit_plots, run, AgentConfig, HarnessError, RunConfig, RunMode};

#[derive(Parser)]
#[command(version, about = "Volt-VAR control simulator with a hybrid droop/SAC agent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded experiment and write run.csv and summary.json.
    Run {
        #[arg(long, value_enum)]
        mode: RunMode,
        #[arg(long, default_value_t = 5760)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid TOML; defaults are used when omitted.
        #[arg(long)]
        grid_config: Option<PathBuf>,
        /// Agent TOML; defaults are used when omitted.
        #[arg(long)]
        agent_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Freeze learning from this step on (default: half the run for pure_sac).
        #[arg(long)]
        eval_after: Option<u64>,
    },
    /// Render performance.svg and voltages.svg from a run CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate two finished runs.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        hybrid: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { mode, steps, seed, grid_config, agent_config, out, eval_after } => {
            let grid = match grid_config {
                Some(p) => GridConfig::load(&p)?,
                None => GridConfig::default(),
            };
            let agent = match agent_config {
                Some(p) => AgentConfig::load(&p)?,
                None => AgentConfig::default(),
            };
            let config = RunConfig { mode, steps, seed, grid, agent, out_dir: Some(out.clone()), eval_after };
            let s = run(&config)?.summary;
            println!(
                "{} seed {}: mean performance {:.4}, final {:.4}, violations {}, solver failures {}",
                mode.as_str(),
                seed,
                s.mean_performance,
                s.final_performance,
                s.total_violations,
                s.solver_failures
            );
            println!("wrote {}", out.display());
        }
        Command::Plot { csv, out } => {
            for path in emit_plots(&csv, &out)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Compare { baseline, hybrid } => {
            print!("{}", compare_dirs(&baseline, &hybrid)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
