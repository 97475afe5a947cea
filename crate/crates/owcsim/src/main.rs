use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use owcsim::config::{hex, RunConfig, CONFIG_ENV};
use owcsim::experiment;
use owcsim::parallel::Rayon;
use owcsim::{ponio, validation, Result};
use owcsim_core::allocator;

#[derive(Parser)]
#[command(name = "owcsim", version, about = "Indoor optical wireless channel, assignment and backhaul simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ray-trace the room and write the channel artifact.
    Trace(Common),
    /// Run the user-drop experiment grid and write the figure data.
    Experiment(Common),
    /// Build the backhaul designs and write manifests and resilience reports.
    Pon(Common),
    /// Run the oracle and closed-form self-checks.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Random oracle instances.
        #[arg(long, default_value_t = validation::DEFAULT_INSTANCES)]
        instances: usize,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; the built-in reference room when absent.
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf, Rayon)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::reference(),
        };
        if let Some(seed) = self.seed {
            cfg.experiment.seed = seed;
        }
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
        Ok((cfg, out, Rayon::new(self.workers)))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Trace(c) => {
            let (cfg, out, exec) = c.load()?;
            let t = experiment::trace(&cfg, &out, &exec)?;
            let verb = if t.traced { "traced" } else { "up to date" };
            println!("{verb}: {} dims {:?} fingerprint {}", t.path.display(), t.channel.dims(), hex(&t.fingerprint));
        }
        Command::Experiment(c) => {
            let (cfg, out, exec) = c.load()?;
            let start = Instant::now();
            let t = experiment::trace(&cfg, &out, &exec)?;
            let grid = experiment::run_grid(&cfg, &t.channel, &exec)?;
            let summary = experiment::write_outputs(&cfg, &t.fingerprint, &grid, &out)?;
            for cell in summary.cells.iter().filter(|c| c.failure == "none") {
                println!(
                    "n_users {} {:<9} avg {:7.3} dB  ap-count mode {} max {}",
                    cell.n_users,
                    cell.mode.name(),
                    cell.stats.overall_avg_sinr_db,
                    cell.stats.ap_count_mode,
                    cell.stats.max_ap_count
                );
            }
            let violations: usize = summary.monotonicity.iter().map(|m| m.violations.len()).sum();
            println!("monotonicity violations: {violations}");
            println!("wrote {} ({:.2} s)", out.display(), start.elapsed().as_secs_f64());
        }
        Command::Pon(c) => {
            let (cfg, out, _) = c.load()?;
            for r in ponio::run(&cfg, &out)? {
                let b = r.bisection_gbps.map_or("inf".to_string(), |b| format!("{b}"));
                println!(
                    "{:<16} bisection {b} Gbps  max disconnected (ap/awgr/switch) {}  (any node) {}",
                    r.design, r.core.max_disconnected, r.all.max_disconnected
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Validate { common, instances } => {
            let (cfg, _, _) = common.load()?;
            let report = validation::cmd_validate(&cfg, cfg.experiment.seed, instances, allocator::solve_exact, allocator::solve_brute_force)?;
            print!("{}", report.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("owcsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
