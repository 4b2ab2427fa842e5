use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bdris::harness::{
    arc_table, convergence_traces, run_experiment, with_threads, write_outputs, ExperimentConfig, System,
};
use bdris::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Lossy BD-RIS simulator: admittance arcs, single-user and multi-user sweeps
/// and convergence traces.
#[derive(Parser, Debug)]
#[command(name = "bdris", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reachable admittance arcs for every resistance and inductance of the config.
    Arc {
        #[command(flatten)]
        common: Common,
        /// Capacitance samples per arc.
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Single-user received-power sweep.
    Siso(Common),
    /// Multi-user sum-rate sweep.
    Mumiso(Common),
    /// Iteration traces of the first realization at every sweep point.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// System used when no config file is given.
        #[arg(long, value_enum, default_value_t = SystemArg::Siso)]
        system: SystemArg,
    },
    /// Prints the default configuration as JSON.
    Defaults {
        #[arg(long, value_enum, default_value_t = SystemArg::Siso)]
        system: SystemArg,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment configuration; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed of the channel realizations.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (all cores by default).
    #[arg(long, env = "BDRIS_THREADS")]
    threads: Option<usize>,
    /// Monte-Carlo realizations per sweep point.
    #[arg(long)]
    realizations: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SystemArg {
    Siso,
    Mumiso,
}

fn defaults(system: SystemArg) -> ExperimentConfig {
    match system {
        SystemArg::Siso => ExperimentConfig::default(),
        SystemArg::Mumiso => ExperimentConfig::mumiso_defaults(),
    }
}

impl Common {
    fn load(&self, system: SystemArg) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => defaults(system),
        };
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        if let Some(n) = self.realizations {
            cfg.n_realizations = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn sweep(common: &Common, system: SystemArg) -> Result<()> {
    let cfg = common.load(system)?;
    let expected = match system {
        SystemArg::Siso => System::Siso,
        SystemArg::Mumiso => System::Mumiso,
    };
    if cfg.system != expected {
        return Err(bdris::Error::Config(format!("field `system`: config is for {:?}", cfg.system)));
    }
    let results = with_threads(common.threads, || run_experiment(&cfg))??;
    let dir = common.out_dir(&cfg);
    let paths = write_outputs(&cfg, &results, &dir)?;
    println!("{:<18} {:<20} {:>5} {:>10} {:>10} {:>10}", "algo", "topology", "mbar", "R_ohm", "rate", "stderr");
    for r in &results.rows {
        println!(
            "{:<18} {:<20} {:>5} {:>10} {:>10.4} {:>10.4}",
            r.point.algorithm.name(),
            r.point.topology.name(),
            r.point.mbar,
            r.point.r_ohm,
            r.mean_rate,
            r.stderr
        );
    }
    report(&paths);
    Ok(())
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Arc { common, samples } => {
            let cfg = common.load(SystemArg::Siso)?;
            let path = write(&common.out_dir(&cfg), "arc.csv", &arc_table(&cfg, samples)?)?;
            report(&[path]);
        }
        Command::Siso(common) => sweep(&common, SystemArg::Siso)?,
        Command::Mumiso(common) => sweep(&common, SystemArg::Mumiso)?,
        Command::Convergence { common, system } => {
            let cfg = common.load(system)?;
            let traces = with_threads(common.threads, || convergence_traces(&cfg))??;
            let dir = common.out_dir(&cfg);
            let paths = traces.iter().map(|t| write(&dir, &t.name, &t.csv)).collect::<Result<Vec<_>>>()?;
            report(&paths);
        }
        Command::Defaults { system } => {
            println!("{}", serde_json::to_string_pretty(&defaults(system))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
