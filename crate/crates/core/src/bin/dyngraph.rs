use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dyngraph::cli::{
    cmd_baseline, cmd_cv, cmd_fit, cmd_generate, cmd_table, load_config, BaselineConfig, CvConfig, FitConfig,
};
use dyngraph::evaluation::TableConfig;
use dyngraph::objective::Hyperparameters;
use dyngraph::synthetic::GeneratorConfig;
use dyngraph::Result;

/// Joint node-feature and link prediction on dynamic graphs.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic graph sequence.
    Generate {
        #[arg(long)]
        out: PathBuf,
        /// JSON generator config; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit the joint model and score the held-out snapshot.
    Fit {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Hyperparameters JSON, e.g. the one written by `cv`.
        #[arg(long)]
        hyperparameters: Option<PathBuf>,
    },
    /// Score the joint model and its baselines on the held-out snapshot.
    Baseline {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        hyperparameters: Option<PathBuf>,
    },
    /// Select hyperparameters by temporal cross-validation.
    Cv {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare all methods over generated replications.
    Table {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        replications: Option<usize>,
        /// Seed of the first replication.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn hyperparameters(path: Option<PathBuf>, current: Hyperparameters) -> Result<Hyperparameters> {
    match path {
        Some(p) => load_config(Some(&p)),
        None => Ok(current),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { out, config, seed } => {
            let mut cfg: GeneratorConfig = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cmd_generate(&cfg, &out)
        }
        Command::Fit {
            data,
            out,
            config,
            hyperparameters: hp,
        } => {
            let mut cfg: FitConfig = load_config(config.as_deref())?;
            cfg.data = data.unwrap_or(cfg.data);
            cfg.hyperparameters = hyperparameters(hp, cfg.hyperparameters)?;
            if let Some(o) = cmd_fit(&cfg, &out)? {
                let f = o.entry.feature.unwrap_or(f64::NAN);
                let g = o.entry.graph.unwrap_or(f64::NAN);
                println!("{:?} after {} iterations: feature {f:.6} graph {g:.6}", o.termination, o.iterations);
            }
            Ok(())
        }
        Command::Baseline {
            data,
            out,
            config,
            hyperparameters: hp,
        } => {
            let mut cfg: BaselineConfig = load_config(config.as_deref())?;
            cfg.data = data.unwrap_or(cfg.data);
            cfg.hyperparameters = hyperparameters(hp, cfg.hyperparameters)?;
            for (m, e) in cfg.methods.clone().iter().zip(cmd_baseline(&cfg, &out)?) {
                let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
                println!("{m:<16} feature {:<10} graph {}", show(e.feature), show(e.graph));
            }
            Ok(())
        }
        Command::Cv { data, out, config } => {
            let mut cfg: CvConfig = load_config(config.as_deref())?;
            cfg.data = data.unwrap_or(cfg.data);
            let res = cmd_cv(&cfg, &out)?;
            let h = res.hyperparameters;
            println!(
                "kappa {} tau {} nu {} lambda {} eta {}",
                h.kappa, h.tau, h.nu, h.lambda, h.eta
            );
            Ok(())
        }
        Command::Table {
            out,
            config,
            replications,
            seed,
        } => {
            let mut cfg: TableConfig = load_config(config.as_deref())?;
            if let Some(r) = replications {
                cfg.replications = r;
            }
            if let Some(s) = seed {
                cfg.generator.seed = s;
            }
            let show = |s: Option<dyngraph::evaluation::Summary>| {
                s.map_or_else(|| "-".to_string(), |s| format!("{:.6} ± {:.6}", s.mean, s.std))
            };
            for row in cmd_table(&cfg, &out)?.rows {
                println!(
                    "{:<16} feature {:<22} graph {}",
                    row.method.as_str(),
                    show(row.feature),
                    show(row.graph)
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::FAILURE
        }
    }
}
