use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use social_ucb::io::{self, SummaryRow};
use social_ucb::{parse_config, run_experiment, PolicyKind, SimConfig};

#[derive(Parser)]
#[command(name = "social-ucb", version, about = "Agent-based simulator of bandit-driven social network formation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(Common),
    /// Run every p_frag x sigma_scale cell into its own directory.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated fragility probabilities.
        #[arg(long, value_delimiter = ',', required = true)]
        p_frag: Vec<f64>,
        /// Comma-separated volatility multipliers.
        #[arg(long, value_delimiter = ',', required = true)]
        sigma_scale: Vec<f64>,
    },
    /// Run all four policies on shared seeds and write a joint summary.
    Compare(Common),
    /// Parse the configuration and print it; runs nothing.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// key=value override, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn load(&self) -> Result<SimConfig, Box<dyn std::error::Error>> {
        let mut overrides = self.set.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("master_seed={s}"));
        }
        if let Some(p) = self.policy {
            overrides.push(format!("policy=\"{p}\""));
        }
        if let Some(k) = self.trials {
            overrides.push(format!("trials={k}"));
        }
        if let Some(o) = &self.out {
            overrides.push(format!("output_dir={}", toml_string(&o.display().to_string())));
        }
        Ok(parse_config(self.config.as_deref(), &overrides)?)
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn run_one(config: &SimConfig, dir: &Path, common: &Common) -> Result<SummaryRow, Box<dyn std::error::Error>> {
    common.say(format!(
        "{}: N={} T={} K={} -> {}",
        config.policy,
        config.n_agents,
        config.horizon,
        config.trials,
        dir.display()
    ));
    let result = run_experiment(config, Some(dir))?;
    let row = result.summary();
    common.say(format!(
        "  final cum fitness {:.4}{}  final cum regret {:.4}",
        row.mean_final_cum_fitness,
        row.ci95.map(|c| format!(" ± {c:.4}")).unwrap_or_default(),
        row.mean_final_cum_regret
    ));
    Ok(row)
}

fn execute(command: Command) -> Result<(), Box<dyn std::error::Error>> {
    match command {
        Command::Validate(common) => {
            print!("{}", common.load()?.to_toml());
        }
        Command::Run(common) => {
            let config = common.load()?;
            let dir = PathBuf::from(&config.output_dir);
            run_one(&config, &dir, &common)?;
        }
        Command::Compare(common) => {
            let base = common.load()?;
            let root = PathBuf::from(&base.output_dir);
            let mut rows = Vec::new();
            for policy in PolicyKind::ALL {
                let dir = root.join(policy.as_str());
                let config = SimConfig { policy, output_dir: dir.clone(), ..base.clone() };
                rows.push(run_one(&config, &dir, &common)?);
            }
            io::write_summary(&root.join("summary.csv"), &rows)?;
        }
        Command::Sweep { common, p_frag, sigma_scale } => {
            let base = common.load()?;
            let root = PathBuf::from(&base.output_dir);
            let mut cells = Vec::new();
            for &p in &p_frag {
                for &s in &sigma_scale {
                    let dir = root.join(format!("p_frag={p}_sigma_scale={s}"));
                    let config = base.with_overrides(&[
                        format!("p_frag={p:?}"),
                        format!("sigma_scale={s:?}"),
                        format!("output_dir={}", toml_string(&dir.display().to_string())),
                    ])?;
                    cells.push((config, dir));
                }
            }
            cells
                .par_iter()
                .map(|(config, dir)| run_one(config, dir, &common).map(|_| ()).map_err(|e| e.to_string()))
                .collect::<Result<Vec<()>, String>>()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
