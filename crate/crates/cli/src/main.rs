use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use profile_fcm::ingest::{DayType, Season};
use profile_fcm_cli::commands::{cmd_assign, cmd_cluster, cmd_drift, cmd_export_plot, cmd_ingest, cmd_tariff};
use profile_fcm_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "profile-fcm", version, about = "Fuzzy C Means load profiles, tariffs and drift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Readings CSV to per-household normalized profiles for one segment.
    Ingest {
        #[command(flatten)]
        shared: Shared,
        /// Comma-separated winter months (default 12,1,2).
        #[arg(long)]
        winter_months: Option<String>,
        /// Comma-separated summer months (default 6,7,8).
        #[arg(long)]
        summer_months: Option<String>,
    },
    /// Fuzzy C Means over a profiles CSV; --out is a directory.
    Cluster {
        #[command(flatten)]
        shared: Shared,
    },
    /// Memberships of profiles against a saved model.
    Assign {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Personal tariffs blended from per-cluster offers.
    Tariff {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        offers: Option<PathBuf>,
        /// Usage CSV `household_id,h00..h23` in kWh.
        #[arg(long)]
        usage: Option<PathBuf>,
        #[arg(long)]
        bills: Option<PathBuf>,
        #[arg(long)]
        rank_cluster: Option<usize>,
        #[arg(long)]
        min_membership: Option<f64>,
        #[arg(long)]
        ranking: Option<PathBuf>,
    },
    /// Monthly membership drift toward a target cluster.
    Drift {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        target: Option<usize>,
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        winter_months: Option<String>,
        #[arg(long)]
        summer_months: Option<String>,
    },
    /// Centroid curves and membership bars as long-form CSVs; --out is a directory.
    ExportPlot {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        memberships: Option<PathBuf>,
        #[arg(long)]
        household: Option<String>,
        /// Display threshold for counting memberships (default 0.05).
        #[arg(long)]
        threshold: Option<f64>,
    },
}

#[derive(Args)]
struct Shared {
    /// key=value or JSON config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    fuzzifier: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["winter", "summer"]))]
    season: Option<String>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["weekday", "weekend"]))]
    day_type: Option<String>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long = "out")]
    output: Option<PathBuf>,
}

impl Shared {
    fn resolve(self, extra: RunConfig) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            input: self.input,
            output: self.output,
            seed: self.seed,
            clusters: self.clusters,
            fuzzifier: self.fuzzifier,
            tolerance: self.tolerance,
            max_iter: self.max_iter,
            season: self.season.map(|s| s.parse::<Season>()).transpose().map_err(CliError::Usage)?,
            day_type: self.day_type.map(|s| s.parse::<DayType>()).transpose().map_err(CliError::Usage)?,
            ..extra
        };
        Ok(file.merged_with(flags))
    }
}

fn months(mut cfg: RunConfig, winter: Option<String>, summer: Option<String>) -> Result<RunConfig, CliError> {
    if let Some(w) = winter {
        cfg.set("winter_months", &w)?;
    }
    if let Some(s) = summer {
        cfg.set("summer_months", &s)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Ingest {
            shared,
            winter_months,
            summer_months,
        } => {
            let extra = months(RunConfig::default(), winter_months, summer_months)?;
            cmd_ingest(&shared.resolve(extra)?)
        }
        Command::Cluster { shared } => cmd_cluster(&shared.resolve(RunConfig::default())?),
        Command::Assign { shared, model } => cmd_assign(&shared.resolve(RunConfig {
            model,
            ..RunConfig::default()
        })?),
        Command::Tariff {
            shared,
            offers,
            usage,
            bills,
            rank_cluster,
            min_membership,
            ranking,
        } => cmd_tariff(&shared.resolve(RunConfig {
            offers,
            usage,
            bills,
            rank_cluster,
            min_membership,
            ranking,
            ..RunConfig::default()
        })?),
        Command::Drift {
            shared,
            model,
            target,
            summary,
            winter_months,
            summer_months,
        } => {
            let extra = months(
                RunConfig {
                    model,
                    target,
                    summary,
                    ..RunConfig::default()
                },
                winter_months,
                summer_months,
            )?;
            cmd_drift(&shared.resolve(extra)?)
        }
        Command::ExportPlot {
            shared,
            model,
            memberships,
            household,
            threshold,
        } => cmd_export_plot(&shared.resolve(RunConfig {
            model,
            memberships,
            household,
            threshold,
            ..RunConfig::default()
        })?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
