use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eqldp::experiments::{
    parse_csv, render_svg, run_criterion, run_sweep_with, write_sweep, EntropyGrid, Level, LogBase, MechanismSpec,
    RunConfig, CRITERIA,
};
use eqldp::privacy_energy::EnergySettings;
use eqldp::qldp_analyzer::epsilon_star_with;
use eqldp::QldpError;

#[derive(Parser)]
#[command(name = "eqldp", version, about = "Entanglement-constrained quantum LDP leakage analysis")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seeds in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Base of the logarithm used for reported leakages.
    #[arg(long, global = true, default_value = "e", value_parser = ["e", "2"])]
    log_base: String,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replaces the Gibbs solver with a deliberately wrong one.
    #[arg(long, global = true, hide = true)]
    corrupt_gibbs: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the leakage over an entropy grid and write CSV plus a JSON summary.
    Sweep,
    /// Render a sweep CSV as an SVG plot.
    Plot {
        /// CSV produced by `sweep`.
        csv: PathBuf,
        /// Output file; defaults to `<out>/sweep.svg`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the full report for one entropy level as JSON.
    Report {
        /// Entanglement entropy in nats.
        #[arg(long)]
        s: f64,
        /// Block-depolarizing parameter on A when no config is given.
        #[arg(long, default_value_t = 0.5)]
        beta_a: f64,
        /// Block-depolarizing parameter on B when no config is given.
        #[arg(long, default_value_t = 0.5)]
        beta_b: f64,
    },
    /// Run the numbered correctness criteria.
    Selftest {
        #[arg(long, default_value = "quick", value_parser = ["quick", "full"])]
        level: String,
        /// Run only this criterion.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=11))]
        criterion: Option<u8>,
    },
}

enum Failure {
    Usage(String),
    Criterion(String),
    Runtime(String),
}

impl From<QldpError> for Failure {
    fn from(e: QldpError) -> Self {
        match e {
            QldpError::Config(_) | QldpError::Io(_) | QldpError::Json(_) | QldpError::InvalidArgument(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<Option<RunConfig>, Failure> {
    let Some(path) = &cli.config else { return Ok(None) };
    let mut cfg = RunConfig::from_path(path)?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    Ok(Some(cfg))
}

fn settings(cli: &Cli) -> EnergySettings {
    if cli.corrupt_gibbs {
        EnergySettings {
            gibbs: eqldp::experiments::corrupted_gibbs,
            ..EnergySettings::default()
        }
    } else {
        EnergySettings::default()
    }
}

fn base(cli: &Cli) -> LogBase {
    cli.log_base.parse().unwrap_or_default()
}

fn sweep(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?.ok_or_else(|| Failure::Usage("sweep requires --config".into()))?;
    let rows = run_sweep_with(&cfg, &settings(cli))?;
    let summary = write_sweep(&cfg, &rows, base(cli), &cfg.output.dir)?;
    println!(
        "wrote {} rows to {} (hash {})",
        summary.rows,
        summary.csv_path.display(),
        summary.determinism_hash
    );
    if !summary.non_converged.is_empty() {
        eprintln!("warning: numerical minimum did not converge at s = {:?}", summary.non_converged);
    }
    Ok(())
}

fn plot(cli: &Cli, csv: &Path, output: Option<&PathBuf>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(csv).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", csv.display())))?;
    let rows = parse_csv(&text)?;
    let svg = render_svg(&rows, base(cli))?;
    let target = match output {
        Some(p) => p.clone(),
        None => {
            let cfg = load_config(cli)?;
            let dir = cli
                .out
                .clone()
                .or_else(|| cfg.as_ref().map(|c| c.output.dir.clone()))
                .unwrap_or_else(|| PathBuf::from("."));
            let name = cfg.map(|c| c.output.plot).unwrap_or_else(|| "sweep.svg".into());
            dir.join(name)
        }
    };
    if let Some(parent) = target.parent() {
        std::fs::create_dir_all(parent).map_err(QldpError::from)?;
    }
    std::fs::write(&target, svg).map_err(QldpError::from)?;
    println!("wrote {}", target.display());
    Ok(())
}

fn report(cli: &Cli, s: f64, beta_a: f64, beta_b: f64) -> Result<(), Failure> {
    let cfg = match load_config(cli)? {
        Some(c) => c,
        None => {
            let mut c = RunConfig::new(MechanismSpec::block_depolarizing(beta_a, beta_b), EntropyGrid::List(vec![s]));
            c.seed = cli.seed;
            c
        }
    };
    let mech = cfg.mechanism.build()?;
    let r = epsilon_star_with(
        &mech,
        s,
        &cfg.effective_search(),
        &cfg.effective_optimizer(),
        &settings(cli),
    )?;
    let base = base(cli);
    let mut json = serde_json::to_value(&r).map_err(QldpError::from)?;
    for key in ["epsilon_upper", "epsilon_numeric"] {
        if let Some(v) = json[key].as_f64() {
            json[key] = serde_json::json!(base.convert(v));
        }
    }
    json["log_base"] = serde_json::to_value(base).map_err(QldpError::from)?;
    println!("{}", serde_json::to_string_pretty(&json).map_err(QldpError::from)?);
    Ok(())
}

fn selftest(cli: &Cli, level: &str, only: Option<u8>) -> Result<(), Failure> {
    let level: Level = level.parse().map_err(Failure::Usage)?;
    let settings = settings(cli);
    let ids: Vec<u8> = match only {
        Some(id) => vec![id],
        None => CRITERIA.iter().map(|&(id, _)| id).collect(),
    };
    let mut failed = Vec::new();
    for id in ids {
        let outcome = run_criterion(id, level, &settings);
        println!("{outcome}");
        if !outcome.pass {
            failed.push(format!("{} ({})", outcome.id, outcome.name));
        }
    }
    if failed.is_empty() {
        println!("all criteria passed");
        Ok(())
    } else {
        Err(Failure::Criterion(format!("failed criteria: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep => sweep(&cli),
        Command::Plot { csv, output } => plot(&cli, csv, output.as_ref()),
        Command::Report { s, beta_a, beta_b } => report(&cli, *s, *beta_a, *beta_b),
        Command::Selftest { level, criterion } => selftest(&cli, level, *criterion),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Criterion(msg)) | Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
