use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use pimpes::driver;
use pimpes::scenario::Scenario;
use pimpes::schemes::SchemeKind;
use pimpes::units::DAY;
use pimpes::{Error, Result};

/// Two-phase porous-media flow with capillarity on triangular meshes.
#[derive(Parser)]
#[command(name = "pimpes", version)]
struct Cli {
    /// Accepted for scripts; every solve already runs on one thread, so
    /// outputs are bitwise reproducible with or without it.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, writing VTK snapshots and the diagnostics CSV.
    Run {
        config: PathBuf,
        /// Output directory (default: the scenario's `[output] dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a scenario and print it normalized to SI units.
    Validate { config: PathBuf },
    /// Run several schemes on the same scenario and write a side-by-side CSV.
    Compare {
        config: PathBuf,
        /// Comma-separated scheme list.
        #[arg(long, value_delimiter = ',', default_value = "pimpes,hfimpes")]
        schemes: Vec<String>,
        /// Comma-separated fixed time steps in days; each scheme runs once per step.
        #[arg(long, value_delimiter = ',')]
        dt_sweep: Option<Vec<f64>>,
        /// CSV path (default: `<output dir>/compare.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve_out(config: &Path, scenario: &Scenario, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| {
        let dir = driver::output_dir(scenario);
        if dir.is_absolute() {
            dir
        } else {
            config.parent().unwrap_or(Path::new(".")).join(dir)
        }
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { config } => {
            let scenario = Scenario::load(&config)?;
            scenario.build()?;
            print!("{}", scenario.to_toml());
        }
        Command::Run { config, out } => {
            let scenario = Scenario::load(&config)?;
            let dir = resolve_out(&config, &scenario, out);
            info!("running {} into {}", scenario.name, dir.display());
            let (_, result, csv) = driver::run_scenario(&scenario, &dir)?;
            println!(
                "{}: {} steps to t = {} day, eta = {:e}, violations = {}, max ledger defect = {:e}",
                scenario.name,
                result.records.len(),
                result.state.t / DAY,
                result.eta,
                result.ledger.violations,
                result.ledger.max_defect()
            );
            println!("diagnostics: {}", csv.display());
        }
        Command::Compare { config, schemes, dt_sweep, out } => {
            let scenario = Scenario::load(&config)?;
            let kinds = schemes.iter().map(|s| s.parse::<SchemeKind>()).collect::<Result<Vec<_>>>()?;
            let sweep: Option<Vec<f64>> = dt_sweep.map(|v| v.iter().map(|d| d * DAY).collect());
            if let Some(d) = &sweep {
                if d.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::Config("--dt-sweep: steps must be positive".into()));
                }
            }
            let comparison = driver::compare(&scenario, &kinds, sweep.as_deref())?;
            let path = match out {
                Some(p) => p,
                None => resolve_out(&config, &scenario, None).join("compare.csv"),
            };
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.to_path_buf(), source: e })?;
            }
            let csv = comparison.to_csv();
            std::fs::write(&path, &csv).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            print!("{csv}");
            println!("comparison: {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
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
