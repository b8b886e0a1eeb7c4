use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wavepacket::scenario::{builtin, builtin_json, builtin_names, run_scenario, ScenarioConfig, ToleranceProfile};
use wavepacket_cli::{emit_outputs, exit, CliError};

const EXIT_CODES: &str = "\
Exit codes:
  0  success, all checks passed
  1  the run finished but at least one check exceeded its tolerance
  2  configuration error (parse error, invalid field, unknown scenario)
  3  numerical divergence or failed internal validation
  4  capability error (e.g. a kernel in its delta limit)
  5  I/O error
  6  insufficient grid resolution";

#[derive(Parser)]
#[command(name = "wavepacket", version, about = "Gaussian wave packets in time-dependent harmonic potentials", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Default,
    Strict,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a JSON config file or by built-in name.
    #[command(after_help = EXIT_CODES)]
    Run {
        /// Path to a JSON config, or the name of a built-in scenario.
        config: String,
        /// Where to write outputs; overrides `output_dir` in the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "default")]
        tolerance_profile: Profile,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Print the JSON config of a built-in scenario.
    Describe { scenario: String },
}

fn load(config: &str) -> Result<ScenarioConfig, CliError> {
    let path = Path::new(config);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return Ok(ScenarioConfig::from_json(&text)?);
    }
    Ok(builtin(config)?)
}

fn run(config: &str, output_dir: Option<PathBuf>, profile: Profile) -> Result<i32, CliError> {
    let cfg = load(config)?;
    let profile = match profile {
        Profile::Default => ToleranceProfile::Default,
        Profile::Strict => ToleranceProfile::Strict,
    };
    let results = run_scenario(&cfg, profile)?;
    let dir = output_dir
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let written = emit_outputs(&results, &dir)?;

    let report = &results.report;
    println!("scenario {}", report.scenario);
    for c in &report.checks {
        println!("  {:<4} {:<36} {:.3e} (tolerance {:.1e})", if c.passed { "ok" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    if let Some(fw) = &report.frozen_width {
        if let Some(d) = fw.det_at_t1 {
            println!("  frozen-width det at t = 1: {d} [{}]", fw.label);
        }
    }
    for w in &report.warnings {
        println!("  warning: {}: {:?}", w.context, w.warning);
    }
    for p in &written {
        println!("  wrote {}", p.display());
    }
    Ok(if report.passed { exit::SUCCESS } else { exit::CHECKS_FAILED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            output_dir,
            tolerance_profile,
        } => run(&config, output_dir, tolerance_profile),
        Command::ListScenarios => {
            for name in builtin_names() {
                let cfg = builtin(name).expect("built-in scenarios are valid");
                println!("{name:<20} {}", cfg.description.unwrap_or_default());
            }
            Ok(exit::SUCCESS)
        }
        Command::Describe { scenario } => match builtin_json(&scenario) {
            Some(json) => {
                print!("{json}");
                Ok(exit::SUCCESS)
            }
            None => Err(builtin(&scenario).unwrap_err().into()),
        },
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
