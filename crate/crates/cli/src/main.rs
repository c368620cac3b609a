use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use emergence_cli::config::RunConfig;
use emergence_cli::export::{export_curves, OutputFormat};
use emergence_cli::manifest::RunManifest;
use emergence_cli::trajectory::run_trajectory;
use emergence_cli::verify::verify_suite;
use emergence_cli::CliError;
use emergence_core::scaling::{paucity_check, theta_from_loss};

/// Skill-emergence analysis toolkit: scaling-law readouts, mixing-bound
/// performance curves, and Monte-Carlo verification on random skill graphs.
#[derive(Parser)]
#[command(name = "emergence", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON); defaults are built in.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; some commands print to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trials-per-point override for simulation.
    #[arg(long)]
    trials: Option<u32>,
    /// Output format for plot/report data.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Export performance-curve plot data (one file per curve plus index).
    Curve(Common),
    /// Run a seeded trajectory: scaling → error fraction → competence.
    Simulate(Common),
    /// Run the cross-module verification suite.
    Verify(Common),
    /// Print scaling-law readouts for the configured schedule.
    Scaling(Common),
    /// Tuple-coverage accounting: corpus bound vs tuple count.
    Paucity(Common),
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    RunConfig::load(common.config.as_deref(), common.seed, common.trials)
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn print_manifest_summary(manifest: &RunManifest, out: &Path) {
    for record in &manifest.outputs {
        println!("wrote {} ({} bytes)", out.join(&record.path).display(), record.bytes);
    }
    println!(
        "manifest: {} (seed {})",
        out.join(emergence_cli::manifest::MANIFEST_FILE).display(),
        manifest.master_seed
    );
}

#[derive(Serialize)]
struct ScalingRow {
    params: f64,
    tokens: f64,
    loss: f64,
    excess_entropy: f64,
    delta: f64,
    theta: f64,
    applicable: bool,
}

fn scaling_rows(config: &RunConfig) -> Result<Vec<ScalingRow>, CliError> {
    config
        .schedule
        .iter()
        .map(|point| {
            let loss = config.scaling_law.loss(point.params, point.tokens)?;
            let excess = config.scaling_law.excess_entropy(point.params, point.tokens)?;
            let delta = point.delta_override.unwrap_or(excess);
            let theta = theta_from_loss(delta)?;
            Ok(ScalingRow {
                params: point.params,
                tokens: point.tokens,
                loss,
                excess_entropy: excess,
                delta,
                theta,
                applicable: theta < 1.0,
            })
        })
        .collect()
}

fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("params,tokens,loss,excess_entropy,delta,theta,applicable\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.params, r.tokens, r.loss, r.excess_entropy, r.delta, r.theta, r.applicable
        ));
    }
    out
}

fn emit(
    common: &Common,
    file_name: &str,
    text: &str,
) -> Result<(), CliError> {
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            let path = dir.join(file_name);
            std::fs::write(&path, text.as_bytes()).map_err(|e| CliError::io(&path, e))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Validation(format!("serialization: {e}")))
}

fn run() -> Result<(), CliError> {
    let cli = Cli::try_parse().map_err(|e| {
        // clap's rendered help/usage goes to the user as-is.
        e.print().ok();
        CliError::Validation("invalid arguments".to_string())
    })?;

    match &cli.command {
        Command::Curve(common) => {
            let config = load(common)?;
            let out = out_dir(common);
            let format = match common.format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            let manifest = export_curves(&config, &out, format)?;
            print_manifest_summary(&manifest, &out);
            Ok(())
        }
        Command::Simulate(common) => {
            let config = load(common)?;
            let out = out_dir(common);
            let (manifest, report) = run_trajectory(&config, &out)?;
            for point in &report.points {
                if point.applicable {
                    let skills = point
                        .kprime_reports
                        .iter()
                        .find(|r| r.kprime == 1)
                        .map(|r| r.pooled.mean)
                        .unwrap_or(f64::NAN);
                    println!(
                        "point {}: loss {:.4}, theta {:.4}, mean skill competence {:.4}",
                        point.index, point.loss, point.theta, skills
                    );
                } else {
                    println!(
                        "point {}: loss {:.4}, theta {:.4} — theory inapplicable",
                        point.index, point.loss, point.theta
                    );
                }
            }
            print_manifest_summary(&manifest, &out);
            Ok(())
        }
        Command::Verify(common) => {
            let config = load(common)?;
            let report = verify_suite(&config)?;
            let text = to_json_pretty(&report)?;
            emit(common, "verify_report.json", &text)?;
            for check in &report.checks {
                let status = if check.skipped {
                    "SKIP"
                } else if check.ok {
                    "PASS"
                } else {
                    "FAIL"
                };
                println!(
                    "{status} {} ({}/{}) {}",
                    check.name, check.passed, check.ran, check.details
                );
            }
            if report.all_ok {
                Ok(())
            } else {
                Err(CliError::CheckFailure(
                    "one or more verification checks failed".to_string(),
                ))
            }
        }
        Command::Scaling(common) => {
            let config = load(common)?;
            let rows = scaling_rows(&config)?;
            match common.format {
                Format::Csv => emit(common, "scaling.csv", &scaling_csv(&rows)),
                Format::Json => emit(common, "scaling.json", &to_json_pretty(&rows)?),
            }
        }
        Command::Paucity(common) => {
            let config = load(common)?;
            let p = config.paucity;
            let check = paucity_check(
                p.tokens,
                p.per_decade_multiplier,
                p.skill_count,
                p.tuple_size,
                p.margin_decades,
            )?;
            emit(common, "paucity.json", &to_json_pretty(&check)?)
        }
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(error) => {
            eprintln!("error: {error}");
            std::process::exit(error.exit_code());
        }
    }
}
