//! Batch front door. Exit codes: 0 ok, 2 validation, 3 numerical failure,
//! 4 I/O. Failures print one machine-readable JSON object to stdout.

use clap::{Parser, Subcommand};
use rqhd_lab::config::parse_config;
use rqhd_lab::error::Error;
use rqhd_lab::experiment::run_experiment;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "rqhd-lab", version, about = "Klein-Gordon-Poisson / RQHD simulation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Parse and validate a config file without running it.
    Validate { config: PathBuf },
    /// Summarize the artifacts of a finished run directory.
    Report { dir: PathBuf },
}

fn read_config(path: &Path) -> Result<(rqhd_lab::config::ExperimentConfig, String), Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
    let cfg = parse_config(&text)?;
    Ok((cfg, text))
}

fn report_dir(dir: &Path) -> Result<(), Error> {
    let manifest_path = dir.join("manifest.json");
    let manifest = std::fs::read_to_string(&manifest_path)
        .map_err(|e| Error::io(format!("reading {}", manifest_path.display()), e))?;
    println!("manifest: {}", manifest.trim());
    for name in [
        "kg_report.json",
        "rqhd_report.json",
        "equivalence.json",
        "summary.json",
        "identities.json",
    ] {
        let p = dir.join(name);
        if p.exists() {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| Error::io(format!("reading {}", p.display()), e))?;
            println!("{name}: {}", text.trim());
        }
    }
    for name in ["charge.csv", "norm_history.csv", "study.csv"] {
        let p = dir.join(name);
        if p.exists() {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| Error::io(format!("reading {}", p.display()), e))?;
            let lines: Vec<&str> = text.lines().collect();
            println!("{name}: {} rows", lines.len().saturating_sub(1));
            if lines.len() > 1 {
                println!("  {}", lines[0]);
                println!("  first: {}", lines[1]);
                println!("  last:  {}", lines[lines.len() - 1]);
            }
        }
    }
    Ok(())
}

fn main() {
    if let Ok(threads) = std::env::var("RQHD_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, output_dir } => read_config(config).and_then(|(cfg, text)| {
            run_experiment(&cfg, &text, output_dir.as_deref()).map(|summary| {
                println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            })
        }),
        Command::Validate { config } => read_config(config).map(|(cfg, _)| {
            println!(
                "{}",
                serde_json::json!({ "valid": true, "mode": format!("{:?}", cfg.mode) })
            );
        }),
        Command::Report { dir } => report_dir(dir),
    };
    if let Err(err) = outcome {
        let code = err.exit_code();
        let payload = serde_json::json!({
            "error": err.to_string(),
            "exit_code": code,
        });
        println!("{payload}");
        std::process::exit(code);
    }
}
