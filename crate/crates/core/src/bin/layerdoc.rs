use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use layerdoc::pipeline::{self, SynthOptions};
use layerdoc::samples::{write_sample_catalog, SampleCounts};

#[derive(Debug, Parser)]
#[command(name = "layerdoc", version, about = "Layered synthetic document pages with pixel-exact ground truth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate pages, masks, CVAT annotations and a dataset manifest.
    Synth {
        /// TOML config; defaults are used for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Catalog manifest (asset paths resolve against its directory).
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pages: u64,
        /// Overrides master_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Disable similarity gating and aspect-preserving scaling.
        #[arg(long)]
        no_aesthetic: bool,
    },
    /// Score predicted masks against ground-truth masks or a CVAT XML file.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Summarize a dataset manifest.
    Inspect {
        #[arg(long)]
        manifest: PathBuf,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write a procedurally drawn demo catalog.
    SampleCatalog {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        text: usize,
        #[arg(long, default_value_t = 12)]
        figures: usize,
        #[arg(long, default_value_t = 6)]
        tables: usize,
    },
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Synth {
            config,
            catalog,
            out,
            pages,
            seed,
            no_aesthetic,
        } => {
            let outcome = pipeline::cmd_synth(&SynthOptions {
                config_path: config,
                catalog_path: catalog,
                out_dir: out.clone(),
                num_pages: pages,
                master_seed: seed,
                no_aesthetic,
                workers: None,
            })?;
            println!(
                "wrote {} page(s) to {}",
                outcome.manifest.pages.len(),
                out.display()
            );
            if !outcome.is_success() {
                for f in &outcome.failures {
                    eprintln!("page {} failed: {}", f.page_index, f.error);
                }
                eprintln!("{} page(s) failed, see {}", outcome.failures.len(), pipeline::FAILURES_FILE);
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Evaluate { pred, truth, report } => {
            let result = pipeline::cmd_evaluate(&pred, &truth, &report)?;
            for page in result.pages.iter().filter(|p| p.error.is_some()) {
                eprintln!("{}: {}", page.name, page.error.as_deref().unwrap_or_default());
            }
            let unmatched = result.unmatched_predictions.len() + result.unmatched_truth.len();
            if unmatched > 0 {
                eprintln!("{unmatched} unmatched page(s)");
            }
            match &result.corpus.metrics {
                Some(m) => println!(
                    "{} page(s): accuracy {:.4}, macro P {:.4} R {:.4} F1 {:.4}",
                    result.corpus.pages_evaluated, m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1
                ),
                None => println!("no page could be evaluated"),
            }
        }
        Command::Inspect { manifest, json } => {
            let summary = pipeline::cmd_inspect(&manifest)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                println!("{summary}");
            }
        }
        Command::SampleCatalog {
            out,
            seed,
            text,
            figures,
            tables,
        } => {
            let path = write_sample_catalog(&out, seed, SampleCounts { text, figures, tables })
                .with_context(|| format!("writing sample catalog to {}", out.display()))?;
            println!("{}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
