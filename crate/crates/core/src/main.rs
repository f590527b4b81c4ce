use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adcbits::campaign::{self, CampaignConfig};
use adcbits::quantizer;

#[derive(Parser)]
#[command(name = "adcbits", version, about = "Per-antenna ADC bit allocation campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Only run scenarios whose name contains this string (repeatable).
        #[arg(long)]
        scenario: Vec<String>,
    },
    /// Write the quantizer codebooks for 1..=16 bits as CSV.
    Codebooks {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> adcbits::Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            workers,
            scenario,
        } => {
            let mut cfg = CampaignConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| adcbits::Error::InvalidConfig("no output directory (use --out)".into()))?;
            let output = campaign::run_campaign(&cfg, workers, &scenario)?;
            campaign::write_output(&output, &dir)?;
            for o in &output.outcomes {
                println!("{}: {} records, {} failed", o.label, o.records.len(), o.failures.len());
            }
            println!("wrote {} files to {}", output.files.len(), dir.display());
        }
        Command::Codebooks { out } => {
            let books = (1..=quantizer::MAX_QUANTIZER_BITS)
                .map(quantizer::build_codebook)
                .collect::<adcbits::Result<Vec<_>>>()?;
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&out, quantizer::codebooks_csv(&books))?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
