use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lrad::harness::{
    apply_overrides, fmt_f64, init_thread_pool, parse_descriptor, run, theory_checks, HarnessError, Overrides,
    TheorySizes,
};
use lrad::rng::{tag, RngStream, StreamId};

#[derive(Parser)]
#[command(name = "lrad", version, about = "Adaptive learning-rate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON descriptor.
    Run {
        descriptor: PathBuf,
        /// Output directory, overriding the descriptor's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of seeds, overriding the descriptor's `seeds`.
        #[arg(long)]
        seeds: Option<usize>,
        /// Write bias-corrected Adam moments back and share them across grid
        /// candidates.
        #[arg(long)]
        literal_adam: bool,
    },
    /// Run the theory checks with built-in sizes and print a table.
    Verify {
        /// Root seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn verify(seed: u64) -> Result<(), HarnessError> {
    let stream = RngStream::new(seed, StreamId::new(tag::THEORY, 0, 0));
    let checks = theory_checks(&TheorySizes::default(), &stream)?;
    let mut failed = Vec::new();
    for c in &checks {
        println!(
            "{:<28} {:>24} {:>24}  {}",
            c.name,
            fmt_f64(c.value),
            fmt_f64(c.threshold),
            if c.pass { "PASS" } else { "FAIL" }
        );
        if !c.pass {
            failed.push(c.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::ChecksFailed(failed.join(", ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_thread_pool().and_then(|()| match cli.command {
        Command::Run { descriptor, out, seeds, literal_adam } => parse_descriptor(&descriptor)
            .and_then(|d| apply_overrides(d, &Overrides { output_dir: out, seeds, literal_adam }))
            .and_then(|d| run(&d))
            .map(|report| {
                for f in &report.files {
                    println!("{}", report.output_dir.join(f).display());
                }
            }),
        Command::Verify { seed } => verify(seed),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lrad: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
