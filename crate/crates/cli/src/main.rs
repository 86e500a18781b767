//! `dfrc`: design, simulate, process, validate and benchmark from a TOML
//! scene configuration.
//!
//! Exit codes: 0 on success, 1 on a validation or runtime failure, 2 on a
//! configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dfrc_cli::pipeline::{run_design, run_simulate};
use dfrc_cli::{run_benchmark, run_pipeline, run_validation, CliError, RunOptions, SceneConfig, Setup};

#[derive(Parser)]
#[command(name = "dfrc", version, about = "DFRC range-Doppler simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design the transmit weight dictionary.
    Design(Common),
    /// Design, then synthesize one data cube.
    Simulate(Common),
    /// Run the range-Doppler methods on a simulated or supplied cube.
    Process {
        #[command(flatten)]
        common: Common,
        /// Process this cube (as written by `simulate`) instead of
        /// synthesizing one.
        #[arg(long)]
        cube: Option<PathBuf>,
    },
    /// Monte-Carlo and algebraic self-checks (small configuration by default).
    Validate(Common),
    /// Time AMPC against JRDAP under CBM and NCBM (reduced configuration by
    /// default).
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// Scene configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of spc_mtd, jrdmf, ampc, jrdap.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run full-dimension AMPC even when N*P exceeds the size guard.
    #[arg(long)]
    allow_large_ampc: bool,
}

impl Common {
    fn resolve(&self, fallback: fn() -> SceneConfig) -> Result<SceneConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => SceneConfig::load(path)?,
            None => fallback(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(methods) = &self.methods {
            config.processing.methods = methods.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))
        .and_then(|_| std::fs::write(path, text))
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design(common) => {
            let config = common.resolve(SceneConfig::default)?;
            let setup = Setup::new(&config)?;
            let artifacts = run_design(&setup, &common.out)?;
            for (k, e) in setup.design.dictionary.entries().iter().enumerate() {
                println!(
                    "entry {k}: sll {:.1} dB, phase {:.4} rad, PSL {:.3} dB",
                    20.0 * e.sll.log10(),
                    e.phase,
                    20.0 * e.achieved_psl.log10()
                );
            }
            println!("wrote {} files to {}", artifacts.files.len(), artifacts.dir.display());
        }
        Command::Simulate(common) => {
            let config = common.resolve(SceneConfig::default)?;
            let setup = Setup::new(&config)?;
            let (artifacts, cube) = run_simulate(&setup, &common.out)?;
            println!(
                "cube P={} L={} N={}; wrote {} files to {}",
                cube.pulses(),
                cube.range_cells(),
                cube.waveform_len(),
                artifacts.files.len(),
                artifacts.dir.display()
            );
        }
        Command::Process { common, cube } => {
            let config = common.resolve(SceneConfig::default)?;
            let setup = Setup::new(&config)?;
            let options = RunOptions {
                cube,
                allow_large_ampc: common.allow_large_ampc,
            };
            let (artifacts, out) = run_pipeline(&setup, &common.out, &options)?;
            for map in &out.maps {
                println!(
                    "{:<8} {:>6} cells  {:.3e} s/cell",
                    map.method().to_string(),
                    map.num_cells(),
                    map.seconds_per_cell()
                );
            }
            println!("wrote {} files to {}", artifacts.files.len(), artifacts.dir.display());
        }
        Command::Validate(common) => {
            let config = common.resolve(SceneConfig::validation_default)?;
            let report = run_validation(&config)?;
            let text = report.to_string();
            print!("{text}");
            write_text(&common.out.join("validation.txt"), &text)?;
            if !report.passed() {
                return Err(CliError::Validation(report.failures().join(", ")));
            }
        }
        Command::Bench(common) => {
            let config = common.resolve(SceneConfig::reduced_default)?;
            let report = run_benchmark(&config, common.allow_large_ampc)?;
            let text = report.to_string();
            print!("{text}");
            write_text(&common.out.join("benchmark.txt"), &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
