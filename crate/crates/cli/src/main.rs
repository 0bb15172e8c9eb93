use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mtm_ist::io::Format;
use mtm_ist_cli::*;

#[derive(Parser, Debug)]
#[command(name = "mtm-ist", version, about = "Direct and inverse scattering for the massive Thirring model")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (falls back to MTM_IST_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output table format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Input file or directory, overriding io.input.
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Output directory, overriding io.output_dir.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Bin,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scattering and reflection data of a potential.
    Direct,
    /// Advance stored reflection data by time.T.
    EvolveSpectral,
    /// Reconstruct a potential from stored reflection data.
    Inverse,
    /// Moment tables of both Riemann-Hilbert problems (binary).
    Moments,
    /// Direct, spectral evolution, inverse; checks tolerances.
    Roundtrip {
        /// Compare against the split-step PDE evolution.
        #[arg(long)]
        cross_check_pde: bool,
    },
    /// Isospectrality check against the split-step PDE evolver.
    PdeCheck,
    /// Weighted norms of a potential.
    Norms,
    /// Write the configured Gaussian datum.
    MakeDatum,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        cfg.io.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Bin => Format::Bin,
        };
    }
    if let Some(p) = cli.input {
        cfg.io.input = Some(p);
    }
    if let Some(p) = cli.output {
        cfg.io.output_dir = p;
    }
    cfg.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(cli.workers) {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Direct => cmd_direct(&cfg),
        Command::EvolveSpectral => cmd_evolve_spectral(&cfg),
        Command::Inverse => cmd_inverse(&cfg),
        Command::Moments => cmd_moments(&cfg),
        Command::Roundtrip { cross_check_pde } => cmd_roundtrip(&cfg, cross_check_pde),
        Command::PdeCheck => cmd_pde_check(&cfg).map(|r| println!("{}", serde_json::to_string(&r).unwrap())),
        Command::Norms => cmd_norms(&cfg).map(|r| println!("{}", serde_json::to_string(&r).unwrap())),
        Command::MakeDatum => cmd_make_datum(&cfg),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mtm-ist: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
