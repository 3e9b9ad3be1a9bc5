use std::path::PathBuf;
use std::process::ExitCode;

use aeromap_cli::commands::{cmd_image, cmd_synth, cmd_validate};
use aeromap_cli::selftest::run_selftest;
use aeromap_cli::{CliError, CliResult, RunConfig};
use aeromap_core::imaging::ImagingMethod;
use clap::{Args, Parser, Subcommand};

/// Aeroacoustic source-power imaging in uniform subsonic flow.
#[derive(Parser, Debug)]
#[command(name = "aeromap", version, about)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check medium, geometry and configuration; exit 1 on any violation.
    Validate(RunArgs),
    /// Synthesise data and write cross-spectral matrices.
    Synth(RunArgs),
    /// Build band-averaged source maps from the CSM files.
    Image(RunArgs),
    /// Run the built-in invariant suites.
    Selftest {
        /// Alternative Bessel reference table.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Relative eigenvalue positivity threshold.
    #[arg(long)]
    tau: Option<f64>,
    /// Maximum number of retained eigenpairs.
    #[arg(long)]
    rank_cap: Option<usize>,
    /// Third-octave band centre in Hz; replaces the configured bands.
    #[arg(long = "band")]
    bands: Vec<f64>,
    /// Imaging method; replaces the configured methods.
    #[arg(long = "method")]
    methods: Vec<ImagingMethod>,
}

impl RunArgs {
    fn load(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.output {
            cfg.output = o.to_string_lossy().into_owned();
        }
        if let Some(t) = self.tau {
            cfg.imaging.tau = t;
        }
        if self.rank_cap.is_some() {
            cfg.imaging.rank_cap = self.rank_cap;
        }
        if !self.bands.is_empty() {
            cfg.frequencies.bands = self.bands.clone();
        }
        if !self.methods.is_empty() {
            cfg.imaging.methods = self.methods.clone();
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Validate(args) => {
            let cfg = args.load()?;
            let violations = cmd_validate(&cfg);
            if violations.is_empty() {
                println!("ok");
                return Ok(());
            }
            for v in &violations {
                println!("violation: {v}");
            }
            Err(CliError::Validation(format!("{} violation(s)", violations.len())))
        }
        Command::Synth(args) => {
            let cfg = args.load()?;
            let summary = cmd_synth(&cfg)?;
            println!("provenance {}", summary.provenance);
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Image(args) => {
            let cfg = args.load()?;
            for r in cmd_image(&cfg)? {
                print!("{} {} -> {}", r.method, r.label, r.path.display());
                if let Some(c) = r.contrast {
                    print!("  ratio {:.4e} jaccard {:.3}", c.ratio, c.jaccard_at_half);
                }
                println!();
            }
            Ok(())
        }
        Command::Selftest { fixtures } => {
            let results = run_selftest(fixtures.as_deref());
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Validation(format!("{failed} selftest suite(s) failed")))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
