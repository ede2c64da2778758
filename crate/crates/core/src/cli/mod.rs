//! The `scatterlab` command line.

pub mod acceptance;
pub mod config;
pub mod output;
pub mod run;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::ScenarioConfig;
pub use output::ResultRecord;

use crate::ScatterError;

pub const EXIT_OK: i32 = 0;
/// Some acceptance criterion failed.
pub const EXIT_ACCEPTANCE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const DEFAULT_OUT: &str = "scatterlab-out";

#[derive(Parser, Debug)]
#[command(name = "scatterlab", version, about = "Numerical scattering experiments for H = -Δ + v")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the scenario described by a JSON config.
    Run {
        config: PathBuf,
        /// Fail with exit code 3 when any numerical flag is raised.
        #[arg(long)]
        strict: bool,
        /// Output directory; overrides the config's "output".
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every acceptance criterion and write the report.
    Acceptance {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the JSON schema of scenario configs.
    Schema,
}

/// Exit code for an error raised while running.
pub fn exit_code(e: &ScatterError) -> i32 {
    match e {
        ScatterError::Parameter(_) | ScatterError::Domain(_) | ScatterError::Config(_) => EXIT_VALIDATION,
        _ => EXIT_NUMERICAL,
    }
}

/// Caps the global pool from `SCATTERLAB_THREADS` (0 or unset: automatic).
pub fn configure_threads() -> Result<(), ScatterError> {
    let Ok(raw) = std::env::var("SCATTERLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| ScatterError::Config(format!("SCATTERLAB_THREADS must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        // A pool built earlier in the process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

/// Parses, runs and writes one scenario; returns the exit code.
pub fn run_file(path: &Path, strict: bool, out: Option<&Path>) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_VALIDATION;
        }
    };
    let cfg = match ScenarioConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_VALIDATION;
        }
    };
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.output().map(PathBuf::from)).unwrap_or_else(|| DEFAULT_OUT.into());
    run_config(&cfg, strict, &dir)
}

pub fn run_config(cfg: &ScenarioConfig, strict: bool, dir: &Path) -> i32 {
    let record = match run::execute(cfg, strict) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match record.write(dir) {
        Ok(paths) => report_written(&paths),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    }
    for f in &record.provenance.flags {
        eprintln!("flag: {f}");
    }
    if let ScenarioConfig::Acceptance(_) = cfg {
        let failed = record.summary["failed"].as_u64().unwrap_or(0);
        if failed > 0 {
            return EXIT_ACCEPTANCE;
        }
    }
    if strict && !record.provenance.flags.is_empty() {
        return EXIT_NUMERICAL;
    }
    EXIT_OK
}

/// Entry point of the binary.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_VALIDATION;
    }
    match cli.command {
        Command::Run { config, strict, out } => run_file(&config, strict, out.as_deref()),
        Command::Acceptance { out } => {
            let cfg = ScenarioConfig::Acceptance(Default::default());
            run_config(&cfg, false, out.as_deref().unwrap_or(Path::new(DEFAULT_OUT)))
        }
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&ScenarioConfig::schema()).expect("schema serializes"));
            EXIT_OK
        }
    }
}
