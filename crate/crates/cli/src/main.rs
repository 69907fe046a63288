//! `hybridfg`: hybrid pose-graph SLAM over ambiguous odometry and switchable
//! loop closures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hybridfg::slam::{
    emit_results, generate, parse_dataset, run, write_dataset, OutputPaths, RunConfig, SlamError, SyntheticConfig,
};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    /// `ODOM`/`LOOP` lines, see the README.
    Custom,
}

#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// Dataset to process; without it a synthetic square-loop dataset is generated.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory receiving trajectory, modes, timing and history files.
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Joint hypotheses kept after each elimination.
    #[arg(long, default_value_t = 10)]
    prune: usize,
    /// Dead-mode removal threshold in (0.5, 1].
    #[arg(long, default_value_t = 0.8)]
    dmr_delta: f64,
    /// Hybrid factors between eliminations.
    #[arg(long, default_value_t = 3)]
    elim_every: usize,
    /// Eliminations between relinearized batch passes.
    #[arg(long, default_value_t = 10)]
    relin_every: usize,
    /// Process at most this many dataset entries.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Seed of the synthetic dataset generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Custom)]
    format: Format,
}

const SOLVER_FAILURE: u8 = 1;
const IO_FAILURE: u8 = 2;

fn exit_code(e: &SlamError) -> ExitCode {
    ExitCode::from(if e.is_input_error() { IO_FAILURE } else { SOLVER_FAILURE })
}

fn load(args: &Args) -> Result<Vec<hybridfg::slam::DatasetEntry>, SlamError> {
    match (&args.input, args.format) {
        (Some(path), Format::Custom) => parse_dataset(path),
        (None, _) => {
            let data = generate(&SyntheticConfig { seed: args.seed, ..Default::default() });
            let path = args.output.join("dataset.txt");
            write_dataset(&path, &data.entries)?;
            log::info!("wrote synthetic dataset to {}", path.display());
            Ok(data.entries)
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), SlamError> {
    std::fs::create_dir_all(dir).map_err(|source| SlamError::Io { path: dir.to_path_buf(), source })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HYBRIDFG_LOG", "warn")).init();
    let args = Args::parse();
    let config = RunConfig {
        prune: args.prune,
        dmr_delta: args.dmr_delta,
        elim_every: args.elim_every,
        relin_every: args.relin_every,
        max_steps: args.max_steps,
        ..Default::default()
    };
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    let entries = match create_dir(&args.output).and_then(|_| load(&args)) {
        Ok(entries) => entries,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    log::info!("{} dataset entries", entries.len());
    let paths = OutputPaths::in_dir(&args.output);
    let (result, failure) = match run(&config, &entries) {
        Ok(result) => (result, None),
        Err(e) => (*e.partial, Some(e.error)),
    };
    if let Err(e) = emit_results(&result, &paths) {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    match failure {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("error: {e} (partial results written to {})", args.output.display());
            exit_code(&e)
        }
    }
}
