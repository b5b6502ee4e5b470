//! Command-line front end tying the library into reproducible experiment
//! runs: preprocess, synth, train, eval, topics, latents, knn.
//!
//! Every command resolves its settings as defaults, then the --config
//! key=value file, then flags (flags win), and is deterministic given
//! inputs, settings, and seed. Exit codes: 0 success, 2 input error,
//! 3 incompatible inputs (model/vocabulary/checkpoint mismatches),
//! 4 numeric failure.

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;
use cliniseq_core::Error;

pub mod commands {
    pub mod eval;
    pub mod knn;
    pub mod latents;
    pub mod preprocess;
    pub mod synth;
    pub mod topics;
    pub mod train;
}
pub mod config;
pub mod dataset;

#[derive(Parser)]
#[command(
    name = "cliniseq",
    version,
    about = "Sequential clinical-text outcome prediction toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Turn raw note and metadata CSVs into corpus files
    Preprocess(commands::preprocess::PreprocessArgs),
    /// Generate a synthetic corpus with known topics and outcome signal
    Synth(commands::synth::SynthArgs),
    /// Train a model; writes model.clnt and metrics.csv
    Train(commands::train::TrainArgs),
    /// Per-time-point AUC of a checkpoint on one corpus split
    Eval(commands::eval::EvalArgs),
    /// Top-weighted words per topic
    Topics(commands::topics::TopicsArgs),
    /// Export per-time-point latent vectors as TSV
    Latents(commands::latents::LatentsArgs),
    /// Neighborhood-overlap score between latent spaces
    Knn(commands::knn::KnnArgs),
}

/// Documented exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Incompatible(_) | Error::DimMismatch { .. } => 3,
        Error::Numeric(_) => 4,
        _ => 2,
    }
}

/// Caps rayon's worker count when CLINISEQ_THREADS is set. A later call in
/// the same process cannot resize the pool; the build error is ignored.
fn configure_threads() -> cliniseq_core::Result<()> {
    let value = match std::env::var("CLINISEQ_THREADS") {
        Err(_) => return Ok(()),
        Ok(v) => v,
    };
    let n: usize = value.trim().parse().map_err(|_| {
        Error::InvalidInput(format!(
            "CLINISEQ_THREADS must be a positive integer, got {value:?}"
        ))
    })?;
    if n == 0 {
        return Err(Error::InvalidInput(
            "CLINISEQ_THREADS must be a positive integer, got \"0\"".into(),
        ));
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(command: Command) -> cliniseq_core::Result<()> {
    match command {
        Command::Preprocess(a) => commands::preprocess::run(&a),
        Command::Synth(a) => commands::synth::run(&a),
        Command::Train(a) => commands::train::run(&a),
        Command::Eval(a) => commands::eval::run(&a),
        Command::Topics(a) => commands::topics::run(&a),
        Command::Latents(a) => commands::latents::run(&a),
        Command::Knn(a) => commands::knn::run(&a),
    }
}

/// Runs the CLI on explicit arguments and returns the process exit code.
pub fn run_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match configure_threads().and_then(|()| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(exit_code(&Error::InvalidInput("x".into())), 2);
        assert_eq!(exit_code(&Error::EmptyInput("x".into())), 2);
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::Incompatible("x".into())), 3);
        assert_eq!(
            exit_code(&Error::DimMismatch {
                context: "t",
                expected: 1,
                got: 2
            }),
            3
        );
        assert_eq!(exit_code(&Error::Numeric("x".into())), 4);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
