mod compare;
mod detect;
mod fix_eval;
mod inspect;
mod metrics;
mod mutate;
mod oracle;
mod sample;
mod stability;

use crate::cli::Command;
use crate::error::CliError;

/// Runs one subcommand and returns its report.
pub fn run(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Oracle(a) => oracle::run(a),
        Command::Detect(a) => detect::run_dataset(a),
        Command::DiffDetect(a) => detect::run_diffs(a),
        Command::FixEval(a) => fix_eval::run(a),
        Command::Metrics(a) => metrics::run(a),
        Command::Stability(a) => stability::run(a),
        Command::Sample(a) => sample::run(a),
        Command::Compare(a) => compare::run(a),
        Command::Mutate(a) => mutate::run(a),
        Command::Extract(a) => inspect::extract(a),
        Command::Enumerate(a) => inspect::enumerate(a),
    }
}
