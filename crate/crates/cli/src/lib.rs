//! Command-line front end of `risfad`.
//!
//! Exit codes: 0 success, 1 validation failure, 2 input error,
//! 3 numerical failure.

pub mod args;
pub mod bench;
pub mod commands;
pub mod error;
pub mod io;
pub mod validate;

use std::io::Write;
use std::path::Path;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};

use commands::Mode;

fn scenario_path<'a>(cli: &'a Cli, positional: Option<&'a Path>) -> Option<&'a Path> {
    positional.or(cli.scenario.as_deref())
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        // A second build fails if the pool already exists (e.g. in tests); keep the first.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    configure_threads(cli.threads)?;
    let mode = Mode { scratch: cli.scratch, oracle: cli.oracle, seed: cli.seed };
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Channel(a) => {
            let sc = io::load_scenario(scenario_path(cli, a.scenario.path.as_deref()))?;
            let freqs = io::select_freqs(&sc, a.scenario.freq_index.clone())?;
            let bits = io::parse_bits(a.bits.as_deref(), sc.ris.len())?;
            let rows = commands::channel(&sc, &freqs, &bits, mode)?;
            io::write_channels(io::open_output(out)?, &rows, false)
        }
        Command::SweepConfig(a) => {
            let sc = io::load_scenario(scenario_path(cli, a.scenario.path.as_deref()))?;
            let freqs = io::select_freqs(&sc, a.scenario.freq_index.clone())?;
            let baseline = io::parse_bits(a.baseline.as_deref(), sc.ris.len())?;
            let file = a.configs.as_deref().map(|p| io::read_configs(p, sc.ris.len())).transpose()?;
            let configs = commands::sweep_configs(sc.ris.len(), file, a.random, a.exhaustive, cli.seed)?;
            let rows = commands::sweep_config(&sc, &freqs, &baseline, &configs, mode)?;
            io::write_channels(io::open_output(out)?, &rows, false)
        }
        Command::SweepLambda(a) => {
            let sc = io::load_scenario(scenario_path(cli, a.scenario.path.as_deref()))?;
            let freqs = io::select_freqs(&sc, a.scenario.freq_index.clone())?;
            let bits = io::parse_bits(a.bits.as_deref(), sc.ris.len())?;
            let mut lambdas = a.lambdas.iter().map(|s| io::parse_complex(s)).collect::<CliResult<Vec<_>>>()?;
            if let Some(p) = &a.lambda_file {
                lambdas.extend(io::read_lambdas(p)?);
            }
            let rows = commands::sweep_lambda(&sc, &freqs, &bits, &lambdas, mode)?;
            io::write_channels(io::open_output(out)?, &rows, false)
        }
        Command::Trajectory(a) => {
            let sc = io::load_scenario(scenario_path(cli, a.scenario.path.as_deref()))?;
            let freqs = io::select_freqs(&sc, a.scenario.freq_index.clone())?;
            let bits = io::parse_bits(a.bits.as_deref(), sc.ris.len())?;
            let positions = io::read_positions(&a.positions)?;
            let rows = commands::trajectory(&sc, &freqs, &bits, &a.dipole, &positions, mode)?;
            io::write_channels(io::open_output(out)?, &rows, true)
        }
        Command::Bench(a) => {
            let (sc, label) = match (a.synthetic, scenario_path(cli, a.path.as_deref())) {
                (Some(n), _) => (bench::synthetic_scenario(n, cli.seed)?, format!("synthetic-{n}")),
                (None, Some(p)) => (io::load_scenario(Some(p))?, p.display().to_string()),
                (None, None) => (io::load_scenario(None)?, "demo".to_string()),
            };
            let methods = if a.methods.is_empty() {
                bench::Method::ALL.to_vec()
            } else {
                a.methods.iter().map(|m| m.parse()).collect::<CliResult<Vec<_>>>()?
            };
            let opts = bench::BenchOptions {
                realizations: a.realizations,
                max_flips: a.max_flips,
                baseline_realizations: a.baseline_realizations,
                oracle_samples: a.oracle_samples,
                methods,
                tolerance: cli.tolerance.unwrap_or(1e-8),
                seed: cli.seed,
            };
            let report = bench::run(&sc, &label, &opts)?;
            eprint!("{}", report.table());
            let mut w = io::open_output(out)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
            Ok(())
        }
        Command::Validate(a) => {
            let sc = io::load_scenario(scenario_path(cli, a.path.as_deref()))?;
            let opts = validate::ValidateOptions {
                instances: a.instances,
                seed: cli.seed,
                tolerance: cli.tolerance,
                inject_fault: a.inject_fault,
            };
            let report = validate::run(&sc, &opts)?;
            let mut w = io::open_output(out)?;
            w.write_all(report.render().as_bytes())?;
            w.flush()?;
            if report.passed() {
                Ok(())
            } else {
                let n: usize = report.paths.iter().map(|p| p.failures.len()).sum();
                Err(CliError::Validation(format!("{n} instance(s) outside tolerance")))
            }
        }
    }
}
