use std::ops::Range;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "risfad", version, about = "Dipole-model RIS channel computation and fast realization sweeps")]
pub struct Cli {
    /// Scenario JSON file; the bundled demo scenario is used if omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub scenario: Option<PathBuf>,

    /// Output file; standard output if omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Recompute every realization from scratch (assembly + full solve).
    #[arg(long, global = true)]
    pub scratch: bool,

    /// Use the full canonical-basis solve instead of the reduced basis.
    #[arg(long, global = true)]
    pub oracle: bool,

    /// Override the pass/fail tolerance of validate and bench.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tolerance: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Channel matrix for one configuration at each frequency.
    Channel(ChannelArgs),
    /// Channels for many 1-bit RIS configurations.
    SweepConfig(SweepConfigArgs),
    /// Channels for a list of uniform environment shifts.
    SweepLambda(SweepLambdaArgs),
    /// Channels along a trajectory of one primary dipole.
    Trajectory(TrajectoryArgs),
    /// Timing of the update paths against full re-assembly.
    Bench(BenchArgs),
    /// Randomized equivalence checks of every update path.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON file (same as --scenario).
    #[arg(value_name = "SCENARIO")]
    pub path: Option<PathBuf>,

    /// Frequency indices into the scenario grid: `i`, `a..b` or `a..=b`.
    #[arg(long, value_name = "RANGE", value_parser = parse_index_range)]
    pub freq_index: Option<Range<usize>>,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    /// RIS configuration as a bit string (default: all zeros).
    #[arg(long)]
    pub bits: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepConfigArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    /// Baseline configuration (default: all zeros).
    #[arg(long)]
    pub baseline: Option<String>,

    /// File with one bit string per line.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["random", "exhaustive"])]
    pub configs: Option<PathBuf>,

    /// Number of seeded random configurations.
    #[arg(long, value_name = "N", conflicts_with = "exhaustive")]
    pub random: Option<usize>,

    /// All 2^N_S configurations.
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Debug, Args)]
pub struct SweepLambdaArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    #[arg(long)]
    pub bits: Option<String>,

    /// Shift as `re,im` (or `re`); repeatable.
    #[arg(long = "lambda", value_name = "RE,IM", allow_hyphen_values = true)]
    pub lambdas: Vec<String>,

    /// File with one `re,im` pair per line.
    #[arg(long, value_name = "PATH")]
    pub lambda_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    #[arg(long)]
    pub bits: Option<String>,

    /// Mobile dipole: `tx:I`, `rx:I`, `ris:I` or `env:I` (dynamic only).
    #[arg(long, value_name = "GROUP:INDEX")]
    pub dipole: String,

    /// CSV file of `x,y` positions in meters.
    #[arg(long, value_name = "PATH")]
    pub positions: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_name = "SCENARIO")]
    pub path: Option<PathBuf>,

    /// Benchmark a seeded random scenario with this many dipoles instead.
    #[arg(long, value_name = "N")]
    pub synthetic: Option<usize>,

    #[arg(long, default_value_t = 200)]
    pub realizations: usize,

    /// Largest number of RIS elements changed per Woodbury realization.
    #[arg(long, default_value_t = 8)]
    pub max_flips: usize,

    /// Realizations per repeat of the full re-assembly baseline.
    #[arg(long, default_value_t = 5)]
    pub baseline_realizations: usize,

    /// Realizations checked against the oracle per method.
    #[arg(long, default_value_t = 5)]
    pub oracle_samples: usize,

    /// Subset of methods to run.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub methods: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(value_name = "SCENARIO")]
    pub path: Option<PathBuf>,

    /// Random instances per update path.
    #[arg(long, default_value_t = 10)]
    pub instances: usize,

    /// Test hook: perturb every fast result by this relative amount.
    #[arg(long, hide = true, value_name = "EPS")]
    pub inject_fault: Option<f64>,
}

pub fn parse_index_range(s: &str) -> Result<Range<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad index {t:?}: {e}"));
    let r = if let Some((a, b)) = s.split_once("..=") {
        num(a)?..num(b)? + 1
    } else if let Some((a, b)) = s.split_once("..") {
        num(a)?..num(b)?
    } else {
        let i = num(s)?;
        i..i + 1
    };
    if r.is_empty() {
        return Err(format!("empty range {s:?}"));
    }
    Ok(r)
}
