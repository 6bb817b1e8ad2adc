use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "randex", version, about = "Randomization tests for multi-arm experiments")]
pub struct Cli {
    /// Cap on worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fisher randomization test on observed data.
    Test(TestArgs),
    /// Closed-form finite-population quantities for a potential-outcome table.
    Theory(TheoryArgs),
    /// Rejection-rate study for a scenario.
    Simulate(SimulateArgs),
    /// List built-in scenarios, or print one as TOML.
    Catalog(CatalogArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DegenerateArg {
    Count,
    Skip,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// CSV with a `treatment,outcome` header.
    #[arg(required_unless_present = "example")]
    pub input: Option<PathBuf>,

    /// Use a bundled example instead of a file: montgomery, angrist-summary.
    #[arg(long, conflicts_with = "input")]
    pub example: Option<String>,

    /// f, x2, t2, dim, or `pairwise A B` with arm labels or 1-based arm numbers.
    #[arg(long, num_args = 1..=3, required = true, value_names = ["NAME", "A", "B"])]
    pub statistic: Vec<String>,

    #[arg(long, value_enum, default_value = "mc")]
    pub mode: ModeArg,

    /// Monte Carlo replications.
    #[arg(long, default_value_t = 2000)]
    pub reps: u64,

    #[arg(long, env = "RANDEX_SEED")]
    pub seed: Option<u64>,

    /// How replicates with an undefined statistic are treated.
    #[arg(long, value_enum, default_value = "count")]
    pub degenerate: DegenerateArg,

    /// Largest number of assignments exact mode will enumerate.
    #[arg(long, default_value_t = randex::design::DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,

    /// Write the JSON document here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportArg {
    Expectations,
    Msgap,
    Constants,
    Mixture,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Headerless N×J CSV of potential outcomes.
    pub population: PathBuf,

    /// Group sizes `N1,...,NJ`.
    #[arg(long)]
    pub design: String,

    #[arg(long, value_enum)]
    pub report: ReportArg,

    /// Also average over every assignment and compare.
    #[arg(long)]
    pub verify_enumerate: bool,

    #[arg(long, default_value_t = randex::design::DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,

    /// Monte Carlo draws for the mixture tail.
    #[arg(long, default_value_t = randex::asymptotics::DEFAULT_MIXTURE_DRAWS)]
    pub draws: u64,

    #[arg(long, env = "RANDEX_SEED")]
    pub seed: Option<u64>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["scenario", "config"])))]
pub struct SimulateArgs {
    /// Built-in scenario id, e.g. case-3.1.
    #[arg(long)]
    pub scenario: Option<String>,

    /// TOML or JSON scenario file.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Comma-separated statistics.
    #[arg(long, default_value = "f,x2")]
    pub stats: String,

    #[arg(long, env = "RANDEX_SEED")]
    pub seed: Option<u64>,

    /// Directory for per-statistic JSON and histogram CSV files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Simulated experiments per design.
    #[arg(long)]
    pub reps: Option<usize>,

    /// Randomization draws per test.
    #[arg(long)]
    pub draws: Option<u64>,

    #[arg(long)]
    pub alpha: Option<f64>,

    /// Only designs with this many units.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Print this scenario as TOML.
    pub id: Option<String>,
}
