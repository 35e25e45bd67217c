//! Experiment configuration. Every subcommand's flags double as a TOML
//! table, so a config file and a command line describe the same run.

use std::path::PathBuf;

use clap::{Args, FromArgMatches, Subcommand, ValueEnum};
use perclab::engine::Mode;
use perclab::estimators::Locator;
use perclab::fk::Boundary;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 1;

/// A complete, serializable run description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(flatten)]
    pub command: Command,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Describe a lattice, its dual or its matching graph.
    Lattice(LatticeArgs),
    /// Estimate the critical probability from wrapping crossings.
    Pc(PcArgs),
    /// Estimate p_c on a lattice and its dual (bond) or matching graph (site).
    DualitySum(PcArgs),
    /// Probability of reaching distance M from the disc of radius R.
    Theta(ThetaArgs),
    /// Arc events on a disc: balance angle, four-arm event, Harris check.
    Zhang(ZhangArgs),
    /// Site percolation on random triangulations of the square lattice.
    TriR(TriArgs),
    /// Heat-bath sampling of the random-cluster model.
    Fk(FkArgs),
    /// Run the built-in oracle and invariant suites.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lattice(_) => "lattice",
            Command::Pc(_) => "pc",
            Command::DualitySum(_) => "duality-sum",
            Command::Theta(_) => "theta",
            Command::Zhang(_) => "zhang",
            Command::TriR(_) => "tri-r",
            Command::Fk(_) => "fk",
            Command::Verify(_) => "verify",
        }
    }
}

/// Flag defaults, so a TOML table may omit anything the command line may.
fn flag_defaults<T: Args + FromArgMatches>() -> T {
    let cmd = T::augment_args(clap::Command::new("defaults"));
    T::from_arg_matches(&cmd.get_matches_from(["defaults"])).expect("every flag has a default")
}

macro_rules! defaults_from_flags {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                flag_defaults()
            }
        }
    )*};
}

defaults_from_flags!(LatticeArgs, PcArgs, ThetaArgs, ZhangArgs, TriArgs, FkArgs, VerifyArgs);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeAction {
    Info,
    Dual,
    Matching,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct LatticeArgs {
    #[arg(value_enum, default_value = "info")]
    pub action: LatticeAction,
    /// Built-in name or path to a lattice JSON file.
    #[arg(long, default_value = "square")]
    pub lattice: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PcArgs {
    #[arg(long, default_value = "square")]
    pub lattice: String,
    #[arg(long, default_value = "bond")]
    pub mode: Mode,
    /// Increasing torus side lengths.
    #[arg(long, value_delimiter = ',', default_values_t = [32, 64])]
    pub sizes: Vec<usize>,
    /// Initial sweeps per size.
    #[arg(long, default_value_t = 200)]
    pub sweeps: usize,
    /// Sweeps double up to this cap while the CI exceeds --target-ci.
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    #[arg(long)]
    pub target_ci: Option<f64>,
    /// `wrapping-average` (mean of wrap-either and wrap-both) or
    /// `wrapping-either`.
    #[arg(long, default_value = "wrapping-average")]
    pub locator: Locator,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ThetaArgs {
    #[arg(long, default_value = "square")]
    pub lattice: String,
    #[arg(long, default_value = "bond")]
    pub mode: Mode,
    #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.5, 0.6])]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 32.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 2000)]
    pub replicas: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ZhangArgs {
    #[arg(long, default_value = "square")]
    pub lattice: String,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 8.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 32.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// Division angle; the balance angle when omitted.
    #[arg(long)]
    pub phi: Option<f64>,
    /// First arc of the four-arm event (1 or 2); chosen from the data when
    /// omitted.
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long, default_value_t = 2000)]
    pub replicas: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TriArgs {
    /// Probability of the (1,1) diagonal in each face.
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [16, 32])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub sweeps: usize,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    #[arg(long)]
    pub target_ci: Option<f64>,
    /// Site probability for the coupling check against the X lattice.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Coupled samples compared against the X lattice; 0 skips the check.
    #[arg(long, default_value_t = 200)]
    pub equivalence_replicas: usize,
    #[arg(long, default_value_t = 8)]
    pub equivalence_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Torus,
    Box,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FkArgs {
    #[arg(long, default_value = "square")]
    pub lattice: String,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// Edge probability for every bond class not set by --p1/--p2/--p3.
    #[arg(long)]
    pub p: Option<f64>,
    /// Per-class probabilities, in sorted order of the bond class names.
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long)]
    pub p2: Option<f64>,
    #[arg(long)]
    pub p3: Option<f64>,
    #[arg(long, default_value = "free")]
    pub boundary: Boundary,
    #[arg(long, value_enum, default_value = "torus")]
    pub topology: Topology,
    #[arg(long, default_value_t = 16)]
    pub size: usize,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 200)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 8)]
    pub chains: usize,
    /// Locate the wrapping threshold by bisection instead of sampling at p.
    #[arg(long)]
    pub probe: bool,
    /// Torus sizes for --probe.
    #[arg(long, value_delimiter = ',', default_values_t = [8, 16])]
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Dual,
    Engine,
    Zhang,
    Fk,
    Tri,
    All,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Lattice for the dual suite; every built-in when omitted.
    #[arg(long)]
    pub lattice: Option<String>,
}
