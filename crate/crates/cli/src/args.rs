use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "boolebell",
    version,
    about = "Simulate and audit EPR-Bohm correlation experiments"
)]
pub struct Cli {
    /// JSON file with default values for any flag; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Master seed; required by `simulate` and `scan-window`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a trial dataset (CSV plus JSON sidecar).
    Simulate(SimulateArgs),
    /// Estimate correlations, the three-term Bell sum and the joint-distribution verdict.
    Audit(AuditArgs),
    /// Exact bounds and cyclicity of an expression.
    Bounds(BoundsArgs),
    /// Decide whether one joint distribution reproduces given correlations.
    Feasibility(FeasibilityArgs),
    /// Filtered correlation versus coincidence window for the time-tag model.
    ScanWindow(ScanArgs),
    /// Check a dataset against the labeling rules.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Quantum,
    Deterministic,
    Timetag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodingArg {
    Spin,
    Polarization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairingArg {
    Greedy,
    SameTrial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BindingArg {
    Auto,
    Shared,
    PerTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lp,
    ClosedForm,
    Both,
}

/// Time-tag model parameters shared by `simulate` and `scan-window`.
#[derive(Debug, Clone, Default, Args)]
pub struct DelayArgs {
    /// Largest detection delay T_max.
    #[arg(long)]
    pub delay_max: Option<f64>,
    /// Exponent d in τ = T_max·r·|sin k(θ−λ)|^d.
    #[arg(long)]
    pub delay_exponent: Option<f64>,
    /// Time between emissions.
    #[arg(long)]
    pub base_interval: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Defaults to spin for quantum/deterministic and polarization for timetag.
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingArg>,
    /// Settings file: a JSON list of {label, x, y, z} or {label, angle}.
    #[arg(long, value_name = "FILE", conflicts_with = "angles")]
    pub settings: Option<PathBuf>,
    /// Coplanar settings by angle in radians, labeled a, b, c, ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub angles: Option<Vec<f64>>,
    /// Setting pairs `x:y`, comma separated; defaults to all pairs x < y in list order.
    #[arg(long, value_name = "A:B,...")]
    pub schedule: Option<String>,
    /// Walk the schedule in order instead of drawing uniformly.
    #[arg(long)]
    pub explicit_schedule: bool,
    /// Number of emitted pairs (trials).
    #[arg(long, value_name = "N")]
    pub pairs: Option<u64>,
    /// Coincidence window; omit (or `inf`) to keep every trial.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, value_enum)]
    pub pairing: Option<PairingArg>,
    #[command(flatten)]
    pub delays: DelayArgs,
    /// Output CSV path (`-` for stdout); the sidecar goes next to it.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    /// Dataset CSV.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Re-filter the trials with this coincidence window before auditing.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, value_enum, default_value = "greedy")]
    pub pairing: PairingArg,
    /// Three setting labels for the Bell sum; defaults to the dataset's settings if there are three.
    #[arg(long, value_delimiter = ',')]
    pub bell_settings: Option<Vec<String>>,
    /// Also evaluate a built-in expression on the data.
    #[arg(long, conflicts_with = "expr")]
    pub builtin: Option<String>,
    /// Also evaluate an expression file on the data.
    #[arg(long, value_name = "FILE")]
    pub expr: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    pub binding: BindingArg,
    /// Read B at a setting as −A at the same setting when evaluating.
    #[arg(long)]
    pub anticorrelated: bool,
    /// JSON report path (`-` for stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    /// boole3, boole3-labeled, decyclified3, bell3, bell3-shared-label, bell3-distinct
    #[arg(long, conflicts_with = "expr", required_unless_present = "expr")]
    pub builtin: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub expr: Option<PathBuf>,
    /// Impose B = −A at equal setting and label.
    #[arg(long)]
    pub anticorrelated: bool,
    /// Relabel every factor occurrence st{M}, st{M+1}, ... before bounding.
    #[arg(long, value_name = "M")]
    pub decyclify: Option<u64>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FeasibilityArgs {
    /// E12,E13,E23 for three variables (A-only form).
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "input",
        required_unless_present = "input"
    )]
    pub corr: Option<Vec<f64>>,
    /// Correlation file {k, pairs: [{i, j, e}], singles: [{i, e}]}, 0-based indices.
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Interpret the values as station-A/station-B correlations and map them with E(AA) = −E(AB).
    #[arg(long)]
    pub ab_form: bool,
    #[arg(long, value_enum, default_value = "both")]
    pub method: MethodArg,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Relative setting angle (radians).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Window grid, e.g. `1e-4:1:log30` (30 per decade), `0.5:1:lin6` or `inf,0.1,0.01`.
    #[arg(long)]
    pub windows: Option<String>,
    /// Emitted pairs per dataset.
    #[arg(long, value_name = "N")]
    pub pairs: Option<u64>,
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingArg>,
    #[command(flatten)]
    pub delays: DelayArgs,
    #[arg(long, value_enum)]
    pub pairing: Option<PairingArg>,
    /// Regenerate the data for every window instead of re-filtering one run.
    #[arg(long)]
    pub no_reuse: bool,
    /// Also audit the Bell sum per window on settings 0, delta, 2·delta.
    #[arg(long)]
    pub bell: bool,
    /// Scan CSV path (`-` for stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Summary JSON path.
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
}
