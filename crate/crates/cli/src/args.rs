use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stratbundle::config::Tolerances;

#[derive(Debug, Parser)]
#[command(name = "svb", version, about = "Checks on sampled stratified vector bundles")]
pub struct Cli {
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Tolerance overrides. Each flag can also be set through `SVB_TOL_*`.
#[derive(Debug, Args)]
pub struct TolArgs {
    /// Orthonormality tolerance for subspace representations.
    #[arg(long, global = true, env = "SVB_TOL_ORTHO")]
    pub tol_ortho: Option<f64>,
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, global = true, env = "SVB_TOL_RANK")]
    pub tol_rank: Option<f64>,
    /// Tolerance for residual-based verdicts.
    #[arg(long, global = true, env = "SVB_TOL_CHECK")]
    pub tol_check: Option<f64>,
    /// Finite-difference step for vertical derivatives.
    #[arg(long, global = true, env = "SVB_TOL_STEP")]
    pub step: Option<f64>,
    /// Single-linkage radius for connected components.
    #[arg(long, global = true, env = "SVB_TOL_R_CC")]
    pub r_cc: Option<f64>,
    /// Distance at which two strata count as touching.
    #[arg(long, global = true, env = "SVB_TOL_EPS_TOUCH")]
    pub eps_touch: Option<f64>,
    /// Covering radius for declared closure relations.
    #[arg(long, global = true, env = "SVB_TOL_DELTA_COVER")]
    pub delta_cover: Option<f64>,
    /// Number of trailing sequence items examined for convergence.
    #[arg(long, global = true, env = "SVB_TOL_TAIL_LEN")]
    pub tail_len: Option<usize>,
    /// Radius for grouping `h₀` images into base points.
    #[arg(long, global = true, env = "SVB_TOL_CLUSTER_RADIUS")]
    pub cluster_radius: Option<f64>,
}

impl TolArgs {
    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            tol_ortho: self.tol_ortho.unwrap_or(d.tol_ortho),
            tol_rank: self.tol_rank.unwrap_or(d.tol_rank),
            tol_check: self.tol_check.unwrap_or(d.tol_check),
            step: self.step.unwrap_or(d.step),
            r_cc: self.r_cc.or(d.r_cc),
            eps_touch: self.eps_touch.or(d.eps_touch),
            delta_cover: self.delta_cover.or(d.delta_cover),
            tail_len: self.tail_len.unwrap_or(d.tail_len),
            cluster_radius: self.cluster_radius.unwrap_or(d.cluster_radius),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Leave the timestamp out of the report.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Write the report to a file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Audit a stratification, a bundle or a functor.
    #[command(subcommand)]
    Check(CheckCmd),
    /// Apply a linear functor fiberwise to a bundle.
    ApplyFunctor(ApplyFunctorArgs),
    /// Monoid actions by `(ℝ, ·)`.
    #[command(subcommand)]
    Monoid(MonoidCmd),
    /// Finite group actions on bundles.
    #[command(subcommand)]
    Equivariant(EquivariantCmd),
    /// Singular foliations given by polynomial vector fields.
    #[command(subcommand)]
    Foliation(FoliationCmd),
    /// Write the standard fixture corpus into a directory.
    Fixtures(FixturesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check(CheckCmd::Frontier(_)) => "check frontier",
            Command::Check(CheckCmd::WhitneyA(_)) => "check whitney-a",
            Command::Check(CheckCmd::Orthogonality(_)) => "check orthogonality",
            Command::Check(CheckCmd::Bundle(_)) => "check bundle",
            Command::ApplyFunctor(_) => "apply-functor",
            Command::Monoid(MonoidCmd::Analyze(_)) => "monoid analyze",
            Command::Equivariant(EquivariantCmd::Tilde(_)) => "equivariant tilde",
            Command::Equivariant(EquivariantCmd::Quotient(_)) => "equivariant quotient",
            Command::Foliation(FoliationCmd::Stratify(_)) => "foliation stratify",
            Command::Foliation(FoliationCmd::Bundle(_)) => "foliation bundle",
            Command::Fixtures(_) => "fixtures",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum CheckCmd {
    /// Frontier condition, and optionally local finiteness.
    Frontier(FrontierArgs),
    /// Whitney condition A along declared or generated sequences.
    WhitneyA(WhitneyArgs),
    /// `F(P_W) = P_{F(W)}` on subspaces or on every fiber of a bundle.
    Orthogonality(OrthogonalityArgs),
    /// Rank constancy and representation of every fiber.
    Bundle(BundleArgs),
}

#[derive(Debug, Args)]
pub struct FrontierArgs {
    #[arg(long, value_name = "PATH")]
    pub strata: PathBuf,
    /// Also count strata meeting the ball of this radius around each sample.
    #[arg(long, value_name = "RADIUS")]
    pub local_finiteness: Option<f64>,
    /// Largest number of strata a ball may meet.
    #[arg(long, default_value_t = stratbundle::config::DEFAULT_LOCAL_FINITENESS_THRESHOLD)]
    pub threshold: usize,
    /// Report file, as `--report`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// `radial:X0,COUNT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AutoSequence {
    pub x0: usize,
    pub count: usize,
}

impl FromStr for AutoSequence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let rest = s
            .strip_prefix("radial:")
            .ok_or_else(|| format!("expected radial:X0,COUNT, got {s}"))?;
        let (x0, count) = rest
            .split_once(',')
            .ok_or_else(|| format!("expected radial:X0,COUNT, got {s}"))?;
        let x0 = x0.trim().parse().map_err(|e| format!("bad x0 index: {e}"))?;
        let count: usize = count.trim().parse().map_err(|e| format!("bad count: {e}"))?;
        if count == 0 {
            return Err("count must be positive".into());
        }
        Ok(Self { x0, count })
    }
}

#[derive(Debug, Args)]
pub struct WhitneyArgs {
    #[arg(long, value_name = "PATH")]
    pub bundle: PathBuf,
    /// Scenario file: one scenario or a list of them. Repeatable.
    #[arg(long, value_name = "PATH")]
    pub scenario: Vec<PathBuf>,
    /// Sections spanning the fibers; switches to the section-based check.
    #[arg(long, value_name = "PATH")]
    pub sections: Option<PathBuf>,
    /// Generate sequences by nearest-neighbor selection toward point X0 of
    /// each declared lower stratum. A convenience, not a definition.
    #[arg(long, value_name = "radial:X0,COUNT")]
    pub auto_sequence: Option<AutoSequence>,
    /// With --auto-sequence, only this lower stratum.
    #[arg(long, requires = "auto_sequence")]
    pub target: Option<String>,
    /// With --auto-sequence, only this higher stratum.
    #[arg(long, requires = "auto_sequence")]
    pub source: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OrthogonalityArgs {
    /// Shorthand such as `wedge:2` or `compose(sym:2,sum(id,const:1))`, or a
    /// path to a functor JSON file.
    #[arg(long)]
    pub functor: String,
    /// Subspace file: one subspace or a list of them.
    #[arg(long, value_name = "PATH", required_unless_present = "bundle")]
    pub subspace: Option<PathBuf>,
    /// Check every fiber of a bundle.
    #[arg(long, value_name = "PATH", conflicts_with = "subspace")]
    pub bundle: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    #[arg(long, value_name = "PATH")]
    pub bundle: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ApplyFunctorArgs {
    /// Shorthand or path to a functor JSON file.
    #[arg(long)]
    pub functor: String,
    #[arg(long, value_name = "PATH")]
    pub bundle: PathBuf,
    /// Where to write the transformed bundle.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum MonoidCmd {
    /// Axioms, regularity, and the reconstructed bundle of a regular action.
    Analyze(MonoidArgs),
}

#[derive(Debug, Args)]
pub struct MonoidArgs {
    #[arg(long, value_name = "PATH")]
    pub action: PathBuf,
    /// Base points to cluster `h₀` images around (a list of points).
    #[arg(long, value_name = "PATH")]
    pub base_samples: Option<PathBuf>,
    /// Where to write the reconstruction.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EquivariantCmd {
    /// The bundle of stabilizer-fixed fiber vectors.
    Tilde(EquivariantArgs),
    /// Its quotient over orbit representatives.
    Quotient(EquivariantArgs),
}

#[derive(Debug, Args)]
pub struct EquivariantArgs {
    /// Group file with base and fiber representations.
    #[arg(long, value_name = "PATH")]
    pub group: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub bundle: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FoliationCmd {
    /// Stratify the samples by rank of the distribution (needs --r-cc).
    Stratify(FoliationArgs),
    /// The tangent bundle of the foliation over that stratification.
    Bundle(FoliationArgs),
}

#[derive(Debug, Args)]
pub struct FoliationArgs {
    #[arg(long, value_name = "PATH")]
    pub fields: PathBuf,
    /// With `bundle`: also check Whitney A through the generating fields,
    /// along sequences of this length toward every declared lower stratum.
    #[arg(long, value_name = "COUNT")]
    pub whitney: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    pub dir: PathBuf,
}
