//! Flag definitions for every subcommand.
//!
//! Conventions shared across the surface: rationals are written `a/b` (or a
//! bare integer), polynomials as comma-separated coefficients `c1,c2,...`
//! of n, n^2, ... (no constant slot exists, so P(0) = 0 syntactically),
//! and torus points as comma-separated rationals `a1/b1,a2/b2,...`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Deterministic experiments over finite integer sets: recurrence profiles,
/// exponential sums, rational-arc geometry, smooth decompositions, lifts,
/// and periodic counterexamples.
#[derive(Parser, Debug)]
#[command(name = "polyrec", version, about)]
pub struct Cli {
    /// Reserved worker count; accepted for forward compatibility and
    /// guaranteed not to change any output byte.
    #[arg(long, global = true, env = "POLYREC_THREADS")]
    pub threads: Option<u32>,
    /// Write the artifact to this path instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Shift-intersection profile n -> |A ∩ (A + P(n))| over [0, L].
    Profile(ProfileArgs),
    /// Shifts in [0, L] whose intersection count clears the slack threshold.
    Returns(ReturnsArgs),
    /// Exponential-sum evaluation, relation residuals, and arc scans.
    #[command(subcommand)]
    Weyl(WeylCmd),
    /// Rational-arc membership verdicts and window-chain overlap counts.
    #[command(subcommand)]
    Arcs(ArcsCmd),
    /// Transform-side identities and region masses.
    #[command(subcommand)]
    Spectral(SpectralCmd),
    /// Two-branch verdict: many good shifts, or annulus mass.
    Dichotomy(DichotomyArgs),
    /// Lift a 1-D set onto a k-dimensional tile and verify the inclusion.
    Lift(LiftArgs),
    /// Periodic sets whose recurrence vanishes on a window progression.
    #[command(subcommand)]
    Counterexample(CounterexampleCmd),
    /// Randomized experiment harnesses.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// Set file: first line `#N=<int>`, then one member per line.
    #[arg(long)]
    pub set: PathBuf,
    /// Shift polynomial coefficients `c1,c2,...`.
    #[arg(long)]
    pub poly: String,
    /// Largest shift index L (inclusive).
    #[arg(long = "L")]
    pub l: u64,
    /// csv: rows `n,Pn,count,ratio`; json: the profile fields; svg: a plot.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct ReturnsArgs {
    /// Set file: first line `#N=<int>`, then one member per line.
    #[arg(long)]
    pub set: PathBuf,
    /// Shift polynomial coefficients `c1,c2,...`.
    #[arg(long)]
    pub poly: String,
    /// Largest shift index L (inclusive).
    #[arg(long = "L")]
    pub l: u64,
    /// Slack parameter epsilon as a rational `a/b` in (0, 1].
    #[arg(long)]
    pub eps: String,
}

#[derive(Subcommand, Debug)]
pub enum WeylCmd {
    /// One exponential sum at a rational point.
    Eval(WeylEvalArgs),
    /// Max residuals of the three window relations over random points.
    Relations(WeylRelationsArgs),
    /// Largest plain-sum modulus over points off the major-arc union.
    Scan(WeylScanArgs),
}

#[derive(Args, Debug)]
pub struct WeylEvalArgs {
    /// Point `a1/b1,a2/b2,...`; its length is the dimension k.
    #[arg(long)]
    pub alpha: String,
    /// Window length mu.
    #[arg(long)]
    pub mu: u64,
    /// Window start: evaluate the (lambda, mu] window sum instead.
    #[arg(long)]
    pub lambda: Option<u64>,
    /// Stride: evaluate the divisibility-restricted sum (needs --lambda).
    #[arg(long)]
    pub q: Option<u64>,
    /// Optional dimension check against the length of --alpha.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct WeylRelationsArgs {
    /// Dimension k.
    #[arg(long)]
    pub k: usize,
    /// Window start lambda (the stride must divide it).
    #[arg(long)]
    pub lambda: u64,
    /// Window length mu (the stride must divide it).
    #[arg(long)]
    pub mu: u64,
    /// Stride q.
    #[arg(long)]
    pub q: u64,
    /// Number of random points.
    #[arg(long, default_value = "64")]
    pub samples: u32,
    /// Seed for the point stream.
    #[arg(long, default_value = "0")]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct WeylScanArgs {
    /// Arc scale eta as a rational `a/b` in (0, 1).
    #[arg(long)]
    pub eta: String,
    /// Window length mu (>= 2).
    #[arg(long)]
    pub mu: u64,
    /// Dimension k.
    #[arg(long)]
    pub k: usize,
    /// Number of random points drawn (kept and discarded together).
    #[arg(long, default_value = "4096")]
    pub samples: u64,
    /// Seed for the point stream.
    #[arg(long, default_value = "0")]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum ArcsCmd {
    /// Membership verdict for one point against one arc system.
    Member(ArcsMemberArgs),
    /// Number of chain windows whose pulled-back annulus holds the point.
    Overlap(ArcsOverlapArgs),
}

#[derive(Args, Debug)]
pub struct ArcsMemberArgs {
    /// Arc scale eta as a rational `a/b` in (0, 1).
    #[arg(long)]
    pub eta: String,
    /// Dimension k.
    #[arg(long)]
    pub k: usize,
    /// Window start lambda.
    #[arg(long)]
    pub lambda: u64,
    /// Window length mu (1 <= mu <= lambda).
    #[arg(long)]
    pub mu: u64,
    /// Point `a1/b1,a2/b2,...` of length k.
    #[arg(long)]
    pub alpha: String,
}

#[derive(Args, Debug)]
pub struct ArcsOverlapArgs {
    /// Arc scale eta as a rational `a/b` in (0, 1).
    #[arg(long)]
    pub eta: String,
    /// Dimension k.
    #[arg(long)]
    pub k: usize,
    /// Window chain `l1:m1,l2:m2,...` (ascending, chain-compatible).
    #[arg(long)]
    pub windows: String,
    /// Point `a1/b1,a2/b2,...` of length k.
    #[arg(long)]
    pub alpha: String,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadMode {
    /// Smallest odd exact grid per axis.
    Minimal,
    /// Next power of two above the minimal grid.
    Pow2,
}

#[derive(Subcommand, Debug)]
pub enum SpectralCmd {
    /// Window-averaged intersection count: exact sum vs grid quadrature.
    Identity(SpectralIdentityArgs),
    /// Transform mass of a box region, closed form (optionally vs grid).
    Mass(SpectralMassArgs),
}

#[derive(Args, Debug)]
pub struct SpectralIdentityArgs {
    /// Grid-set file: first line `#k=<int> #M=<int>`, then one tuple per line.
    #[arg(long)]
    pub grid: PathBuf,
    /// Window start lambda.
    #[arg(long)]
    pub lambda: u64,
    /// Window length mu (>= 1).
    #[arg(long)]
    pub mu: u64,
    /// Quadrature grid style.
    #[arg(long, value_enum, default_value = "minimal")]
    pub mode: QuadMode,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    /// The whole torus.
    Full,
    /// One axis-aligned box from --center and --half.
    Box,
    /// The denominator-q^j box family from --family-q and --family-l.
    Family,
}

#[derive(Args, Debug)]
pub struct SpectralMassArgs {
    /// Grid-set file: first line `#k=<int> #M=<int>`, then one tuple per line.
    #[arg(long)]
    pub grid: PathBuf,
    /// Region shape.
    #[arg(long, value_enum)]
    pub region: RegionKind,
    /// Box center `a1/b1,...` (region=box).
    #[arg(long)]
    pub center: Option<String>,
    /// Box half-widths `a1/b1,...`, each in (0, 1/2] (region=box).
    #[arg(long)]
    pub half: Option<String>,
    /// Family denominator q >= 1 (region=family).
    #[arg(long = "family-q")]
    pub family_q: Option<u64>,
    /// Family scale L as a rational `a/b` (region=family).
    #[arg(long = "family-l")]
    pub family_l: Option<String>,
    /// Pull the region back through the window shear with this start.
    #[arg(long = "pull-back")]
    pub pull_back: Option<u64>,
    /// Also run the grid cross-check at this many points per axis.
    #[arg(long)]
    pub riemann: Option<u64>,
}

#[derive(Args, Debug)]
pub struct DichotomyArgs {
    /// Arc scale eta as a rational `a/b` in (0, 1).
    #[arg(long)]
    pub eta: String,
    /// Slack parameter epsilon as a rational `a/b` in (0, 1].
    #[arg(long)]
    pub eps: String,
    /// Window start lambda.
    #[arg(long)]
    pub lambda: u64,
    /// Window length mu (1 <= mu <= lambda).
    #[arg(long)]
    pub mu: u64,
    /// Grid-set file: first line `#k=<int> #M=<int>`, then one tuple per line.
    #[arg(long)]
    pub set: PathBuf,
}

#[derive(Args, Debug)]
pub struct LiftArgs {
    /// Set file: first line `#N=<int>`, then one member per line.
    #[arg(long)]
    pub set: PathBuf,
    /// Shift polynomial coefficients `c1,c2,...`.
    #[arg(long)]
    pub poly: String,
    /// Slack parameter epsilon as a rational `a/b` in (0, 1].
    #[arg(long)]
    pub eps: String,
    /// Shift range end L used by the optimality test.
    #[arg(long = "L")]
    pub l: u64,
    /// Also write the lifted set as a grid-set file here.
    #[arg(long = "grid-out")]
    pub grid_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum CounterexampleCmd {
    /// Find the periodic descriptor for a polynomial and window length.
    Build(CounterexampleBuildArgs),
    /// Build, then check the vanishing windows up to an index cap.
    Verify(CounterexampleVerifyArgs),
}

#[derive(Args, Debug)]
pub struct CounterexampleBuildArgs {
    /// Shift polynomial coefficients `c1,c2,...` (positive leading).
    #[arg(long)]
    pub poly: String,
    /// Window length L >= 1.
    #[arg(long = "L")]
    pub l: u64,
}

#[derive(Args, Debug)]
pub struct CounterexampleVerifyArgs {
    /// Shift polynomial coefficients `c1,c2,...` (positive leading).
    #[arg(long)]
    pub poly: String,
    /// Window length L >= 1.
    #[arg(long = "L")]
    pub l: u64,
    /// Largest window index j to check.
    #[arg(long = "j-max", default_value = "5")]
    pub j_max: u64,
}

#[derive(Subcommand, Debug)]
pub enum ExperimentCmd {
    /// Return-time densities of random sets over many seeds.
    Khintchine(KhintchineArgs),
}

#[derive(Args, Debug)]
pub struct KhintchineArgs {
    /// Universe size N.
    #[arg(long)]
    pub universe: u64,
    /// Inclusion probability as a rational `a/b` (random sets).
    #[arg(long, conflicts_with = "structured")]
    pub density: Option<String>,
    /// Structured-set grammar `ap:<q>+<j>` | `interval:<a>-<b>` |
    /// `union(<spec>,<spec>)` instead of random sets.
    #[arg(long)]
    pub structured: Option<String>,
    /// Shift polynomial coefficients `c1,c2,...`.
    #[arg(long)]
    pub poly: String,
    /// Slack parameter epsilon as a rational `a/b` in (0, 1].
    #[arg(long)]
    pub eps: String,
    /// Number of trials.
    #[arg(long, default_value = "20")]
    pub trials: u32,
    /// Base seed; trial i uses a stream derived from it.
    #[arg(long, default_value = "0")]
    pub seed: u64,
}
