//! Command-line flags and their resolution against the config file.
//!
//! Precedence is flag, then config file, then built-in default.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use twoatom_core::estimation::SampleSelection;
use twoatom_core::{PairKind, WindowMode, WindowVariant};

use crate::config::ConfigFile;
use crate::error::CliError;

pub const DEFAULT_GAMMA_A: f64 = 1.0;
pub const DEFAULT_GAMMA_B: f64 = 1.5;
pub const DEFAULT_TAU: f64 = 5.0 / 6.0;
pub const DEFAULT_SEED: u64 = 12345;

#[derive(Parser, Debug)]
#[command(name = "twoatom", version, about = "First-photon emission kinetics for atom pairs")]
pub struct Cli {
    /// TOML file of default parameters (keys are the long flag names)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form cumulative curves `t,nf_entangled,nf_product,n_a,n_b`
    Analytic(AnalyticArgs),
    /// Monte Carlo pair histories with post-selection summary
    Simulate(SimulateArgs),
    /// Exponential MLE of first-photon times from a CSV
    Fit(FitArgs),
    /// Likelihood comparison of the entangled and product laws
    Discriminate(DiscriminateArgs),
    /// RK4 integration of the population equations
    Kinetics(KineticsArgs),
    /// Exchange-symmetry checks on two-particle amplitudes
    Wavefunction(WavefunctionArgs),
    /// Re-run the invocation recorded in a manifest
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct RateArgs {
    /// Decay rate of atom A
    #[arg(long)]
    pub gamma_a: Option<f64>,
    /// Decay rate of atom B
    #[arg(long)]
    pub gamma_b: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct WindowArgs {
    /// Coincidence window width
    #[arg(long)]
    pub tau: Option<f64>,
    /// Coincidence rule: grid-bin or pairwise
    #[arg(long)]
    pub mode: Option<WindowMode>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Window probability used by the product curve: taylor or exact
    #[arg(long)]
    pub window_variant: Option<WindowVariant>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    /// entangled or product
    #[arg(long)]
    pub kind: Option<PairKind>,
    #[arg(long)]
    pub n_pairs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; output does not depend on it
    #[arg(long)]
    pub workers: Option<usize>,
    /// Records CSV; the summary goes to `<stem>.summary.json`
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FitArgs {
    /// CSV with a `t_first` column
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// first (t_first only) or pooled (t_first and t_second)
    #[arg(long)]
    pub sample: Option<SampleSelection>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct DiscriminateArgs {
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub window_variant: Option<WindowVariant>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub sample: Option<SampleSelection>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct KineticsArgs {
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Initial number of entangled pairs
    #[arg(long)]
    pub n0: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct WavefunctionArgs {
    #[arg(long, value_enum)]
    pub check: Option<WavefunctionCheck>,
    /// Grid points per axis
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    /// Propagation time
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run
    pub manifest: PathBuf,
    /// Write outputs into this directory instead of the recorded paths
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WavefunctionCheck {
    AntisymmetryPreservation,
    NormPreservation,
    N0fAntisymmetric,
    N0fProduct,
    N0fSymmetricInput,
    SwapOverlap,
    GaussianSpreading,
    /// Every check except n0f-symmetric-input, which is expected to fail
    #[default]
    All,
}

impl WavefunctionCheck {
    pub fn as_str(self) -> &'static str {
        match self {
            WavefunctionCheck::AntisymmetryPreservation => "antisymmetry-preservation",
            WavefunctionCheck::NormPreservation => "norm-preservation",
            WavefunctionCheck::N0fAntisymmetric => "n0f-antisymmetric",
            WavefunctionCheck::N0fProduct => "n0f-product",
            WavefunctionCheck::N0fSymmetricInput => "n0f-symmetric-input",
            WavefunctionCheck::SwapOverlap => "swap-overlap",
            WavefunctionCheck::GaussianSpreading => "gaussian-spreading",
            WavefunctionCheck::All => "all",
        }
    }
}

impl std::str::FromStr for WavefunctionCheck {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticParams {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub tau: f64,
    pub mode: WindowMode,
    pub window_variant: WindowVariant,
    pub t_max: f64,
    pub n_points: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateParams {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub tau: f64,
    pub mode: WindowMode,
    pub kind: PairKind,
    pub n_pairs: u64,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub input: PathBuf,
    pub sample: SampleSelection,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminateParams {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub tau: f64,
    pub mode: WindowMode,
    pub window_variant: WindowVariant,
    pub input: PathBuf,
    pub sample: SampleSelection,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticsParams {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub step: f64,
    pub t_end: f64,
    pub n0: f64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionParams {
    pub check: WavefunctionCheck,
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub t: f64,
    pub out: PathBuf,
}

/// A fully resolved run: what a manifest records and replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", content = "params", rename_all = "lowercase")]
pub enum Invocation {
    Analytic(AnalyticParams),
    Simulate(SimulateParams),
    Fit(FitParams),
    Discriminate(DiscriminateParams),
    Kinetics(KineticsParams),
    Wavefunction(WavefunctionParams),
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Analytic(_) => "analytic",
            Invocation::Simulate(_) => "simulate",
            Invocation::Fit(_) => "fit",
            Invocation::Discriminate(_) => "discriminate",
            Invocation::Kinetics(_) => "kinetics",
            Invocation::Wavefunction(_) => "wavefunction",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Invocation::Simulate(p) => Some(p.seed),
            _ => None,
        }
    }

    pub fn out(&self) -> &PathBuf {
        match self {
            Invocation::Analytic(p) => &p.out,
            Invocation::Simulate(p) => &p.out,
            Invocation::Fit(p) => &p.out,
            Invocation::Discriminate(p) => &p.out,
            Invocation::Kinetics(p) => &p.out,
            Invocation::Wavefunction(p) => &p.out,
        }
    }

    pub fn out_mut(&mut self) -> &mut PathBuf {
        match self {
            Invocation::Analytic(p) => &mut p.out,
            Invocation::Simulate(p) => &mut p.out,
            Invocation::Fit(p) => &mut p.out,
            Invocation::Discriminate(p) => &mut p.out,
            Invocation::Kinetics(p) => &mut p.out,
            Invocation::Wavefunction(p) => &mut p.out,
        }
    }
}

struct Resolver<'a> {
    config: &'a ConfigFile,
}

impl Resolver<'_> {
    fn f64(&self, flag: Option<f64>, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(match flag {
            Some(v) => v,
            None => self.config.f64(key)?.unwrap_or(default),
        })
    }

    fn u64(&self, flag: Option<u64>, key: &str, default: u64) -> Result<u64, CliError> {
        Ok(match flag {
            Some(v) => v,
            None => self.config.u64(key)?.unwrap_or(default),
        })
    }

    fn usize(&self, flag: Option<usize>, key: &str, default: usize) -> Result<usize, CliError> {
        let v = self.u64(flag.map(|v| v as u64), key, default as u64)?;
        usize::try_from(v).map_err(|_| CliError::invalid_parameters(format!("{key} is too large")))
    }

    fn parsed<T>(&self, flag: Option<T>, key: &str) -> Result<T, CliError>
    where
        T: std::str::FromStr + Default,
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.config.parsed(key)?.unwrap_or_default(),
        })
    }

    fn path(&self, flag: Option<PathBuf>, key: &str, default: &str) -> Result<PathBuf, CliError> {
        Ok(match flag {
            Some(p) => p,
            None => self
                .config
                .string(key)?
                .unwrap_or_else(|| default.to_string())
                .into(),
        })
    }

    fn required_path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        match flag {
            Some(p) => Ok(p),
            None => self
                .config
                .string(key)?
                .map(PathBuf::from)
                .ok_or_else(|| CliError::invalid_parameters(format!("--{key} is required"))),
        }
    }

    fn rates(&self, args: &RateArgs) -> Result<(f64, f64), CliError> {
        Ok((
            self.f64(args.gamma_a, "gamma-a", DEFAULT_GAMMA_A)?,
            self.f64(args.gamma_b, "gamma-b", DEFAULT_GAMMA_B)?,
        ))
    }

    fn window(&self, args: &WindowArgs) -> Result<(f64, WindowMode), CliError> {
        Ok((
            self.f64(args.tau, "tau", DEFAULT_TAU)?,
            self.parsed(args.mode, "mode")?,
        ))
    }
}

/// Resolves a parsed subcommand into a complete invocation. `Replay` is not
/// resolvable and yields an error.
pub fn resolve(command: &Command, config: &ConfigFile) -> Result<Invocation, CliError> {
    let r = Resolver { config };
    Ok(match command {
        Command::Analytic(a) => {
            let (gamma_a, gamma_b) = r.rates(&a.rates)?;
            let (tau, mode) = r.window(&a.window)?;
            Invocation::Analytic(AnalyticParams {
                gamma_a,
                gamma_b,
                tau,
                mode,
                window_variant: r.parsed(a.window_variant, "window-variant")?,
                t_max: r.f64(a.t_max, "t-max", 8.0)?,
                n_points: r.usize(a.n_points, "n-points", 1000)?,
                out: r.path(a.out.clone(), "out", "analytic.csv")?,
            })
        }
        Command::Simulate(a) => {
            let (gamma_a, gamma_b) = r.rates(&a.rates)?;
            let (tau, mode) = r.window(&a.window)?;
            let kind = match a.kind {
                Some(k) => k,
                None => r.config.parsed("kind")?.unwrap_or(PairKind::Entangled),
            };
            Invocation::Simulate(SimulateParams {
                gamma_a,
                gamma_b,
                tau,
                mode,
                kind,
                n_pairs: r.u64(a.n_pairs, "n-pairs", 100_000)?,
                seed: r.u64(a.seed, "seed", DEFAULT_SEED)?,
                workers: r.usize(a.workers, "workers", default_workers())?,
                out: r.path(a.out.clone(), "out", "simulate.csv")?,
            })
        }
        Command::Fit(a) => Invocation::Fit(FitParams {
            input: r.required_path(a.input.clone(), "input")?,
            sample: r.parsed(a.sample, "sample")?,
            out: r.path(a.out.clone(), "out", "fit.json")?,
        }),
        Command::Discriminate(a) => {
            let (gamma_a, gamma_b) = r.rates(&a.rates)?;
            let (tau, mode) = r.window(&a.window)?;
            Invocation::Discriminate(DiscriminateParams {
                gamma_a,
                gamma_b,
                tau,
                mode,
                window_variant: r.parsed(a.window_variant, "window-variant")?,
                input: r.required_path(a.input.clone(), "input")?,
                sample: r.parsed(a.sample, "sample")?,
                out: r.path(a.out.clone(), "out", "discriminate.json")?,
            })
        }
        Command::Kinetics(a) => {
            let (gamma_a, gamma_b) = r.rates(&a.rates)?;
            Invocation::Kinetics(KineticsParams {
                gamma_a,
                gamma_b,
                step: r.f64(a.step, "step", 1e-3)?,
                t_end: r.f64(a.t_end, "t-end", 4.0)?,
                n0: r.f64(a.n0, "n0", 1.0)?,
                out: r.path(a.out.clone(), "out", "kinetics.csv")?,
            })
        }
        Command::Wavefunction(a) => Invocation::Wavefunction(WavefunctionParams {
            check: r.parsed(a.check, "check")?,
            n: r.usize(a.n, "n", 256)?,
            x_min: r.f64(a.x_min, "x-min", -20.0)?,
            x_max: r.f64(a.x_max, "x-max", 20.0)?,
            t: r.f64(a.t, "t", 1.0)?,
            out: r.path(a.out.clone(), "out", "wavefunction.json")?,
        }),
        Command::Replay(_) => {
            return Err(CliError::invalid_parameters("replay takes its parameters from the manifest"))
        }
    })
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
