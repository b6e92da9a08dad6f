//! Resolved run configuration. Values come from command-line flags, then
//! an optional JSON config file, then built-in defaults, in that order of
//! precedence. The resolved value is stamped into every JSON output.

use std::path::Path;

use ccg_core::congestion::{CostKind, DEFAULT_CONGESTION};
use ccg_core::equilibrium::{Variant, DEFAULT_ETA};
use ccg_core::stackelberg::{DEFAULT_HEURISTIC_DELTA, DEFAULT_OUTER_STEP};
use ccg_core::zdd::ClassKind;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClassArg {
    Paths,
    Hamilton,
    Steiner,
}

impl From<ClassArg> for ClassKind {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Paths => ClassKind::Paths,
            ClassArg::Hamilton => ClassKind::Hamilton,
            ClassArg::Steiner => ClassKind::Steiner,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CostArg {
    Fractional,
    Exponential,
}

impl From<CostArg> for CostKind {
    fn from(c: CostArg) -> Self {
        match c {
            CostArg::Fractional => CostKind::Fractional,
            CostArg::Exponential => CostKind::Exponential,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Accel,
    Naive,
    Fw,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Accel => Variant::Accelerated,
            VariantArg::Naive => Variant::NaiveSoftmin,
            VariantArg::Fw => Variant::StandardFw,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerArg {
    Pgd,
    Heuristic,
    Grid,
}

/// Every tunable of every command, fully resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub class: ClassArg,
    pub cost: CostArg,
    pub congestion: f64,
    pub variant: VariantArg,
    pub eta: f64,
    pub iterations: usize,
    /// Leader parameter for `equilibrium`, start point for `stackelberg`;
    /// `None` means all ones.
    pub theta: Option<Vec<f64>>,
    pub optimizer: OptimizerArg,
    pub outer_iters: usize,
    pub outer_step: f64,
    pub stall_tolerance: f64,
    pub step: f64,
    pub delta: f64,
    pub max_grid_points: u64,
    pub seed: u64,
    pub jobs: usize,
    pub no_clock: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            class: ClassArg::Paths,
            cost: CostArg::Fractional,
            congestion: DEFAULT_CONGESTION,
            variant: VariantArg::Accel,
            eta: DEFAULT_ETA,
            iterations: 300,
            theta: None,
            optimizer: OptimizerArg::Pgd,
            outer_iters: 30,
            outer_step: DEFAULT_OUTER_STEP,
            stall_tolerance: 0.0,
            step: 0.05,
            delta: DEFAULT_HEURISTIC_DELTA,
            max_grid_points: 10_000_000,
            seed: 0,
            jobs: 1,
            no_clock: false,
        }
    }
}

/// A config file: any subset of [`RunConfig`]'s fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigOverrides {
    pub class: Option<ClassArg>,
    pub cost: Option<CostArg>,
    pub congestion: Option<f64>,
    pub variant: Option<VariantArg>,
    pub eta: Option<f64>,
    pub iterations: Option<usize>,
    pub theta: Option<Vec<f64>>,
    pub optimizer: Option<OptimizerArg>,
    pub outer_iters: Option<usize>,
    pub outer_step: Option<f64>,
    pub stall_tolerance: Option<f64>,
    pub step: Option<f64>,
    pub delta: Option<f64>,
    pub max_grid_points: Option<u64>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub no_clock: Option<bool>,
}

impl ConfigOverrides {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fields set in `self` win over fields set in `fallback`.
    pub fn or(self, fallback: ConfigOverrides) -> ConfigOverrides {
        macro_rules! pick {
            ($($f:ident),*) => {
                ConfigOverrides { $($f: self.$f.or(fallback.$f)),* }
            };
        }
        pick!(
            class,
            cost,
            congestion,
            variant,
            eta,
            iterations,
            theta,
            optimizer,
            outer_iters,
            outer_step,
            stall_tolerance,
            step,
            delta,
            max_grid_points,
            seed,
            jobs,
            no_clock
        )
    }

    pub fn resolve(self) -> RunConfig {
        let d = RunConfig::default();
        macro_rules! fill {
            ($($f:ident),*) => {
                RunConfig { theta: self.theta.or(d.theta), $($f: self.$f.unwrap_or(d.$f)),* }
            };
        }
        fill!(
            class,
            cost,
            congestion,
            variant,
            eta,
            iterations,
            optimizer,
            outer_iters,
            outer_step,
            stall_tolerance,
            step,
            delta,
            max_grid_points,
            seed,
            jobs,
            no_clock
        )
    }
}

/// Header stamped into JSON outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub ccg_version: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl Stamp {
    pub fn new(config: &RunConfig) -> Self {
        Self { ccg_version: env!("CARGO_PKG_VERSION").to_string(), seed: config.seed, config: config.clone() }
    }
}
