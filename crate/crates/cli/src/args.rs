use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use powersum_core::FormulaVariant;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "powersum",
    version,
    about = "Density, distribution and characteristic function of sums of powered normals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the density on a grid.
    Density {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
        /// Formula parameterization.
        #[arg(long, value_enum, default_value_t = VariantArg::Accepted)]
        variant: VariantArg,
    },
    /// Evaluate the distribution function P(X < c) on a grid.
    Cdf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Evaluate the characteristic function E[exp(itX)] on a grid of t.
    Cf {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        tmin: f64,
        #[arg(long, allow_hyphen_values = true)]
        tmax: f64,
        #[arg(long)]
        points: usize,
    },
    /// Run the invariant checks and the formula adjudication.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
    },
    /// Monte Carlo sample and Kolmogorov-Smirnov comparison.
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, value_enum)]
        against: Option<Against>,
        /// Emit this many empirical quantiles as rows instead of the KS row.
        #[arg(long)]
        quantiles: Option<usize>,
    },
    /// Repeat a run recorded in a manifest file.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        /// Write output here instead of the recorded destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct Common {
    /// Power applied to each normal variable (at least 3).
    #[arg(long)]
    pub d: u32,
    /// Number of summed terms.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Contour rotation, 0 < eps < pi/(2d). Defaults to pi/(4d).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Relative quadrature tolerance, at least 1e-13; the absolute one is tol * 1e-2.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, Args)]
pub struct Grid {
    #[arg(long, allow_hyphen_values = true)]
    pub xmin: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub xmax: f64,
    #[arg(long)]
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Accepted,
    Statement,
    Proof,
}

impl From<VariantArg> for FormulaVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Accepted => FormulaVariant::Accepted,
            VariantArg::Statement => FormulaVariant::Statement,
            VariantArg::Proof => FormulaVariant::Proof,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Against {
    EngineCdf,
    ExactCdf,
}
