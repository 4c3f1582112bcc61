use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gpa_core::{RangeSpec, SpatialKernel};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "gpa", version, about = "Fast bilateral filtering with a guaranteed error bound")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Filter an image with the fast approximation
    Filter(FilterArgs),
    /// Filter an image with the exact brute-force bilateral filter
    Reference(ReferenceArgs),
    /// Estimate the approximation order by every available method
    Order(OrderArgs),
    /// Run the fast and exact filters on one image and report their difference
    Compare(CompareArgs),
    /// Measure the worst-case range-kernel error against its tail bound
    KernelError(KernelErrorArgs),
    /// Time the fast filter across orders and box window sizes
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spatial {
    Gaussian,
    Box,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct SpatialArgs {
    /// Spatial kernel
    #[arg(long, value_enum, default_value = "gaussian")]
    pub spatial: Spatial,
    /// Gaussian spatial scale (window half-width is ceil(3 sigma_s))
    #[arg(long)]
    pub sigma_s: Option<f64>,
    /// Box window half-width W (the window is (2W+1)^2)
    #[arg(long)]
    pub window: Option<usize>,
}

impl SpatialArgs {
    pub fn kernel(&self) -> Result<SpatialKernel, CliError> {
        match self.spatial {
            Spatial::Gaussian => {
                let s = self
                    .sigma_s
                    .ok_or_else(|| CliError::Usage("--spatial gaussian requires --sigma-s".into()))?;
                Ok(SpatialKernel::gaussian(s)?)
            }
            Spatial::Box => {
                let w = self
                    .window
                    .ok_or_else(|| CliError::Usage("--spatial box requires --window".into()))?;
                Ok(SpatialKernel::box_filter(w)?)
            }
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RangeArgs {
    /// Half range T of the input intensities
    #[arg(long, default_value_t = 128.0)]
    pub half_range: f64,
    /// Center t_c of the input intensities
    #[arg(long, default_value_t = 128.0)]
    pub center: f64,
}

impl RangeArgs {
    pub fn spec(&self) -> Result<RangeSpec, CliError> {
        Ok(RangeSpec::new(self.half_range, self.center)?)
    }
}

#[derive(Args, Debug, Clone)]
pub struct ReportArgs {
    /// Write the report here instead of standard output
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub report_format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[command(flatten)]
    pub spatial: SpatialArgs,
    #[arg(long)]
    pub sigma_r: f64,
    /// Target worst-case pixel error; selects the order automatically
    #[arg(long, conflicts_with = "order", required_unless_present = "order")]
    pub delta: Option<f64>,
    /// Explicit approximation order N
    #[arg(long)]
    pub order: Option<usize>,
    /// Accept sigma_r below 10, at the risk of a numeric-range failure
    #[arg(long)]
    pub allow_small_sigma_r: bool,
    #[command(flatten)]
    pub range: RangeArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReferenceArgs {
    #[command(flatten)]
    pub spatial: SpatialArgs,
    #[arg(long)]
    pub sigma_r: f64,
    #[command(flatten)]
    pub report: ReportArgs,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct OrderArgs {
    #[command(flatten)]
    pub spatial: SpatialArgs,
    #[arg(long)]
    pub sigma_r: f64,
    /// Kernel error budget
    #[arg(long, conflicts_with = "delta", required_unless_present = "delta")]
    pub epsilon: Option<f64>,
    /// Target worst-case pixel error; needs the spatial kernel for w(0)
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    pub range: RangeArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub spatial: SpatialArgs,
    #[arg(long)]
    pub sigma_r: f64,
    #[arg(long, conflicts_with = "order", required_unless_present = "order")]
    pub delta: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub allow_small_sigma_r: bool,
    #[command(flatten)]
    pub range: RangeArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    pub input: PathBuf,
}

#[derive(Args, Debug)]
pub struct KernelErrorArgs {
    #[arg(long)]
    pub sigma_r: f64,
    #[arg(long)]
    pub order: usize,
    #[arg(long, default_value_t = 128.0)]
    pub half_range: f64,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub spatial: SpatialArgs,
    #[arg(long, default_value_t = 30.0)]
    pub sigma_r: f64,
    /// Orders to time with the chosen spatial kernel
    #[arg(long, value_delimiter = ',', default_value = "10,60")]
    pub orders: Vec<usize>,
    /// Box half-widths to time at the first order
    #[arg(long, value_delimiter = ',', default_value = "5,20")]
    pub windows: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Side of the random test image used when no input is given
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub report: ReportArgs,
    pub input: Option<PathBuf>,
}
