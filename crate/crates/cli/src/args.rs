use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kernelforge::metrics::Margin;
use kernelforge::optimizer::SearchConfig;
use kernelforge::staircase::QuadratureConfig;
use kernelforge::{Boundary, OutputGrid};

#[derive(Parser, Debug)]
#[command(
    name = "kernelforge",
    version,
    about = "Design, evaluate and apply anisotropy-optimized interpolation kernels"
)]
pub struct Cli {
    /// Worker threads; overrides KERNELFORGE_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the constraints for a kernel shape and optimize its free coefficients.
    Design(DesignArgs),
    /// Staircasing metric of one kernel.
    Eval(EvalArgs),
    /// Resample a PGM image.
    Resample(ResampleArgs),
    /// Zone-plate experiment for one kernel.
    Zoneplate(ZoneplateArgs),
    /// Zone-plate experiment and E_g for several kernels.
    Compare(CompareArgs),
    /// Regenerate the result tables.
    Tables(TablesArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// Scrambled Sobol starts added to the grid.
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
    /// Grid starts per free coefficient.
    #[arg(long, default_value_t = 3)]
    pub grid_per_axis: usize,
    /// Starts are drawn from [-bound, bound] per coefficient.
    #[arg(long, default_value_t = 4.0)]
    pub bound: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u32,
}

impl SearchArgs {
    pub fn config(&self) -> SearchConfig {
        SearchConfig {
            lower: -self.bound,
            upper: self.bound,
            grid_per_axis: self.grid_per_axis,
            quasi_random: self.starts,
            max_iterations: self.max_iterations,
            seed: self.seed,
            ..SearchConfig::default()
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct QuadArgs {
    /// Gauss-Legendre points per axis for non-polynomial kernels.
    #[arg(long, default_value_t = 16)]
    pub order: usize,
}

impl QuadArgs {
    pub fn config(&self) -> QuadratureConfig {
        QuadratureConfig { order: self.order, ..QuadratureConfig::default() }
    }
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct KernelArgs {
    /// Kernel name, e.g. keys, lanczos:3, bspline:3, designed:K_2_4_S.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Kernel JSON file as written by `design`.
    #[arg(long)]
    pub kernel_file: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignMetricArg {
    EgHalf,
    EgAvg,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    /// Support radius, a multiple of 1/2 (e.g. 2 or 5/2).
    #[arg(long)]
    pub r: String,
    /// Polynomial degree.
    #[arg(long)]
    pub p: u32,
    /// Impose C1 continuity.
    #[arg(long)]
    pub smooth: bool,
    #[arg(long, value_enum, default_value_t = DesignMetricArg::EgHalf)]
    pub metric: DesignMetricArg,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Kernel JSON destination (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Optimization report JSON destination.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMetric {
    /// E_g(theta).
    Eg,
    /// Root of the theta-averaged E_g².
    EgAvg,
    /// E_d(theta).
    Ed,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, value_enum, default_value_t = EvalMetric::Eg)]
    pub metric: EvalMetric,
    /// Edge offset as a rational, e.g. 1/2.
    #[arg(long, default_value = "1/2")]
    pub theta: String,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Directory for the interpolated edge, its gradient magnitude (PGM) and isolines (CSV).
    #[arg(long)]
    pub edge_field: Option<PathBuf>,
    /// Source samples per side of the edge field.
    #[arg(long, default_value_t = 8)]
    pub field_size: usize,
    /// Output samples per source sample in the edge field.
    #[arg(long, default_value_t = 16)]
    pub field_upscale: u32,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthArg {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

#[derive(Args, Debug)]
pub struct ResampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Output samples per input sample, e.g. 3/2.
    #[arg(long)]
    pub scale: String,
    /// Input position of output sample 0, e.g. -1/4.
    #[arg(long, default_value = "0")]
    pub phase: String,
    #[arg(long, default_value_t = Boundary::Replicate, value_parser = parse_boundary)]
    pub boundary: Boundary,
    #[arg(long, default_value_t = OutputGrid::Cells, value_parser = parse_grid)]
    pub grid: OutputGrid,
    #[arg(long, value_enum, default_value_t = DepthArg::Eight)]
    pub depth: DepthArg,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ZonePlateArgs {
    #[arg(long, default_value_t = 6.0)]
    pub frequency: f64,
    #[arg(long, default_value_t = 30)]
    pub source_rate: u32,
    #[arg(long, default_value_t = 12)]
    pub upscale: u32,
    /// endpoints: 31 -> 361 samples; cells: 30 -> 360.
    #[arg(long, default_value_t = OutputGrid::Endpoints, value_parser = parse_grid)]
    pub grid: OutputGrid,
    /// What lies beyond the sampled square: analytic, replicate, reflect or zero.
    #[arg(long, default_value_t = Margin::Analytic, value_parser = parse_margin)]
    pub margin: Margin,
}

#[derive(Args, Debug)]
pub struct ZoneplateArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub setup: ZonePlateArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Interpolated zone plate as 16-bit PGM.
    #[arg(long)]
    pub image: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Comma-separated kernel names; the full comparison table when absent.
    #[arg(long, value_delimiter = ',')]
    pub kernels: Vec<String>,
    #[command(flatten)]
    pub setup: ZonePlateArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Directory for one 16-bit PGM per kernel.
    #[arg(long)]
    pub images: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    FreeVars,
    Kernels,
    Coefficients,
    All,
}

#[derive(Args, Debug)]
pub struct TablesArgs {
    #[arg(long, value_enum, default_value_t = Which::All)]
    pub which: Which,
    /// Write free_vars.csv, kernels.csv and coefficients.txt here instead of stdout.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[command(flatten)]
    pub setup: ZonePlateArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub search: SearchArgs,
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    s.parse().map_err(|e: kernelforge::Error| e.to_string())
}

fn parse_grid(s: &str) -> Result<OutputGrid, String> {
    s.parse().map_err(|e: kernelforge::Error| e.to_string())
}

fn parse_margin(s: &str) -> Result<Margin, String> {
    s.parse().map_err(|e: kernelforge::Error| e.to_string())
}
