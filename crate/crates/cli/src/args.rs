use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use tgd::metrics::NoiseKind;
use tgd::operators::{Angle, Axis, Construction, Order, ProfileKind};
use tgd::synth::SignalKind;
use tgd::threshold::Threshold;

#[derive(Parser, Debug)]
#[command(name = "tgd", version, about = "TGD operators, denoising and edge detection", args_override_self = true)]
pub struct Cli {
    /// Plain-text `key = value` file; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build an operator and write it as a `tgd-op v1` text file.
    MakeOp(MakeOp),
    /// Generate a test signal or a phantom image/sequence.
    Synth(Synth),
    /// Denoise a CSV signal.
    Denoise(Denoise),
    /// Detect edges in a single image.
    Edge2d(Edge2d),
    /// Static and kinetic edges of a frame sequence.
    Edge3d(Edge3d),
    /// RMSE, PSNR, SSIM and SNR of a test signal or image against a reference.
    Metrics(Metrics),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MakeOp(_) => "make-op",
            Self::Synth(_) => "synth",
            Self::Denoise(_) => "denoise",
            Self::Edge2d(_) => "edge2d",
            Self::Edge3d(_) => "edge3d",
            Self::Metrics(_) => "metrics",
        }
    }
}

#[derive(Args, Debug)]
pub struct MakeOp {
    /// Fixed published operator (T_Gaussian_15 or R_Gaussian_15); other
    /// shape flags are ignored.
    #[arg(long)]
    pub preset: Option<String>,
    /// Profile kind: gaussian, exponential or linear.
    #[arg(long, default_value = "gaussian")]
    pub kind: ProfileKind,
    /// Taps per axis (odd, >= 3).
    #[arg(long, default_value_t = 15)]
    pub size: usize,
    /// Profile shape parameter (Gaussian sigma or exponential rate); defaults
    /// to r/3 and 3/r.
    #[arg(long)]
    pub shape: Option<f64>,
    /// 1 or 2.
    #[arg(long, default_value = "1")]
    pub order: Order,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub rank: u8,
    /// Direction for rank 2: 0, 45, 90 or 135.
    #[arg(long, default_value = "0")]
    pub angle: Angle,
    /// Rank-2 construction: rotational or orthogonal.
    #[arg(long, default_value = "rotational")]
    pub construction: Construction,
    /// Rank-2 Laplacian of TGD instead of a directional operator.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub lot: bool,
    /// Axis for rank 3, or the tagged axis of a rank-1 operator: x, y or t.
    #[arg(long)]
    pub axis: Option<Axis>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PhantomKind {
    Step,
    Ramp,
    Sigmoid,
    Stroke,
    Square,
    Pendulum,
}

#[derive(Args, Debug)]
pub struct Synth {
    /// Test signal X1 or X2 (exclusive with --phantom).
    #[arg(long, conflicts_with = "phantom")]
    pub signal: Option<SignalKind>,
    /// Inclusive sample range `a..b`.
    #[arg(long, default_value = "0..1000", allow_hyphen_values = true)]
    pub n: String,
    /// gaussian or uniform; omitted means noise-free.
    #[arg(long)]
    pub noise: Option<NoiseKind>,
    /// Noise standard deviation.
    #[arg(long, conflicts_with = "snr")]
    pub sigma: Option<f64>,
    /// Target SNR in dB; the draw is rescaled to hit it.
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the noise-free signal here.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Write a `# tgd-signal v1 N=` header line.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub header: bool,

    #[arg(long)]
    pub phantom: Option<PhantomKind>,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    /// Edge (or stroke) column.
    #[arg(long, default_value_t = 32)]
    pub col: usize,
    /// Ramp width (odd), sigmoid width, or stroke thickness.
    #[arg(long, default_value_t = 2.0)]
    pub edge_width: f64,
    #[arg(long, default_value_t = 0.0)]
    pub low: f64,
    #[arg(long, default_value_t = 255.0)]
    pub high: f64,
    /// Frames of a sequence phantom.
    #[arg(long, default_value_t = 5)]
    pub frames: usize,
    /// Square speed in pixels per frame.
    #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
    pub velocity: i64,

    /// Signal CSV file, image file, or frame directory for sequences.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct Denoise {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Noise-free reference for the report.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Metric report CSV (needs --clean).
    #[arg(long, requires = "clean")]
    pub report: Option<PathBuf>,
    /// Per-epoch loss history CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Samples dropped from each end before scoring.
    #[arg(long, default_value_t = 0)]
    pub trim: usize,
    /// Operator taps (odd).
    #[arg(long, default_value_t = 51)]
    pub size: usize,
    #[arg(long, default_value = "gaussian")]
    pub kind: ProfileKind,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_1st: f64,
    #[arg(long, default_value_t = 10.0)]
    pub lambda_2nd: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lambda_offset: f64,
    /// Norm exponent 1, 2 or 3.
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    /// Drop the outer 1/p root.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub squared: bool,
    #[arg(long, default_value_t = 20_000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 10_000)]
    pub decay_every: usize,
    #[arg(long, default_value_t = 0.1)]
    pub decay_factor: f64,
    /// Recorded in the manifest; the optimiser is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// PSNR peak for the report; defaults to max |clean|.
    #[arg(long)]
    pub max: Option<f64>,
    /// SSIM dynamic range for the report; defaults to max - min of clean.
    #[arg(long)]
    pub l: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Tgd1,
    Lot,
    CannyBaseline,
    LogBaseline,
}

#[derive(Args, Debug)]
pub struct Edge2d {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "tgd1")]
    pub method: Method,
    /// Operator taps (odd).
    #[arg(long, default_value_t = 17)]
    pub size: usize,
    #[arg(long, default_value = "gaussian")]
    pub kind: ProfileKind,
    #[arg(long, default_value = "rotational")]
    pub construction: Construction,
    /// Absolute value or percentile such as p70.
    #[arg(long, default_value = "p70")]
    pub low_thr: Threshold,
    #[arg(long, default_value = "p90")]
    pub high_thr: Threshold,
    /// Threshold on |LoT| (or |LoG|) before zero crossings.
    #[arg(long, default_value = "p50")]
    pub lot_thr: Threshold,
    /// Output file stem; defaults to the input stem.
    #[arg(long)]
    pub stem: Option<String>,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct Edge3d {
    /// Directory of PGM/PNG frames or a concatenated PGM stream.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Spatial operator taps (odd).
    #[arg(long, default_value_t = 15)]
    pub spatial_size: usize,
    /// Temporal operator taps (odd).
    #[arg(long, default_value_t = 15)]
    pub temporal_size: usize,
    /// Copies of each frame.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Keep every n-th frame.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Frames per window after rescaling; 0 uses the whole sequence.
    #[arg(long, default_value_t = 0)]
    pub window: usize,
    /// Threshold on |dt|.
    #[arg(long, default_value = "p95")]
    pub thr1: Threshold,
    /// Threshold on |d2t|.
    #[arg(long, default_value = "p95")]
    pub thr2: Threshold,
    #[arg(long, default_value = "p70")]
    pub low_thr: Threshold,
    #[arg(long, default_value = "p90")]
    pub high_thr: Threshold,
    #[arg(long)]
    pub stem: Option<String>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct Metrics {
    /// Reference signal CSV or image.
    #[arg(short, long)]
    pub reference: PathBuf,
    /// Signal CSV or image to score.
    #[arg(short, long)]
    pub test: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub trim: usize,
    #[arg(long)]
    pub max: Option<f64>,
    #[arg(long)]
    pub l: Option<f64>,
    /// Also write the report as CSV.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
