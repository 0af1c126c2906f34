//! Batch front end: one subcommand per pipeline stage so that external
//! disparity maps can be dropped in between `match` and `reconstruct`.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "wavestereo",
    version,
    about = "Stereo reconstruction of water waves from thermal image pairs"
)]
struct Cli {
    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Render a synthetic flume sequence with ground truth.
    Synth(SynthArgs),
    /// Census + semi-global matching of rectified pairs.
    Match(MatchArgs),
    /// Build a self-supervised fine-tuning dataset from relative depth maps.
    Adapt(AdaptArgs),
    /// Point clouds, water-plane fit and world frame from disparities.
    Reconstruct(ReconstructArgs),
    /// Elevation series and wave statistics at a virtual probe.
    Series(SeriesArgs),
    /// Reference-free photometric scores of a disparity map.
    Eval(EvalArgs),
    /// Quantization error budget over a depth range.
    Budget(BudgetArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Scene description (JSON); the default flume scene if omitted.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub frames: usize,
    /// Time of the first frame, s.
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    /// Render only the sensor window `x0,y0,width,height`.
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<usize>>,
    /// Probe position `x,y` in m; the principal-ray footprint if omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub probe: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct MatchArgs {
    #[arg(long, requires = "right", conflicts_with = "input_dir")]
    pub left: Option<PathBuf>,
    #[arg(long, requires = "left")]
    pub right: Option<PathBuf>,
    /// Match every `<stem>_left.pgm` / `<stem>_right.pgm` pair in a directory.
    #[arg(long, required_unless_present = "left")]
    pub input_dir: Option<PathBuf>,
    /// Output PFM for a single pair, directory otherwise.
    #[arg(long)]
    pub out: PathBuf,
    /// Full parameter set as JSON; overrides the flags below.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, required_unless_present = "params")]
    pub d_min: Option<usize>,
    #[arg(long, required_unless_present = "params")]
    pub d_max: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub census_window: usize,
    #[arg(long, default_value_t = 8)]
    pub paths: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lr_threshold: f64,
    #[arg(long)]
    pub no_subpixel: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct AdaptArgs {
    /// Directory of `<stem>_left.pgm` / `<stem>_right.pgm` pairs.
    #[arg(long)]
    pub dataset_dir: PathBuf,
    /// Directory of `<stem>.pfm` or `<stem>.pgm` relative depth maps.
    #[arg(long)]
    pub depth_dir: PathBuf,
    #[arg(long)]
    pub d_min: f64,
    #[arg(long)]
    pub d_max: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fill holes with mid-grey instead of the real right image.
    #[arg(long)]
    pub constant_fill: bool,
    #[arg(long, default_value_t = 2)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 20_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 320)]
    pub crop_height: usize,
    #[arg(long, default_value_t = 512)]
    pub crop_width: usize,
    #[arg(long)]
    pub no_pretrained: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    /// Directory of `<stem>_disp.pfm` files (any `.pfm` is accepted).
    #[arg(long)]
    pub disp_dir: PathBuf,
    #[arg(long)]
    pub calib: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Still-water disparity used for the plane fit; the first frame if omitted.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Directory of `<stem>_left.pgm` images for point intensities.
    #[arg(long)]
    pub images_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0.002)]
    pub inlier_threshold: f64,
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.5)]
    pub min_inlier_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cell size of the deviation map, m.
    #[arg(long, default_value_t = 0.01)]
    pub cell: f64,
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SeriesArgs {
    /// Directory of world-frame `.ply` clouds, one per frame in name order.
    #[arg(long)]
    pub cloud_dir: PathBuf,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub probe: Vec<f64>,
    #[arg(long, default_value_t = 0.005)]
    pub radius: f64,
    #[arg(long, default_value_t = 50.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    /// Reference probe record (CSV) to fit against.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    #[arg(long)]
    pub disp: PathBuf,
    /// Report path; the report is also printed on stdout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BudgetArgs {
    #[arg(long)]
    pub calib: PathBuf,
    #[arg(long)]
    pub z_min: f64,
    #[arg(long)]
    pub z_max: f64,
    #[arg(long, default_value_t = 21)]
    pub n: usize,
    /// Positioning error, px.
    #[arg(long, default_value_t = 1.0)]
    pub e: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::computation(e.to_string()))?;
    let echo = commands::ConfigEcho::new(&cli.command, cli.threads);
    match &cli.command {
        Command::Synth(a) => commands::synth(a, &echo),
        Command::Match(a) => commands::match_pairs(a, &echo),
        Command::Adapt(a) => commands::adapt(a, &echo),
        Command::Reconstruct(a) => commands::reconstruct(a, &echo),
        Command::Series(a) => commands::series(a, &echo),
        Command::Eval(a) => commands::eval(a, &echo),
        Command::Budget(a) => commands::budget(a, &echo),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError {
                error: "Usage",
                path: None,
                message: e.render().to_string().trim().to_string(),
                code: EXIT_USAGE,
            };
            eprintln!("{}", err.to_json());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code)
        }
    }
}
