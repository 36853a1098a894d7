//! The `densify` command line.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use densify_core::synth::SyntheticScene;
use densify_core::ConfigError;

use crate::config::{load_config, parse_resolution, Overrides};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::run::{run_offline, write_outputs, RunOptions};
use crate::synth::{make_dataset, SynthOptions};

#[derive(Debug, Parser)]
#[command(name = "densify", version, about = "Dense depth panoramas and point clouds from posed 360° keyframes")]
pub struct Cli {
    /// Only log errors
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    /// Log debug detail
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Densify a dataset into a point cloud
    Run(RunArgs),
    /// Evaluate a run directory against its dataset
    Eval {
        dataset: PathBuf,
        out_dir: PathBuf,
    },
    /// Render a synthetic dataset
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub dataset: PathBuf,
    /// TOML or JSON engine configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start every depth map from random planes
    #[arg(long)]
    pub no_warp: bool,
    /// Write the filtered depth maps as 16-bit PNGs
    #[arg(long)]
    pub save_depth: bool,
    /// Depth map resolution, WIDTHxHEIGHT
    #[arg(long)]
    pub resolution: Option<String>,
    /// Worker threads (all cores by default); results do not depend on it
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// room, corridor or sphere
    pub scene: String,
    #[arg(long)]
    pub keyframes: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Panorama size, WIDTHxHEIGHT
    #[arg(long, default_value = "512x256")]
    pub resolution: String,
    /// Meters between consecutive keyframes
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    /// Landmarks per keyframe
    #[arg(long, default_value_t = 300)]
    pub density: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// `level=<level> target=<module> msg="<message>"` lines on stderr.
pub fn init_logging(quiet: bool, verbose: bool) {
    let level = if quiet {
        log::LevelFilter::Error
    } else if verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Info
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .target(env_logger::Target::Stderr)
        .format(|buf, record| {
            writeln!(
                buf,
                "level={} target={} msg={:?}",
                record.level().as_str().to_ascii_lowercase(),
                record.target(),
                record.args().to_string()
            )
        })
        .try_init();
}

fn run(args: &RunArgs) -> Result<()> {
    let overrides = Overrides {
        seed: args.seed,
        no_warp: args.no_warp,
        save_depth: args.save_depth,
        resolution: args.resolution.clone(),
    };
    let config = load_config(args.config.as_deref(), &overrides)?;
    let dataset = Dataset::load(&args.dataset)?;
    log::info!(
        "{} keyframes at {}x{}",
        dataset.len(),
        dataset.camera.width(),
        dataset.camera.height()
    );
    let output = run_offline(
        &dataset,
        &config,
        &RunOptions {
            workers: args.workers,
        },
    )?;
    write_outputs(&args.out, &dataset, &config, &output)?;
    let m = &output.metrics;
    log::info!(
        "{} points, {} of {} keyframes accepted, mean completeness {:.4}, {:.1}s",
        m.points,
        m.accepted,
        m.keyframes,
        m.mean_completeness,
        m.runtime.wall_seconds
    );
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let scene = SyntheticScene::by_name(&args.scene, args.seed).ok_or_else(|| {
        ConfigError::new(
            "synth.scene",
            format!("unknown scene `{}`; expected room, corridor or sphere", args.scene),
        )
    })?;
    let camera = parse_resolution(&args.resolution)?;
    let mut options = SynthOptions::new(args.keyframes, camera);
    options.step = args.step;
    options.sparse_density = args.density;
    options.seed = args.seed;
    make_dataset(&scene, &options, &args.out)?;
    log::info!("wrote {} keyframes to {}", args.keyframes, args.out.display());
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(args) => run(args),
        Command::Eval { dataset, out_dir } => {
            let dataset = Dataset::load(dataset)?;
            let report = evaluate(&dataset, out_dir)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "points": report.points,
                    "mean_completeness": report.mean_completeness,
                }))
                .expect("serializes")
            );
            Ok(())
        }
        Command::Synth(args) => synth(args),
    }
}

/// Parses the process arguments, runs the command and maps errors to exit
/// codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    init_logging(cli.quiet, cli.verbose);
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> ExitCode {
    log::error!("{} error: {e}", e.category());
    ExitCode::from(e.exit_code())
}
