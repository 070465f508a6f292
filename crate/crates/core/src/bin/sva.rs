use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sva::dsp::{read_wav, write_wav};
use sva::media::{self, Toolchain};
use sva::pipeline::{self, postfx, PipelineConfig, TrackClass};

/// Sound effects and music for silent video.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Log progress to stderr (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on one video.
    Run {
        #[arg(long)]
        video: PathBuf,
        /// Output directory (default: the config's, else ./sva-out).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON pipeline config; all backends are mocks without one.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Mood request used to personalize the scheme prompt.
        #[arg(long)]
        personalize: Option<String>,
        /// Stop after scheme generation and print the scheme as JSON.
        #[arg(long)]
        dry_run: bool,
    },
    /// Print duration, streams and key frames of a video.
    Probe {
        video: PathBuf,
        /// Also extract key frames into this directory.
        #[arg(long)]
        keyframes: Option<PathBuf>,
    },
    /// Run the post-processing chain on existing WAV files and mix them.
    Postfx {
        #[arg(long, num_args = 1..)]
        sfx: Vec<PathBuf>,
        #[arg(long)]
        bgm: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Fit every track to this length (default: the longest input).
        #[arg(long)]
        duration: Option<f64>,
        /// Pipeline config whose `dsp` section is used.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

type Failure = Box<dyn std::error::Error>;

fn run(
    video: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    config: Option<PathBuf>,
    personalize: Option<String>,
    dry_run: bool,
) -> Result<(), Failure> {
    let mut cfg = match config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::new("", ""),
    };
    cfg.video_path = video;
    if let Some(out) = out {
        cfg.out_dir = out;
    } else if cfg.out_dir.as_os_str().is_empty() {
        cfg.out_dir = PathBuf::from("sva-out");
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if personalize.is_some() {
        cfg.user_personalization = personalize;
    }
    if dry_run {
        let report = pipeline::dry_run(&cfg)?;
        println!("{}", report.scheme.expect("dry run yields a scheme").to_json());
        return Ok(());
    }
    let report = pipeline::run(&cfg)?;
    let output = report.output_path.expect("successful run has an output");
    println!("{}", cfg.out_dir.join(output).display());
    Ok(())
}

fn probe(video: PathBuf, keyframes: Option<PathBuf>) -> Result<(), Failure> {
    let tools = Toolchain::from_env()?;
    let asset = media::probe(&tools, &video)?;
    let info = media::inspect(&tools, &video)?;
    let mut out = serde_json::json!({ "asset": asset, "streams": info.streams });
    if let Some(dir) = keyframes {
        out["keyframes"] = serde_json::to_value(media::extract_keyframes(&tools, &asset, dir)?)?;
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn postfx_cmd(
    sfx: Vec<PathBuf>,
    bgm: Option<PathBuf>,
    out: PathBuf,
    duration: Option<f64>,
    config: Option<PathBuf>,
) -> Result<(), Failure> {
    let dsp = match config {
        Some(path) => PipelineConfig::from_file(path)?.dsp,
        None => Default::default(),
    };
    let mut inputs = Vec::new();
    let mut names = Vec::new();
    for path in &sfx {
        inputs.push((TrackClass::Sfx, read_wav(path)?));
        names.push(path.display().to_string());
    }
    if let Some(path) = &bgm {
        inputs.push((TrackClass::Bgm, read_wav(path)?));
        names.push(path.display().to_string());
    }
    let result = postfx(&inputs, &dsp, duration)?;
    for (name, track) in names.iter().zip(&result.tracks) {
        match &track.gate {
            Some(g) => eprintln!(
                "{name}: mean rms {:.4} -> {}",
                g.mean_rms,
                if g.kept { "kept" } else { "discarded" }
            ),
            None => eprintln!("{name}: not gated"),
        }
    }
    write_wav(&out, &result.mix)?;
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run {
            video,
            out,
            seed,
            config,
            personalize,
            dry_run,
        } => run(video, out, seed, config, personalize, dry_run),
        Command::Probe { video, keyframes } => probe(video, keyframes),
        Command::Postfx {
            sfx,
            bgm,
            out,
            duration,
            config,
        } => postfx_cmd(sfx, bgm, out, duration, config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
