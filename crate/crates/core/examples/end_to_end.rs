//! Full run with the offline mock backends.
//!
//!     cargo run --example end_to_end -- [video.mp4] [out_dir]
//!
//! Without a video a 5 second test pattern is rendered first.

use std::path::PathBuf;

use sva::media::{self, Toolchain};
use sva::pipeline::{self, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let video = args.next().filter(|a| !a.is_empty()).map(PathBuf::from);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sva-end-to-end"));
    std::fs::create_dir_all(&out)?;

    let video = match video {
        Some(v) => v,
        None => {
            let v = out.join("pattern.mp4");
            media::render_test_pattern(&Toolchain::from_env()?, &v, 5.0, 25)?;
            v
        }
    };

    let mut cfg = PipelineConfig::new(&video, &out);
    cfg.seed = 7;
    let report = pipeline::run(&cfg)?;

    let scheme = report.scheme.as_ref().expect("scheme");
    println!("description: {}", report.description.as_deref().unwrap_or(""));
    println!("idea:        {}", scheme.idea);
    println!("sfx:         {:?}", scheme.sfx);
    println!("bgm:         {}", scheme.bgm);
    for g in &report.gate_decisions {
        println!(
            "gate {} attempt {}: mean rms {:.4} -> {}",
            g.track,
            g.attempt,
            g.decision.mean_rms,
            if g.decision.kept { "kept" } else { "discarded" }
        );
    }
    println!("mixed:       {}", report.mixed_tracks.join(" + "));
    for t in &report.timings {
        println!("  {:<12} {:>8.1} ms", t.stage.as_str(), t.ms);
    }
    println!(
        "output:      {}",
        out.join(report.output_path.as_ref().expect("output")).display()
    );
    Ok(())
}
